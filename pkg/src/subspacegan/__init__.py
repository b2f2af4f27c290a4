"""Adversarially trained layer-wise linear subspace generators.

A linear subspace with learned importances sits inside every generator
layer; adversarial training recovers the principal structure of the data,
benchmarked directly against PCA. Includes a self-contained matrix autodiff
engine, a Jacobi eigensolver, five adversarial losses with R1/gradient
penalties, a deterministic trainer, and evaluation metrics.
"""

__version__ = "0.1.0"

from .errors import (ContractError, DegenerateSpectrumError, ShapeError,
                     TrainingDiverged)
from .subspace import (SubspaceModel, importance_order, init_subspace,
                       ortho_penalty, sample_point)
from .generators import (LayeredEigenModel, LinearEigenModel, ablate_subspaces,
                         init_layered_model, init_linear_model, layered_forward,
                         linear_forward, traverse)
from .losses import LOSS_KINDS, Discriminator, disc_loss, gen_loss
from .trainer import TrainConfig, TrainHistory, ema_update, train
from .pca import EigenDecomposition, covariance, pca_basis, ppca_mle, sym_eig
from .toydata import ToyDataset, make_dataset
from .metrics import (AttributePredictor, SimilarityResult, basis_similarity,
                      entropy_coefficient, variance_attribution)
from .bench import BenchReport, BenchSpec, emit_table, run_bench
from .model_io import load_model, save_model

__all__ = [
    "ContractError", "DegenerateSpectrumError", "ShapeError", "TrainingDiverged",
    "SubspaceModel", "importance_order", "init_subspace", "ortho_penalty",
    "sample_point", "LayeredEigenModel", "LinearEigenModel", "ablate_subspaces",
    "init_layered_model", "init_linear_model", "layered_forward", "linear_forward",
    "traverse", "LOSS_KINDS", "Discriminator", "disc_loss", "gen_loss",
    "TrainConfig", "TrainHistory", "ema_update", "train", "EigenDecomposition",
    "covariance", "pca_basis", "ppca_mle", "sym_eig", "ToyDataset", "make_dataset",
    "AttributePredictor", "SimilarityResult", "basis_similarity",
    "entropy_coefficient", "variance_attribution", "BenchReport", "BenchSpec",
    "emit_table", "run_bench", "load_model", "save_model", "__version__",
]
