"""Synthetic low-rank datasets: y = A x + b with x from a chosen latent law.

The ambient dimension is free while the intrinsic rank is exactly the latent
dimension, so recovery benchmarks can dial difficulty with one knob. There is
no additive observation noise; the only randomness beyond the latent draw is
in A and b themselves.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ContractError
from .pca import sym_eig

__all__ = ["ToyDataset", "make_dataset", "DISTRIBUTIONS"]

DISTRIBUTIONS = ("normal", "uniform")


@dataclass
class ToyDataset:
    samples: np.ndarray  # (n, D)
    A: np.ndarray        # (D, r) ground-truth transform
    b: np.ndarray        # (D,) ground-truth translation
    dist: str
    rank: int
    ambient: int

    @property
    def n(self) -> int:
        return self.samples.shape[0]


def _min_singular_value(A):
    # Smallest singular value via the gram matrix; A is tall and tiny.
    lam = sym_eig(A.T @ A).eigenvalues[-1]
    return float(np.sqrt(max(lam, 0.0)))


def make_dataset(ambient: int, rank: int, n: int, dist: str, seed) -> ToyDataset:
    """Draw A, b and n latent points; return the transformed samples.

    Deterministic per seed. A is redrawn in the (vanishingly unlikely) case
    it is numerically rank-deficient. n must be at least max(2, 10*rank) so
    the sample covariance pins down the rank.
    """
    if rank > ambient:
        raise ContractError(f"rank {rank} exceeds ambient dimension {ambient}")
    if dist not in DISTRIBUTIONS:
        raise ContractError(f"dist must be one of {DISTRIBUTIONS}, got {dist!r}")
    if n < max(2, 10 * rank):
        raise ContractError(f"n={n} too small; need at least {max(2, 10 * rank)}")
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((ambient, rank))
    while _min_singular_value(A) < 1e-6:
        A = rng.standard_normal((ambient, rank))
    b = rng.standard_normal(ambient)
    if dist == "normal":
        x = rng.standard_normal((n, rank))
    else:
        x = rng.uniform(0.0, 1.0, size=(n, rank))
    return ToyDataset(samples=x @ A.T + b, A=A, b=b, dist=dist,
                      rank=rank, ambient=ambient)
