"""Alternating adversarial training with Adam and a generator moving average.

Each step draws one real batch and one latent batch, updates the
discriminator on them (generator output entering as a constant), then
updates the generator through the discriminator on the same latent draw,
adding the orthogonality penalty of every subspace basis. With
d_steps_per_g > 1 the extra discriminator passes get fresh draws and the
generator shares the last one.

All randomness flows from named child streams of the config seed (real-batch
sampling, z, eps, gradient-penalty mixing, discriminator init), so runs are
bit-reproducible and ablations see identical draws.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .errors import ContractError, ShapeError, TrainingDiverged
from .generators import LinearEigenModel, copy_model
from .losses import LOSS_KINDS, disc_loss, gen_loss, init_discriminator, r1_penalty, wgan_gp
from .subspace import ortho_penalty_node
from .toydata import ToyDataset

__all__ = ["TrainConfig", "TrainHistory", "train", "ema_update"]


@dataclass
class TrainConfig:
    loss: str = "hinge"
    steps: int = 20_000
    batch: int = 128
    lr_g: float = 2e-4
    lr_d: float = 2e-4
    ortho_weight: float = 1.0
    r1_gamma: float = 10.0
    gp_lambda: float = 10.0
    ema_decay: float = 0.999
    d_steps_per_g: int = 1
    seed: int = 0

    def __post_init__(self):
        if self.loss not in LOSS_KINDS:
            raise ContractError(f"loss must be one of {LOSS_KINDS}, got {self.loss!r}")
        if self.steps < 1:
            raise ContractError("steps must be at least 1")
        if self.batch < 2:
            raise ContractError("batch must be at least 2")
        if not 0.0 <= self.ema_decay <= 1.0:
            raise ContractError("ema_decay must lie in [0, 1]")
        if self.d_steps_per_g < 1:
            raise ContractError("d_steps_per_g must be at least 1")


@dataclass
class TrainHistory:
    """Per-step traces; sigma is nan for models without a noise scale."""

    disc_loss: np.ndarray
    gen_loss: np.ndarray
    ortho: np.ndarray
    sigma: np.ndarray

    def __len__(self):
        return len(self.disc_loss)


def ema_update(ema_params, params, decay: float):
    """ema <- decay * ema + (1 - decay) * param, element-wise, in place."""
    for e, p in zip(ema_params, params):
        if e.shape != p.shape:
            raise ShapeError(f"ema {e.shape} vs param {p.shape}")
        e *= decay
        e += (1.0 - decay) * p
    return ema_params


def _draw_latents(model, batch, z_rng, eps_rng):
    Zs = [z_rng.standard_normal((batch, q)) for q in model.latent_dims]
    E = eps_rng.standard_normal((batch, model.noise_dim))
    if isinstance(model, LinearEigenModel):
        return Zs[0], E
    return Zs, E


def train(model, data: ToyDataset, cfg: TrainConfig):
    """Run the full loop; returns (trained model, EMA model, history).

    Aborts with TrainingDiverged the first step any loss or parameter goes
    non-finite.
    """
    samples = data.samples
    n = samples.shape[0]
    if n < 1:
        raise ContractError("dataset is empty")
    if model.data_dim != samples.shape[1]:
        raise ContractError(
            f"model emits dim {model.data_dim}, data has dim {samples.shape[1]}")

    ss = np.random.SeedSequence(cfg.seed)
    data_rng, z_rng, eps_rng, gp_rng, dinit_rng = \
        (np.random.default_rng(c) for c in ss.spawn(5))

    disc = init_discriminator(samples.shape[1], rng=dinit_rng)
    g_params = [p for _, p in model.parameters()]
    d_params = [p for _, p in disc.parameters()]
    g_states = [ad.AdamState.for_param(p.value, lr=cfg.lr_g) for p in g_params]
    d_states = [ad.AdamState.for_param(p.value, lr=cfg.lr_d) for p in d_params]

    ema = copy_model(model)
    ema_values = [p.value for _, p in ema.parameters()]
    subspaces = model.subspaces()

    hist = TrainHistory(*(np.empty(cfg.steps) for _ in range(4)))
    is_linear = isinstance(model, LinearEigenModel)

    def _zero(params):
        for p in params:
            p.grad[...] = 0.0

    for step in range(cfg.steps):
        for extra in range(cfg.d_steps_per_g):
            real = samples[data_rng.integers(0, n, size=cfg.batch)]
            zs, eps = _draw_latents(model, cfg.batch, z_rng, eps_rng)
            fake = model.forward(zs, eps)

            d_obj = disc_loss(cfg.loss, disc.scores_node(real), disc.scores_node(fake))
            if cfg.r1_gamma > 0.0:
                d_obj = ad.add(d_obj, r1_penalty(disc, real, cfg.r1_gamma))
            if cfg.loss == "wgan-gp" and cfg.gp_lambda > 0.0:
                d_obj = ad.add(d_obj, wgan_gp(disc, real, fake, gp_rng, cfg.gp_lambda))
            _zero(d_params)
            ad.backward(d_obj)
            for p, st in zip(d_params, d_states):
                ad.adam_step(p.value, p.grad, st)

        fake_node = model.forward_node(zs, eps)
        g_obj = gen_loss(cfg.loss, disc.scores_node(fake_node))
        ortho_val = 0.0
        if subspaces and cfg.ortho_weight > 0.0:
            pen = ortho_penalty_node(subspaces[0].U)
            for s in subspaces[1:]:
                pen = ad.add(pen, ortho_penalty_node(s.U))
            ortho_val = float(pen.value[0, 0])
            g_obj = ad.add(g_obj, ad.scale(pen, cfg.ortho_weight))
        _zero(g_params)
        _zero(d_params)
        ad.backward(g_obj)
        for p, st in zip(g_params, g_states):
            ad.adam_step(p.value, p.grad, st)
        ema_update(ema_values, [p.value for p in g_params], cfg.ema_decay)

        d_val = float(d_obj.value[0, 0])
        g_val = float(g_obj.value[0, 0])
        hist.disc_loss[step] = d_val
        hist.gen_loss[step] = g_val
        hist.ortho[step] = ortho_val
        hist.sigma[step] = model.sigma() if is_linear else np.nan

        if not (np.isfinite(d_val) and np.isfinite(g_val)):
            raise TrainingDiverged(step, f"disc={d_val!r} gen={g_val!r}")
        for p in g_params + d_params:
            if not np.all(np.isfinite(p.value)):
                raise TrainingDiverged(step, "non-finite parameter")

    return model, ema, hist
