"""Adversarial objectives and discriminator penalties.

Score conventions: the discriminator emits one unbounded real per sample;
every squashing or transform lives in the loss. Formulas, with r = real
scores and f = fake scores:

    vanilla   D: mean softplus(-r) + mean softplus(f)   G: mean softplus(-f)
    lsgan     D: 1/2 mean (r-1)^2 + 1/2 mean f^2        G: 1/2 mean (f-1)^2
    wgan-gp   D: -mean r + mean f  (+ gradient penalty) G: -mean f
    hinge     D: mean max(0, 1-r) + mean max(0, 1+f)    G: -mean f
    kl-f-gan  D: -mean r + mean exp(f-1)                G: -mean exp(f-1)

The vanilla generator uses the non-saturating form. The kl-f-gan exponent is
clamped at EXP_CLAMP before exponentiation, a guard against overflow from a
briefly overconfident discriminator.

Both penalties differentiate the score w.r.t. the input. For a pile of
affine maps and leaky-relus that gradient is itself an explicit graph over
the same weights: propagate ones through the transposed chain, treating the
activation slopes at the evaluation point as constants. The slopes are
piecewise constant, so parameter gradients of the penalty are exact wherever
the penalty is differentiable, with no second-order engine support needed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .autodiff import Node
from .errors import ContractError

__all__ = [
    "LOSS_KINDS", "Discriminator", "init_discriminator", "disc_loss",
    "gen_loss", "r1_penalty", "wgan_gp",
]

LOSS_KINDS = ("vanilla", "lsgan", "wgan-gp", "hinge", "kl-f-gan")
EXP_CLAMP = 20.0
_GP_NORM_EPS = 1e-12


@dataclass
class Discriminator:
    """Leaky-relu MLP with a single linear output score per sample."""

    weights: list  # Node (d_out x d_in) per layer
    biases: list   # Node (1 x d_out) per layer

    @property
    def in_dim(self) -> int:
        return self.weights[0].value.shape[1]

    def parameters(self):
        out = []
        for i, (w, b) in enumerate(zip(self.weights, self.biases), start=1):
            out.append((f"disc{i}.weight", w))
            out.append((f"disc{i}.bias", b))
        return out

    def scores_node(self, X) -> Node:
        """Score graph for X, a sample matrix or an upstream graph node."""
        h = X if isinstance(X, Node) else ad.const(np.asarray(X, dtype=np.float64))
        last = len(self.weights) - 1
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            h = ad.add(ad.matmul(h, ad.transpose(w)), b)
            if i < last:
                h = ad.leaky_relu(h)
        return h

    def scores(self, X: np.ndarray) -> np.ndarray:
        h = np.asarray(X, dtype=np.float64)
        last = len(self.weights) - 1
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            h = h @ w.value.T + b.value
            if i < last:
                h = np.where(h >= 0.0, h, ad.LEAKY_RELU_ALPHA * h)
        return h


def init_discriminator(in_dim: int, widths=(64, 64), rng=None) -> Discriminator:
    rng = np.random.default_rng() if rng is None else rng
    dims = [in_dim, *widths, 1]
    weights, biases = [], []
    for d_in, d_out in zip(dims, dims[1:]):
        weights.append(ad.param(rng.standard_normal((d_out, d_in)) * np.sqrt(2.0 / d_in)))
        biases.append(ad.param(np.zeros((1, d_out))))
    return Discriminator(weights=weights, biases=biases)


def _check_scores(s: Node, name):
    if s.value.ndim != 2 or s.value.shape[1] != 1 or s.value.shape[0] < 1:
        raise ContractError(f"{name} must be a nonempty (B, 1) score column")


def _minus_mean(s: Node) -> Node:
    return ad.scale(ad.mean_all(s), -1.0)


def _clamped_exp_shift(s: Node) -> Node:
    # exp(min(s - 1, c)) with min built as c - max(0, c - x)
    shifted = ad.sub(s, ad.const([[1.0]]))
    capped = ad.sub(ad.const([[EXP_CLAMP]]),
                    ad.max0(ad.sub(ad.const([[EXP_CLAMP]]), shifted)))
    return ad.exp(capped)


def disc_loss(kind: str, real_scores: Node, fake_scores: Node) -> Node:
    _check_scores(real_scores, "real_scores")
    _check_scores(fake_scores, "fake_scores")
    r, f = real_scores, fake_scores
    one = ad.const([[1.0]])
    if kind == "vanilla":
        return ad.add(ad.mean_all(ad.softplus(ad.scale(r, -1.0))),
                      ad.mean_all(ad.softplus(f)))
    if kind == "lsgan":
        return ad.add(ad.scale(ad.mean_all(ad.square(ad.sub(r, one))), 0.5),
                      ad.scale(ad.mean_all(ad.square(f)), 0.5))
    if kind == "wgan-gp":
        return ad.add(_minus_mean(r), ad.mean_all(f))
    if kind == "hinge":
        return ad.add(ad.mean_all(ad.max0(ad.sub(one, r))),
                      ad.mean_all(ad.max0(ad.add(one, f))))
    if kind == "kl-f-gan":
        return ad.add(_minus_mean(r), ad.mean_all(_clamped_exp_shift(f)))
    raise ContractError(f"unknown loss kind {kind!r}")


def gen_loss(kind: str, fake_scores: Node) -> Node:
    _check_scores(fake_scores, "fake_scores")
    f = fake_scores
    if kind == "vanilla":
        return ad.mean_all(ad.softplus(ad.scale(f, -1.0)))
    if kind == "lsgan":
        return ad.scale(ad.mean_all(ad.square(ad.sub(f, ad.const([[1.0]])))), 0.5)
    if kind in ("wgan-gp", "hinge"):
        return _minus_mean(f)
    if kind == "kl-f-gan":
        return ad.scale(ad.mean_all(_clamped_exp_shift(f)), -1.0)
    raise ContractError(f"unknown loss kind {kind!r}")


def _input_gradient_node(d: Discriminator, X: np.ndarray) -> Node:
    """Graph computing d(sum of scores)/dX, one row per sample.

    Runs the plain forward to record pre-activation signs, then walks the
    chain backwards: g <- (g * slope_mask) @ W. Masks enter as constants.
    """
    n = len(d.weights)
    masks = []
    h = X
    for i in range(n - 1):
        pre = h @ d.weights[i].value.T + d.biases[i].value
        masks.append(np.where(pre >= 0.0, 1.0, ad.LEAKY_RELU_ALPHA))
        h = pre * masks[-1]
    g = ad.matmul(ad.const(np.ones((X.shape[0], 1))), d.weights[n - 1])
    for i in range(n - 2, -1, -1):
        g = ad.matmul(ad.hadamard(g, ad.const(masks[i])), d.weights[i])
    return g


def r1_penalty(d: Discriminator, real_batch: np.ndarray, gamma: float = 10.0) -> Node:
    """(gamma/2) * batch mean of the squared input-gradient norm at real points."""
    X = np.asarray(real_batch, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] < 1:
        raise ContractError("real batch must be a nonempty (B, dim) matrix")
    g = _input_gradient_node(d, X)
    return ad.scale(ad.frob_sq(g), gamma / (2.0 * X.shape[0]))


def wgan_gp(d: Discriminator, real: np.ndarray, fake: np.ndarray, rng,
            lam: float = 10.0) -> Node:
    """lam * mean (|grad at u*real + (1-u)*fake| - 1)^2, u uniform per sample."""
    real = np.asarray(real, dtype=np.float64)
    fake = np.asarray(fake, dtype=np.float64)
    if real.shape != fake.shape:
        raise ContractError(f"batch shapes differ: {real.shape} vs {fake.shape}")
    u = rng.uniform(0.0, 1.0, size=(real.shape[0], 1))
    mixed = u * real + (1.0 - u) * fake
    g = _input_gradient_node(d, mixed)
    norms = ad.sqrt(ad.add(ad.row_sum(ad.square(g)), ad.const([[_GP_NORM_EPS]])))
    return ad.scale(ad.mean_all(ad.square(ad.sub(norms, ad.const([[1.0]])))), lam)
