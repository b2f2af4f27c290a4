"""Evaluation: basis recovery vs a reference, latent information, variance split.

Basis similarity pairs learned directions with reference directions by
maximum-weight matching on absolute cosines (Kuhn's assignment method, solved
with the standard potential/augmenting-path scheme), so neither column order
nor sign can deflate the score. The positional pairing (importance order
against eigenvalue order) is kept alongside as a stricter diagnostic.

The entropy coefficient measures what fraction of a binary attribute's
entropy is explained by one latent coordinate: sweep the coordinate over bin
centers of Uniform[-4.5, 4.5], estimate p(y=1|z) per bin by averaging a
logistic predictor over generator draws, and return
(H(Y) - H(Y|Z)) / H(Y) with natural-log entropies.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ContractError, ShapeError

__all__ = [
    "SimilarityResult", "basis_similarity", "AttributePredictor",
    "entropy_coefficient", "coefficient_from_bin_probs",
    "variance_attribution", "Z_RANGE",
]

Z_RANGE = 4.5


# ---------------------------------------------------------------- similarity

@dataclass
class SimilarityResult:
    per_pair: np.ndarray   # |cos| per matched pair, learned importance order
    matching: np.ndarray   # matching[i] = 0-based ref column for learned i
    mean: float            # average matched |cos|
    ordered_mean: float    # positional pairing diagnostic: mean of C[i, i]


def _min_cost_assignment(cost):
    """Exact square assignment via potentials and augmenting paths, O(n^3)."""
    n = cost.shape[0]
    u = np.zeros(n + 1)
    v = np.zeros(n + 1)
    match = np.zeros(n + 1, dtype=int)   # match[j] = row held by column j
    way = np.zeros(n + 1, dtype=int)
    for i in range(1, n + 1):
        match[0] = i
        j0 = 0
        minv = np.full(n + 1, np.inf)
        used = np.zeros(n + 1, dtype=bool)
        while True:
            used[j0] = True
            i0, delta, j1 = match[j0], np.inf, 0
            for j in range(1, n + 1):
                if used[j]:
                    continue
                cur = cost[i0 - 1, j - 1] - u[i0] - v[j]
                if cur < minv[j]:
                    minv[j] = cur
                    way[j] = j0
                if minv[j] < delta:
                    delta = minv[j]
                    j1 = j
            for j in range(n + 1):
                if used[j]:
                    u[match[j]] += delta
                    v[j] -= delta
                else:
                    minv[j] -= delta
            j0 = j1
            if match[j0] == 0:
                break
        while j0:
            j1 = way[j0]
            match[j0] = match[j1]
            j0 = j1
    row_to_col = np.empty(n, dtype=int)
    for j in range(1, n + 1):
        row_to_col[match[j] - 1] = j - 1
    return row_to_col


def basis_similarity(learned_U, learned_L, ref_U) -> SimilarityResult:
    """Match learned basis columns to reference columns by highest |cos|.

    Learned columns are first sorted by |L| descending (ties keep the lower
    index), so per_pair and the positional diagnostic read in importance
    order; the matched mean itself is order-independent.
    """
    learned_U = np.asarray(learned_U, dtype=np.float64)
    ref_U = np.asarray(ref_U, dtype=np.float64)
    learned_L = np.asarray(learned_L, dtype=np.float64)
    if learned_U.shape != ref_U.shape:
        raise ShapeError(f"basis shapes differ: {learned_U.shape} vs {ref_U.shape}")
    if learned_L.shape != (learned_U.shape[1],):
        raise ShapeError("L length must equal learned column count")

    order = np.argsort(-np.abs(learned_L), kind="stable")
    learned_U = learned_U[:, order]

    def _unit_columns(m, name):
        norms = np.sqrt((m * m).sum(axis=0))
        if np.any(norms < 1e-12):
            raise ContractError(f"{name} has a zero-norm column")
        return m / norms

    C = np.abs(_unit_columns(learned_U, "learned_U").T @ _unit_columns(ref_U, "ref_U"))
    matching = _min_cost_assignment(-C)
    per_pair = C[np.arange(C.shape[0]), matching]
    return SimilarityResult(per_pair=per_pair, matching=matching,
                            mean=float(per_pair.mean()),
                            ordered_mean=float(np.trace(C) / C.shape[0]))


# ---------------------------------------------------------------- entropy

def _sigmoid(x):
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


@dataclass
class AttributePredictor:
    """Synthetic binary attribute: p(y=1 | x) = logistic(k (w.x + c))."""

    w: np.ndarray
    c: float
    k: float

    def __post_init__(self):
        self.w = np.asarray(self.w, dtype=np.float64).ravel()
        if self.k <= 0.0:
            raise ContractError("sharpness k must be positive")

    def prob(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.shape[-1] != self.w.shape[0]:
            raise ShapeError(f"predictor expects dim {self.w.shape[0]}, got {X.shape}")
        return _sigmoid(self.k * (X @ self.w + self.c))


def _binary_entropy(p):
    p = np.atleast_1d(np.asarray(p, dtype=np.float64))
    out = np.zeros_like(p)
    interior = (p > 0.0) & (p < 1.0)
    q = p[interior]
    out[interior] = -(q * np.log(q) + (1.0 - q) * np.log1p(-q))
    return out


def coefficient_from_bin_probs(probs) -> float:
    """Entropy coefficient given per-bin p(y=1|z) under equal bin mass.

    A constant profile carries no information and short-circuits to exactly
    0; otherwise the ratio is clamped into [0, 1] against roundoff.
    """
    probs = np.asarray(probs, dtype=np.float64)
    if probs.ndim != 1 or probs.size < 2:
        raise ContractError("need at least 2 bin probabilities")
    if np.ptp(probs) == 0.0:
        return 0.0
    h_cond = float(_binary_entropy(probs).mean())
    h_marg = float(_binary_entropy(probs.mean())[0])
    if h_marg < 1e-12:
        return 0.0
    return float(min(max((h_marg - h_cond) / h_marg, 0.0), 1.0))


def bin_centers(bins: int) -> np.ndarray:
    width = 2.0 * Z_RANGE / bins
    return -Z_RANGE + (np.arange(bins) + 0.5) * width


def entropy_coefficient(gen, layer: int, dim: int, pred: AttributePredictor,
                        bins: int = 100, samples_per_bin: int = 1000,
                        seed=0) -> float:
    """Fraction of the attribute's entropy explained by latent (layer, dim).

    layer and dim are 1-based. Per bin, all other latents and the noise are
    drawn fresh from a bin-specific child stream, so bins can be evaluated in
    any order (or concurrently) with identical results.
    """
    if bins < 2:
        raise ContractError("bins must be at least 2")
    if samples_per_bin < 1:
        raise ContractError("samples_per_bin must be at least 1")
    dims = gen.latent_dims
    if not 1 <= layer <= len(dims):
        raise ContractError(f"layer {layer} out of range 1..{len(dims)}")
    if not 1 <= dim <= dims[layer - 1]:
        raise ContractError(f"dim {dim} out of range 1..{dims[layer - 1]}")

    centers = bin_centers(bins)
    children = np.random.SeedSequence(seed).spawn(bins)
    probs = np.empty(bins)
    for b in range(bins):
        rng = np.random.default_rng(children[b])
        Zs = [rng.standard_normal((samples_per_bin, q)) for q in dims]
        E = rng.standard_normal((samples_per_bin, gen.noise_dim))
        Zs[layer - 1][:, dim - 1] = centers[b]
        X = gen.forward(Zs if len(dims) > 1 else Zs[0], E)
        probs[b] = float(pred.prob(X).mean())
    return coefficient_from_bin_probs(probs)


# ---------------------------------------------------------------- variance

def variance_attribution(m, n: int, seed=0):
    """Split output variance between the subspace latents and the noise.

    var_z: total variance (covariance trace) over n draws of all z with the
    noise pinned at a reference draw. var_eps: the mirror image. Directional
    readings only; both are Monte Carlo estimates.
    """
    if n < 100:
        raise ContractError("n must be at least 100 for a stable trace estimate")
    ref_rng, z_rng, e_rng = (np.random.default_rng(c)
                             for c in np.random.SeedSequence(seed).spawn(3))
    dims = m.latent_dims
    z_ref = [ref_rng.standard_normal(q) for q in dims]
    e_ref = ref_rng.standard_normal(m.noise_dim)

    def total_var(X):
        return float(X.var(axis=0).sum())

    Zs = [z_rng.standard_normal((n, q)) for q in dims]
    E = np.tile(e_ref, (n, 1))
    var_z = total_var(m.forward(Zs if len(dims) > 1 else Zs[0], E))

    Zs = [np.tile(z, (n, 1)) for z in z_ref]
    E = e_rng.standard_normal((n, m.noise_dim))
    var_eps = total_var(m.forward(Zs if len(dims) > 1 else Zs[0], E))
    return var_z, var_eps
