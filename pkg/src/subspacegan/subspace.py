"""Layer-wise linear subspace model: basis, importances, origin.

A subspace S = (U, L, mu) maps a low-dimensional coordinate vector z to an
ambient point U diag(L) z + mu. Columns of U are kept near-orthonormal during
training by a soft penalty on the Gram residual; the entries of L carry the
learned importance of each direction (sign-unconstrained, magnitude ranks).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .autodiff import Node
from .errors import ContractError, ShapeError

__all__ = [
    "SubspaceModel", "init_subspace", "sample_point", "sample_batch",
    "sample_batch_node", "ortho_penalty", "ortho_penalty_node",
    "importance_order",
]


@dataclass
class SubspaceModel:
    """Learnable subspace with basis U (d x q), importances L (1 x q) and
    origin mu (1 x d), each stored as a parameter node."""

    U: Node
    L: Node
    mu: Node
    d: int
    q: int

    def __post_init__(self):
        if self.q > self.d:
            raise ContractError(f"subspace dim {self.q} exceeds ambient dim {self.d}")
        if self.U.value.shape != (self.d, self.q):
            raise ShapeError(f"U must be {(self.d, self.q)}, got {self.U.value.shape}")
        if self.L.value.shape != (1, self.q):
            raise ShapeError(f"L must be {(1, self.q)}, got {self.L.value.shape}")
        if self.mu.value.shape != (1, self.d):
            raise ShapeError(f"mu must be {(1, self.d)}, got {self.mu.value.shape}")

    def basis(self) -> np.ndarray:
        return self.U.value.copy()

    def importances(self) -> np.ndarray:
        return self.L.value[0].copy()

    def origin(self) -> np.ndarray:
        return self.mu.value[0].copy()

    def parameters(self, prefix=""):
        return [(prefix + "U", self.U), (prefix + "L", self.L),
                (prefix + "mu", self.mu)]


def _orthonormal_columns(d, q, rng):
    # Modified Gram-Schmidt on a Gaussian draw; redraw a column in the
    # (measure-zero) event it collapses onto the span of the earlier ones.
    basis = np.empty((d, q))
    for j in range(q):
        while True:
            v = rng.standard_normal(d)
            for i in range(j):
                v -= (basis[:, i] @ v) * basis[:, i]
            norm = np.sqrt(v @ v)
            if norm > 1e-8:
                basis[:, j] = v / norm
                break
    return basis


def init_subspace(d: int, q: int, rng) -> SubspaceModel:
    """Fresh subspace: random orthonormal U, unit L, zero mu.

    Starting on the orthonormality manifold keeps the early penalty
    gradient small.
    """
    if q > d:
        raise ContractError(f"subspace dim {q} exceeds ambient dim {d}")
    return SubspaceModel(
        U=ad.param(_orthonormal_columns(d, q, rng)),
        L=ad.param(np.ones((1, q))),
        mu=ad.param(np.zeros((1, d))),
        d=d, q=q,
    )


def sample_point(s: SubspaceModel, z) -> np.ndarray:
    """Map one coordinate vector to ambient space: U diag(L) z + mu."""
    z = np.asarray(z, dtype=np.float64)
    if z.shape != (s.q,):
        raise ShapeError(f"z must have length {s.q}, got shape {z.shape}")
    return sample_batch(s, z[None, :])[0]


def sample_batch(s: SubspaceModel, Z: np.ndarray) -> np.ndarray:
    """Row-wise sample_point for a batch Z of shape (B, q)."""
    Z = np.asarray(Z, dtype=np.float64)
    if Z.ndim != 2 or Z.shape[1] != s.q:
        raise ShapeError(f"Z must be (B, {s.q}), got {Z.shape}")
    return (Z * s.L.value) @ s.U.value.T + s.mu.value


def sample_batch_node(s: SubspaceModel, Z: np.ndarray) -> Node:
    """Graph version of sample_batch; differentiable w.r.t. U, L, mu."""
    Z = np.asarray(Z, dtype=np.float64)
    if Z.ndim != 2 or Z.shape[1] != s.q:
        raise ShapeError(f"Z must be (B, {s.q}), got {Z.shape}")
    scaled = ad.hadamard(ad.const(Z), s.L)
    return ad.add(ad.matmul(scaled, ad.transpose(s.U)), s.mu)


def ortho_penalty(u: np.ndarray) -> float:
    """Squared Frobenius norm of U^T U - I; zero iff columns orthonormal."""
    u = np.asarray(u, dtype=np.float64)
    g = u.T @ u - np.eye(u.shape[1])
    return float(np.dot(g.ravel(), g.ravel()))


def ortho_penalty_node(u: Node) -> Node:
    gram = ad.matmul(ad.transpose(u), u)
    resid = ad.sub(gram, ad.const(np.eye(u.value.shape[1])))
    return ad.frob_sq(resid)


def importance_order(s: SubspaceModel) -> np.ndarray:
    """Direction indices sorted by |l_j| descending, 1-based.

    Ties keep the lower index first. The 1-based convention matches the
    layer/dim addressing used on the command line.
    """
    mags = np.abs(s.L.value[0])
    return np.argsort(-mags, kind="stable") + 1
