"""Dependency-free PCA and probabilistic-PCA ground truth.

The eigensolver is the classical cyclic Jacobi rotation method (Golub & Van
Loan section 8.5): sweep all off-diagonal pairs, rotate each to zero, repeat
until the off-diagonal mass is gone. Quadratic convergence makes it exact to
roundoff in a handful of sweeps at the matrix sizes used here (d <= 64), and
the implementation is trivially deterministic across platforms.

The probabilistic-PCA maximum-likelihood solution is the Tipping & Bishop
closed form: with covariance eigenpairs (lambda_j, v_j) in descending order,
the optimal noise variance is the mean of the discarded eigenvalues and the
retained directions are scaled by sqrt(lambda_j - sigma^2).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ContractError, DegenerateSpectrumError

__all__ = ["EigenDecomposition", "covariance", "sym_eig", "pca_basis", "ppca_mle"]

_OFFDIAG_TOL = 1e-12
_MAX_SWEEPS = 100
_SYMMETRY_TOL = 1e-10


@dataclass
class EigenDecomposition:
    eigenvalues: np.ndarray   # (d,) descending
    eigenvectors: np.ndarray  # (d, d), column j pairs with eigenvalue j


def covariance(data: np.ndarray) -> np.ndarray:
    """Biased (1/n) sample covariance of row-wise data."""
    X = np.asarray(data, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] < 2:
        raise ContractError("covariance needs at least 2 samples")
    C = X - X.mean(axis=0)
    return (C.T @ C) / X.shape[0]


def _offdiag_frob(a):
    # Summed directly off the strict triangles; the subtraction form
    # sqrt(||A||_F^2 - ||diag||^2) cancels to zero once the off-diagonal
    # mass drops near sqrt(eps)*||A||, which is far above the tolerance.
    b = a - np.diag(np.diag(a))
    return np.sqrt((b * b).sum())


def sym_eig(s: np.ndarray) -> EigenDecomposition:
    """Cyclic Jacobi eigendecomposition of a symmetric matrix.

    Eigenpairs come back sorted by eigenvalue descending; each eigenvector is
    sign-fixed so its largest-magnitude entry is positive.
    """
    A = np.asarray(s, dtype=np.float64)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ContractError(f"expected a square matrix, got {A.shape}")
    if np.abs(A - A.T).max() > _SYMMETRY_TOL:
        raise ContractError("matrix is not symmetric within 1e-10")
    d = A.shape[0]
    A = (A + A.T) / 2.0
    V = np.eye(d)

    for _ in range(_MAX_SWEEPS):
        if _offdiag_frob(A) < _OFFDIAG_TOL:
            break
        for p in range(d - 1):
            for q in range(p + 1, d):
                apq = A[p, q]
                if apq == 0.0:
                    continue
                delta = A[q, q] - A[p, p]
                if 2.0 * abs(apq) <= np.finfo(np.float64).eps * abs(delta):
                    # Rotation angle below roundoff; zeroing the entry is the
                    # whole representable effect, and skipping the division
                    # avoids overflow when apq is denormal.
                    A[p, q] = 0.0
                    A[q, p] = 0.0
                    continue
                # Rotation angle choice that zeroes A[p,q] with |t| <= 1.
                tau = delta / (2.0 * apq)
                t = np.sign(tau) / (abs(tau) + np.sqrt(1.0 + tau * tau)) \
                    if tau != 0.0 else 1.0
                c = 1.0 / np.sqrt(1.0 + t * t)
                sn = t * c
                rot_p = c * A[:, p] - sn * A[:, q]
                rot_q = sn * A[:, p] + c * A[:, q]
                A[:, p], A[:, q] = rot_p, rot_q
                rot_p = c * A[p, :] - sn * A[q, :]
                rot_q = sn * A[p, :] + c * A[q, :]
                A[p, :], A[q, :] = rot_p, rot_q
                rot_p = c * V[:, p] - sn * V[:, q]
                rot_q = sn * V[:, p] + c * V[:, q]
                V[:, p], V[:, q] = rot_p, rot_q

    vals = np.diag(A).copy()
    order = np.argsort(-vals, kind="stable")
    vals = vals[order]
    V = V[:, order]
    for j in range(d):
        peak = np.argmax(np.abs(V[:, j]))
        if V[peak, j] < 0.0:
            V[:, j] = -V[:, j]
    return EigenDecomposition(eigenvalues=vals, eigenvectors=V)


def pca_basis(data: np.ndarray, q: int) -> np.ndarray:
    """Top-q covariance eigenvectors of row-wise data, as a (d, q) matrix."""
    X = np.asarray(data, dtype=np.float64)
    if q > X.shape[1]:
        raise ContractError(f"q={q} exceeds data dimension {X.shape[1]}")
    return sym_eig(covariance(X)).eigenvectors[:, :q]


def ppca_mle(data: np.ndarray, q: int):
    """Closed-form maximum-likelihood fit of x = U diag(L) z + mu + sigma eps.

    Returns (U, L, mu, sigma). sigma^2 is the mean of the d-q smallest
    covariance eigenvalues; requires the q-th eigenvalue to exceed it, else
    the factor scales are undefined.
    """
    X = np.asarray(data, dtype=np.float64)
    d = X.shape[1]
    if q >= d:
        raise ContractError(f"q={q} must be below data dimension {d}")
    eig = sym_eig(covariance(X))
    # Noise-free data puts the discarded eigenvalues at roundoff scale, where
    # Jacobi can leave them a hair negative; the variance is still zero.
    sigma_sq = max(float(eig.eigenvalues[q:].mean()), 0.0)
    if eig.eigenvalues[q - 1] <= sigma_sq:
        raise DegenerateSpectrumError(
            f"eigenvalue {q} ({eig.eigenvalues[q - 1]:.3e}) does not exceed "
            f"residual variance {sigma_sq:.3e}")
    L = np.sqrt(eig.eigenvalues[:q] - sigma_sq)
    return eig.eigenvectors[:, :q], L, X.mean(axis=0), float(np.sqrt(sigma_sq))
