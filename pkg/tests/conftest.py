"""Shared test helpers: finite-difference gradient oracle and comparators."""

import numpy as np
import pytest


def fd_gradient(f, arrays, h=1e-5):
    """Central-difference gradient of scalar f(*arrays) w.r.t. each array.

    f must return a plain float and must not mutate its inputs. Returns a
    list of arrays matching the input shapes.
    """
    grads = []
    for k, a in enumerate(arrays):
        g = np.zeros_like(a)
        it = np.nditer(a, flags=["multi_index"])
        for _ in it:
            idx = it.multi_index
            orig = a[idx]
            a[idx] = orig + h
            fp = f(*arrays)
            a[idx] = orig - h
            fm = f(*arrays)
            a[idx] = orig
            g[idx] = (fp - fm) / (2.0 * h)
        grads.append(g)
    return grads


def rel_error(got, want, floor=1e-8):
    """Frobenius relative error with an absolute-scale escape hatch."""
    got = np.asarray(got, dtype=float)
    want = np.asarray(want, dtype=float)
    denom = max(float(np.linalg.norm(want)), floor)
    return float(np.linalg.norm(got - want)) / denom


def assert_close(got, want, tol, label=""):
    err = rel_error(got, want)
    assert err < tol, f"{label} relative error {err:.3e} >= {tol:.1e}"


@pytest.fixture
def rng():
    return np.random.default_rng(20260822)
