"""Shared fixtures and brute-force oracles.

The oracles loop over explicit index tuples and share no code with the
einsum implementations under test.
"""

from __future__ import annotations

import itertools
import math

import numpy as np
import pytest

from curvlab.hypersurface import HypersurfaceData, gauss_package
from curvlab.tensor_core import MetricPoint


def kn_loop(e, t):
    """Kulkarni-Nomizu product of two symmetric 2-tensors by explicit loops."""
    n = e.shape[0]
    out = np.zeros((n,) * 4)
    for a, b, c, d in itertools.product(range(n), repeat=4):
        out[a, b, c, d] = (e[a, d] * t[b, c] + e[b, c] * t[a, d]
                           - e[a, c] * t[b, d] - e[b, d] * t[a, c])
    return out


def _derive_loop(t, endo):
    """``-sum_i T(..., E(e_a, e_b) e_{p_i}, ...)`` with ``endo[a, b, p, l]`` the l-th component."""
    n = t.shape[0]
    k = t.ndim
    out = np.zeros((n,) * (k + 2))
    for idx in itertools.product(range(n), repeat=k):
        for a, b in itertools.product(range(n), repeat=2):
            acc = 0.0
            for i in range(k):
                for l in range(n):
                    coef = endo[a, b, idx[i], l]
                    if coef:
                        j = list(idx)
                        j[i] = l
                        acc -= coef * t[tuple(j)]
            out[idx + (a, b)] = acc
    return out


def action_loop(b, t, g_inv):
    """``B . T`` with ``B(X, Y) Z`` raised in the last slot."""
    endo = np.einsum("abpm,ml->abpl", b, g_inv)
    return _derive_loop(t, endo)


def tachibana_loop(a, t):
    """``Q(A, T)`` from ``(X ^_A Y) Z = A(Y, Z) X - A(X, Z) Y``."""
    n = a.shape[0]
    endo = np.zeros((n, n, n, n))
    for x, y, z in itertools.product(range(n), repeat=3):
        endo[x, y, z, x] += a[y, z]
        endo[x, y, z, y] -= a[x, z]
    return _derive_loop(t, endo)


def ricci_loop(r, g_inv):
    n = r.shape[0]
    s = np.zeros((n, n))
    for i, j in itertools.product(range(n), repeat=2):
        s[i, j] = sum(g_inv[h, k] * r[h, i, j, k] for h in range(n) for k in range(n))
    return s


def hyper(curvatures, epsilon=1, kappa_tilde=0.0, negatives=0) -> HypersurfaceData:
    m = MetricPoint.diagonal(len(curvatures), negatives)
    return HypersurfaceData.from_principal(m, curvatures, epsilon, kappa_tilde)


def clifford_curvatures(n: int, p: int) -> list[float]:
    r1, r2 = math.sqrt(p / n), math.sqrt((n - p) / n)
    return [r2 / r1] * p + [-r1 / r2] * (n - p)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def rank2_pkg():
    return gauss_package(hyper([2, 3, 0, 0, 0]))


@pytest.fixture(scope="session")
def three_pkg():
    return gauss_package(hyper([1, 1, -1, -1, 0]))


@pytest.fixture(scope="session")
def clifford_pkg():
    return gauss_package(hyper(clifford_curvatures(5, 2), 1, 30.0))
