"""Ricci/Weyl extraction, the derivation action B.T and the Tachibana tensor Q(A,T)."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .tensor_core import (
    MetricPoint,
    _check_dims,
    _frozen,
    curvature_symmetry_residuals,
    g_tensor,
    is_curvature_tensor,
    kn_product,
    metric_power,
    metric_trace,
    res,
    sym2,
)

logger = logging.getLogger(__name__)

VALIDATOR_TOL = 1e-10


def ricci(r, m: MetricPoint) -> np.ndarray:
    """``S_ij = g^{hk} R_hijk``."""
    s = np.einsum("hk,hijk->ij", m.g_inv, r)
    return sym2(0.5 * (s + s.T))


def scalar_curvature(t, m: MetricPoint) -> float:
    return metric_trace(ricci(t, m), m)


def weyl(r, s, kappa: float, m: MetricPoint) -> np.ndarray:
    """``C = R - g^S/(n-2) + kappa/((n-2)(n-1)) G``."""
    n = m.n
    if n < 3:
        raise ValueError("the Weyl tensor needs n >= 3")
    return r - kn_product(m.g, s) / (n - 2) + kappa / ((n - 2) * (n - 1)) * g_tensor(m)


def _derive(t: np.ndarray, endo: np.ndarray) -> np.ndarray:
    """Act on ``t`` with the endomorphism field ``endo[x, y, i, l]`` as a derivation.

    ``endo[x, y, i, l]`` is the l-th component of ``E(e_x, e_y) e_i``; the result
    carries the two new slots last.
    """
    k = t.ndim
    out = np.zeros(t.shape + endo.shape[:2])
    for s in range(k):
        term = np.tensordot(t, endo, axes=([s], [3]))
        out -= np.moveaxis(term, -1, s)
    return out


def curvature_action(b, t, m: MetricPoint) -> np.ndarray:
    """``(B.T)(X1..Xk, X, Y) = -sum_i T(.., B(X,Y) X_i, ..)``."""
    b = np.asarray(b, dtype=float)
    t = np.asarray(t, dtype=float)
    _check_dims(b, t, m.g)
    if not is_curvature_tensor(b, 1e-8):
        logger.warning("curvature_action: B fails the generalized curvature validator")
    endo = np.einsum("xyim,ml->xyil", b, m.g_inv)
    return _derive(t, endo)


def tachibana(a, t) -> np.ndarray:
    """Tachibana tensor ``Q(A,T)(X1..Xk, X, Y) = -sum_i T(.., (X ^_A Y) X_i, ..)``."""
    a = np.asarray(a, dtype=float)
    t = np.asarray(t, dtype=float)
    n = _check_dims(a, t)
    eye = np.eye(n)
    endo = np.einsum("yi,lx->xyil", a, eye) - np.einsum("xi,ly->xyil", a, eye)
    return _derive(t, endo)


def cyclic_sum_residual(q6) -> float:
    """Relative size of the sum over cyclic permutations of the slot pairs (12),(34),(56)."""
    q6 = np.asarray(q6, dtype=float)
    if q6.ndim != 6:
        raise ValueError("expected a (0,6) tensor")
    total = q6 + q6.transpose(4, 5, 0, 1, 2, 3) + q6.transpose(2, 3, 4, 5, 0, 1)
    return float(np.linalg.norm(total) / max(1.0, 3.0 * np.linalg.norm(q6)))


@dataclass(frozen=True)
class CurvaturePackage:
    """Curvature data ``{g, R, S, kappa, C}`` at one point.

    ``epsilon`` and ``kappa_tilde`` are set when the package comes from a
    hypersurface in a space form.
    """

    m: MetricPoint
    R: np.ndarray
    S: np.ndarray
    kappa: float
    C: np.ndarray
    epsilon: int | None = None
    kappa_tilde: float | None = None

    @property
    def n(self) -> int:
        return self.m.n

    @property
    def g(self) -> np.ndarray:
        return self.m.g

    @cached_property
    def G(self) -> np.ndarray:
        return g_tensor(self.m)

    @cached_property
    def S2(self) -> np.ndarray:
        return metric_power(self.S, self.m, 2)

    @cached_property
    def S3(self) -> np.ndarray:
        return metric_power(self.S, self.m, 3)

    def act(self, b: np.ndarray, t: np.ndarray) -> np.ndarray:
        return curvature_action(b, t, self.m)

    def q(self, a: np.ndarray, t: np.ndarray) -> np.ndarray:
        return tachibana(a, t)

    # the (0,6) and (0,4) tensors every audit asks for
    @cached_property
    def RR(self):
        return self.act(self.R, self.R)

    @cached_property
    def RC(self):
        return self.act(self.R, self.C)

    @cached_property
    def CR(self):
        return self.act(self.C, self.R)

    @cached_property
    def CC(self):
        return self.act(self.C, self.C)

    @cached_property
    def RS(self):
        return self.act(self.R, self.S)

    @cached_property
    def CS(self):
        return self.act(self.C, self.S)

    @cached_property
    def QgR(self):
        return tachibana(self.g, self.R)

    @cached_property
    def QgC(self):
        return tachibana(self.g, self.C)

    @cached_property
    def QSR(self):
        return tachibana(self.S, self.R)

    @cached_property
    def QSC(self):
        return tachibana(self.S, self.C)

    @cached_property
    def QSG(self):
        return tachibana(self.S, self.G)

    @cached_property
    def QgS(self):
        return tachibana(self.g, self.S)

    def gS(self, a=None) -> np.ndarray:
        """``g ^ A`` (``A`` defaults to ``S``)."""
        return kn_product(self.g, self.S if a is None else a)

    @cached_property
    def SS(self):
        return kn_product(self.S, self.S)


def weyl_decompose(r, m: MetricPoint, epsilon: int | None = None,
                   kappa_tilde: float | None = None) -> CurvaturePackage:
    """Bundle ``R`` with its Ricci tensor, scalar curvature and Weyl tensor."""
    if m.n < 3:
        raise ValueError("weyl_decompose needs n >= 3")
    r = np.asarray(r, dtype=float)
    _check_dims(r, m.g)
    s = ricci(r, m)
    kappa = metric_trace(s, m)
    c = weyl(r, s, kappa, m)
    return CurvaturePackage(m=m, R=_frozen(r), S=_frozen(s), kappa=kappa, C=_frozen(c),
                            epsilon=epsilon, kappa_tilde=kappa_tilde)


def package_consistency(pkg: CurvaturePackage) -> dict[str, float]:
    """Residuals of the package invariants (Ricci contraction, trace, trace-free Weyl)."""
    m = pkg.m
    return {
        "ricci": res(ricci(pkg.R, m), pkg.S),
        "kappa": abs(metric_trace(pkg.S, m) - pkg.kappa) / max(1.0, abs(pkg.kappa)),
        "weyl_trace": float(np.linalg.norm(np.einsum("hk,hijk->ij", m.g_inv, pkg.C))
                            / max(1.0, np.linalg.norm(pkg.R))),
        **curvature_symmetry_residuals(pkg.R),
    }


def qg_kernel_test(t, m: MetricPoint, tol: float = 1e-10) -> tuple[bool, dict[str, float]]:
    """Decide ``Q(g,T) = 0`` and cross-check it against ``T = kappa(T)/((n-1)n) G``.

    Raises ``ArithmeticError`` if the two tests disagree.
    """
    t = np.asarray(t, dtype=float)
    n = m.n
    qg = tachibana(m.g, t)
    k_t = scalar_curvature(t, m)
    witness = {
        "qg_norm": float(np.linalg.norm(qg) / max(1.0, np.linalg.norm(t))),
        "constant_part_residual": res(t, k_t / ((n - 1) * n) * g_tensor(m)),
        "kappa_T": k_t,
    }
    vanishes = witness["qg_norm"] <= tol
    proportional = witness["constant_part_residual"] <= tol
    if vanishes != proportional:
        raise ArithmeticError(f"Q(g,T)=0 test disagrees with the G-proportionality test: {witness}")
    return vanishes, witness


def prop22_residual(pkg: CurvaturePackage) -> float:
    """Residual of ``R.C + C.R = R.R + C.C - Q(g, -kappa/(n-1) g^S + g^S^2)/(n-2)^2``."""
    n = pkg.n
    if n < 4:
        raise ValueError("the identity needs n >= 4")
    bracket = -pkg.kappa / (n - 1) * pkg.gS() + pkg.gS(pkg.S2)
    lhs = pkg.RC + pkg.CR
    rhs = pkg.RR + pkg.CC - tachibana(pkg.g, bracket) / (n - 2) ** 2
    return res(lhs, rhs)


def random_sym2(rng: np.random.Generator, n: int) -> np.ndarray:
    return sym2(rng.uniform(-1.0, 1.0, size=(n, n)))


def random_algebraic_curvature(seed, n: int, m: MetricPoint | None = None,
                               terms: int = 3) -> np.ndarray:
    """``sum_i A_i ^ B_i`` for random symmetric ``A_i, B_i`` with entries in [-1, 1]."""
    if terms < 1:
        raise ValueError("terms must be >= 1")
    if m is not None and m.n != n:
        raise ValueError("metric dimension mismatch")
    rng = np.random.default_rng(seed)
    out = np.zeros((n,) * 4)
    for _ in range(terms):
        out += kn_product(random_sym2(rng, n), random_sym2(rng, n))
    return out


def random_metric(rng: np.random.Generator, n: int, negatives: int = 0) -> MetricPoint:
    """``P^T diag(+-1) P`` for a random well-conditioned ``P`` (close to the identity)."""
    d = np.ones(n)
    d[:negatives] = -1.0
    p = np.eye(n) + 0.3 * rng.uniform(-1.0, 1.0, size=(n, n))
    return MetricPoint.from_matrix(p.T @ np.diag(d) @ p)
