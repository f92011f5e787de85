"""Dense pointwise tensor algebra on a semi-Riemannian inner product space.

Tensors are plain ``numpy`` arrays of shape ``(n,) * k`` in C order, so a
(0,4) tensor ``T`` is stored as the row-major flat array of ``T[h, i, j, k]``.
Symmetric (0,2) tensors are mirrored on construction (:func:`sym2`).

Sign conventions used throughout the package::

    (X ^_A Y) Z          = A(Y, Z) X - A(X, Z) Y
    G(X1, X2, X3, X4)    = g((X1 ^_g X2) X3, X4)     -> G[h,i,j,k] = g_hk g_ij - g_hj g_ik
    S_ij                 = g^{hk} R_hijk

so that the unit round sphere has ``R = G`` and positive scalar curvature.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

MAX_DIM = 12
DEFAULT_RANK_TOL = 1e-9


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


def sym2(a) -> np.ndarray:
    """Symmetric (0,2) tensor from ``a``: the upper triangle is mirrored."""
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    upper = np.triu(a)
    return upper + np.triu(a, 1).T


@dataclass(frozen=True)
class MetricPoint:
    """The metric ``g`` at one point together with its inverse and signature."""

    g: np.ndarray
    g_inv: np.ndarray = field(repr=False)
    n: int
    signature: int

    @classmethod
    def from_matrix(cls, g, max_dim: int = MAX_DIM) -> "MetricPoint":
        g = sym2(g)
        n = g.shape[0]
        if n > max_dim:
            raise ValueError(f"dimension {n} exceeds the cap {max_dim}")
        scale = max(1.0, float(np.max(np.abs(g))))
        # LU with partial pivoting; indefinite metrics are first class.
        try:
            g_inv = np.linalg.solve(g, np.eye(n))
        except np.linalg.LinAlgError as exc:
            raise ValueError("metric is singular") from exc
        if abs(np.linalg.det(g)) <= 1e-12 * scale**n:
            raise ValueError("metric is degenerate")
        g_inv = sym2(0.5 * (g_inv + g_inv.T))
        signature = int(np.sum(np.linalg.eigvalsh(g) < 0))
        return cls(g=_frozen(g), g_inv=_frozen(g_inv), n=n, signature=signature)

    @classmethod
    def identity(cls, n: int) -> "MetricPoint":
        return cls.from_matrix(np.eye(n))

    @classmethod
    def diagonal(cls, n: int, negatives: int = 0) -> "MetricPoint":
        """``diag(-1, ..., -1, 1, ..., 1)`` with ``negatives`` timelike entries."""
        d = np.ones(n)
        d[:negatives] = -1.0
        return cls.from_matrix(np.diag(d))


def res(lhs, rhs) -> float:
    """Relative residual ``|L - R| / max(1, |L| + |R|)`` in the Frobenius norm."""
    lhs = np.asarray(lhs, dtype=float)
    rhs = np.asarray(rhs, dtype=float)
    diff = np.linalg.norm(lhs - rhs)
    return float(diff / max(1.0, np.linalg.norm(lhs) + np.linalg.norm(rhs)))


def _check_dims(*tensors: np.ndarray) -> int:
    n = tensors[0].shape[0]
    for t in tensors:
        if any(d != n for d in t.shape):
            raise ValueError(f"dimension mismatch: {[x.shape for x in tensors]}")
    return n


def kn_product(e, t) -> np.ndarray:
    """Kulkarni-Nomizu product of a symmetric (0,2) tensor with a (0,k) tensor.

    ``(E ^ T)_{abcd...} = E_ad T_bc... + E_bc T_ad... - E_ac T_bd... - E_bd T_ac...``
    """
    e = np.asarray(e, dtype=float)
    t = np.asarray(t, dtype=float)
    if e.ndim != 2:
        raise ValueError("first factor must be a (0,2) tensor")
    if t.ndim < 2:
        raise ValueError("second factor must have valence >= 2")
    _check_dims(e, t)
    return (
        np.einsum("ad,bc...->abcd...", e, t)
        + np.einsum("bc,ad...->abcd...", e, t)
        - np.einsum("ac,bd...->abcd...", e, t)
        - np.einsum("bd,ac...->abcd...", e, t)
    )


def g_tensor(m: MetricPoint) -> np.ndarray:
    """``G = 1/2 g ^ g``."""
    g = m.g
    return np.einsum("hk,ij->hijk", g, g) - np.einsum("hj,ik->hijk", g, g)


def metric_power(a, m: MetricPoint, k: int) -> np.ndarray:
    """``A^2 = A g^-1 A`` and ``A^3 = A^2 g^-1 A``."""
    if k not in (2, 3):
        raise ValueError("power must be 2 or 3")
    a = np.asarray(a, dtype=float)
    _check_dims(a, m.g)
    out = a @ m.g_inv @ a
    if k == 3:
        out = out @ m.g_inv @ a
    return sym2(0.5 * (out + out.T))


def metric_trace(a, m: MetricPoint) -> float:
    a = np.asarray(a, dtype=float)
    _check_dims(a, m.g)
    return float(np.einsum("ij,ij->", m.g_inv, a))


def numeric_rank(a, tol_rel: float = DEFAULT_RANK_TOL) -> int:
    """Number of singular values above ``tol_rel`` times the largest one."""
    if tol_rel <= 0:
        raise ValueError("tol_rel must be positive")
    sv = np.linalg.svd(np.asarray(a, dtype=float), compute_uv=False)
    if sv.size == 0 or sv[0] == 0.0:
        return 0
    return int(np.sum(sv > tol_rel * sv[0]))


def curvature_symmetry_residuals(t) -> dict[str, float]:
    """Residuals of the generalized-curvature symmetries of a (0,4) tensor."""
    t = np.asarray(t, dtype=float)
    scale = max(1.0, float(np.linalg.norm(t)))
    anti_first = t + t.transpose(1, 0, 2, 3)
    anti_second = t + t.transpose(0, 1, 3, 2)
    pair = t - t.transpose(2, 3, 0, 1)
    # B(X1,X2,X3,X4) + B(X3,X1,X2,X4) + B(X2,X3,X1,X4)
    bianchi = t + np.einsum("cabd->abcd", t) + np.einsum("bcad->abcd", t)
    return {
        "antisymmetry": float(max(np.linalg.norm(anti_first), np.linalg.norm(anti_second)) / scale),
        "pair_symmetry": float(np.linalg.norm(pair) / scale),
        "bianchi": float(np.linalg.norm(bianchi) / scale),
    }


def is_curvature_tensor(t, tol: float = 1e-10) -> bool:
    t = np.asarray(t)
    if t.ndim != 4:
        return False
    return all(v <= tol for v in curvature_symmetry_residuals(t).values())
