"""Hypersurfaces in space forms: Gauss-equation curvature and the H-cubic fits."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .curvature_ops import CurvaturePackage, weyl_decompose
from .fitting import DEFAULT_TOL, fit_span
from .tensor_core import (
    MetricPoint,
    _check_dims,
    _frozen,
    g_tensor,
    kn_product,
    metric_power,
    metric_trace,
    numeric_rank,
    sym2,
)

UH_TOL = 1e-8
EIGEN_GAP = 1e-7


@dataclass(frozen=True)
class HypersurfaceData:
    """Induced metric, second fundamental tensor, normal sign and ambient scalar curvature."""

    m: MetricPoint
    H: np.ndarray
    epsilon: int = 1
    kappa_tilde: float = 0.0

    def __post_init__(self):
        if self.epsilon not in (-1, 1):
            raise ValueError("epsilon must be +1 or -1")
        h = sym2(self.H)
        _check_dims(h, self.m.g)
        object.__setattr__(self, "H", _frozen(h))

    @classmethod
    def from_principal(cls, m: MetricPoint, curvatures, epsilon: int = 1,
                       kappa_tilde: float = 0.0) -> "HypersurfaceData":
        """``H = g diag(curvatures)`` for a diagonal ``g``; the shape operator is ``diag(curvatures)``."""
        curvatures = np.asarray(curvatures, dtype=float)
        return cls(m, sym2(m.g @ np.diag(curvatures)), epsilon, kappa_tilde)

    @property
    def n(self) -> int:
        return self.m.n

    @property
    def c(self) -> float:
        """Curvature of the ambient space form, ``kappa_tilde / (n (n+1))``."""
        return self.kappa_tilde / (self.n * (self.n + 1))

    @property
    def H2(self) -> np.ndarray:
        return metric_power(self.H, self.m, 2)

    @property
    def H3(self) -> np.ndarray:
        return metric_power(self.H, self.m, 3)

    @property
    def trH(self) -> float:
        return metric_trace(self.H, self.m)

    def shape_operator(self) -> np.ndarray:
        return self.m.g_inv @ self.H


def gauss_curvature(h: HypersurfaceData) -> np.ndarray:
    """``R = eps/2 H^H + c G``."""
    return 0.5 * h.epsilon * kn_product(h.H, h.H) + h.c * g_tensor(h.m)


def gauss_ricci(h: HypersurfaceData) -> tuple[np.ndarray, float]:
    """Closed-form contractions of the Gauss equation: ``(S, kappa)``."""
    n, eps, kt = h.n, h.epsilon, h.kappa_tilde
    tr = h.trH
    s = eps * (tr * h.H - h.H2) + (n - 1) * kt / (n * (n + 1)) * h.m.g
    kappa = eps * (tr**2 - metric_trace(h.H2, h.m)) + (n - 1) * kt / (n + 1)
    return s, kappa


def gauss_package(h: HypersurfaceData) -> CurvaturePackage:
    if h.n < 3:
        raise ValueError("hypersurface packages need n >= 3")
    return weyl_decompose(gauss_curvature(h), h.m, epsilon=h.epsilon, kappa_tilde=h.kappa_tilde)


@dataclass(frozen=True)
class UHResult:
    in_UH: bool
    residual: float
    alpha: float | None
    beta: float | None


def detect_UH(h: HypersurfaceData, tol: float = UH_TOL) -> UHResult:
    """Is ``H^2`` outside ``span{H, g}``? Returns the fit ``H^2 = alpha H + beta g`` when it is not."""
    fit = fit_span(h.H2, {"alpha": h.H, "beta": h.m.g}, tol)
    if fit.exact:
        return UHResult(False, fit.residual, fit["alpha"], fit["beta"])
    return UHResult(True, fit.residual, None, None)


@dataclass(frozen=True)
class CubicFit:
    """``H^3 = tr(H) H^2 + psi H + rho g`` and its general form ``H^3 = phi H^2 + psi H + rho g``."""

    psi: float
    rho: float
    residual: float
    in_UH: bool
    phi_opt: float | None = None
    psi_general: float | None = None
    rho_general: float | None = None
    residual_general: float | None = None

    def holds(self, tol: float = DEFAULT_TOL) -> bool:
        return self.in_UH and self.residual <= tol

    def as_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


def fit_cubic(h: HypersurfaceData, uh_tol: float = UH_TOL) -> CubicFit:
    """Fit the trace-normalised cubic and the general cubic satisfied by ``H``.

    Off ``U_H`` the coefficients are not unique; ``in_UH`` is then False and the
    minimal-norm values are returned only for reporting.
    """
    uh = detect_UH(h, uh_tol)
    target = h.H3 - h.trH * h.H2
    reduced = fit_span(target, {"psi": h.H, "rho": h.m.g})
    general = fit_span(h.H3, {"phi": h.H2, "psi": h.H, "rho": h.m.g})
    return CubicFit(
        psi=reduced["psi"], rho=reduced["rho"], residual=reduced.residual, in_UH=uh.in_UH,
        phi_opt=general["phi"], psi_general=general["psi"], rho_general=general["rho"],
        residual_general=general.residual,
    )


def eigen_clusters(a: np.ndarray, m: MetricPoint, gap: float = EIGEN_GAP) -> list[tuple[complex, int]]:
    """Eigenvalues of ``g^-1 A`` grouped by relative gap, as ``(mean, multiplicity)``."""
    ev = np.linalg.eigvals(m.g_inv @ a)
    scale = max(1.0, float(np.max(np.abs(ev))))
    order = np.lexsort((ev.imag, ev.real))
    ev = ev[order]
    clusters: list[list[complex]] = []
    for v in ev:
        for cl in clusters:
            if abs(v - np.mean(cl)) <= gap * scale:
                cl.append(v)
                break
        else:
            clusters.append([v])
    return [(complex(np.mean(cl)), len(cl)) for cl in clusters]


@dataclass(frozen=True)
class QuasiEinstein:
    einstein: bool
    quasi_einstein: bool
    alpha: float | None
    rank: int | None  # rank(S - alpha g) at the fitted alpha


def quasi_einstein_alpha(pkg: CurvaturePackage, tol: float = DEFAULT_TOL) -> QuasiEinstein:
    """Detect ``rank(S - alpha g) = 1`` from the spectrum of the Ricci operator.

    ``alpha`` is the eigenvalue of multiplicity ``>= n-1``; exactly Einstein
    points are reported as Einstein and not quasi-Einstein.
    """
    n, s, g = pkg.n, pkg.S, pkg.g
    lam = pkg.kappa / n
    if np.linalg.norm(s - lam * g) <= tol * max(1.0, np.linalg.norm(s)):
        return QuasiEinstein(True, False, lam, 0)
    for value, mult in eigen_clusters(s, pkg.m):
        if mult >= n - 1 and abs(value.imag) <= EIGEN_GAP * max(1.0, abs(value)):
            alpha = value.real
            rank = numeric_rank(s - alpha * g)
            return QuasiEinstein(False, rank == 1, alpha, rank)
    return QuasiEinstein(False, False, None, None)


def principal_rank(h: HypersurfaceData, tol: float = 1e-9) -> int:
    """Type number: ``rank H``."""
    return numeric_rank(h.H, tol)
