"""Riemann tensors of coordinate metrics via second-order Taylor arithmetic.

A :class:`Chart` wraps a metric function written against the dispatching
scalar functions of :mod:`curvlab.taylor`, so one definition evaluates both on
floats and on Taylor scalars. :func:`curvature_at` turns the metric jet at a
point into a :class:`~curvlab.curvature_ops.CurvaturePackage`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import taylor as ts
from .curvature_ops import CurvaturePackage, ricci, weyl_decompose
from .tensor_core import MetricPoint, _frozen, curvature_symmetry_residuals, metric_trace

AD_TOL = 1e-8
GUARD_EPS = 1e-12


class DomainError(ValueError):
    """The sample point lies outside the chart's guarded domain."""


@dataclass(frozen=True)
class Chart:
    n: int
    metric_fn: Callable
    domain_guard: Callable[[np.ndarray], str | None]
    kind: str = "custom"
    params: dict = field(default_factory=dict)
    default_points: tuple = ()

    def metric(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return np.array([[ts.value(e) for e in row] for row in self.metric_fn(list(x))])

    def check(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.n,):
            raise DomainError(f"{self.kind}: expected {self.n} coordinates, got {x.shape}")
        reason = self.domain_guard(x)
        if reason:
            raise DomainError(f"{self.kind}: {reason} at x={x.tolist()}")
        return x


def metric_jet(chart: Chart, x) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """``(g, dg, ddg)`` with ``dg[k, i, j] = d_k g_ij``."""
    return ts.jet(chart.metric_fn, x)


def riemann_from_jet(g: np.ndarray, dg: np.ndarray, ddg: np.ndarray) -> np.ndarray:
    """Lowered curvature tensor ``R_hijk = g(R(d_h, d_i) d_j, d_k)`` from the metric jet."""
    g_inv = np.linalg.solve(g, np.eye(g.shape[0]))
    # Christoffel symbols of the first kind: gam1[s, i, j] = Gamma_{s,ij}
    gam1 = 0.5 * (np.einsum("ijs->sij", dg) + np.einsum("jis->sij", dg) - dg)
    d_gam1 = 0.5 * (np.einsum("hijs->hsij", ddg) + np.einsum("hjis->hsij", ddg) - ddg)
    gam = np.einsum("ls,sij->lij", g_inv, gam1)
    d_ginv = -np.einsum("la,hab,bs->hls", g_inv, dg, g_inv)
    d_gam = np.einsum("hls,sij->hlij", d_ginv, gam1) + np.einsum("ls,hsij->hlij", g_inv, d_gam1)
    rend = (
        np.einsum("hlij->hijl", d_gam)
        - np.einsum("ilhj->hijl", d_gam)
        + np.einsum("lhm,mij->hijl", gam, gam)
        - np.einsum("lim,mhj->hijl", gam, gam)
    )
    return np.einsum("hijl,lk->hijk", rend, g)


def curvature_at(chart: Chart, x, tol: float = AD_TOL) -> CurvaturePackage:
    """Curvature package of ``chart`` at ``x``.

    For ``n = 2`` the Weyl tensor is undefined and ``C`` is returned as zero.
    """
    x = chart.check(x)
    g, dg, ddg = metric_jet(chart, x)
    try:
        m = MetricPoint.from_matrix(g)
    except ValueError as exc:
        raise DomainError(f"{chart.kind}: {exc} at x={x.tolist()}") from exc
    r = riemann_from_jet(m.g, dg, ddg)
    # roundoff in second derivatives: symmetrize over the exact pair symmetries
    r = 0.25 * (r - r.transpose(1, 0, 2, 3) - r.transpose(0, 1, 3, 2) + r.transpose(1, 0, 3, 2))
    r = 0.5 * (r + r.transpose(2, 3, 0, 1))
    bad = {k: v for k, v in curvature_symmetry_residuals(r).items() if v > tol}
    if bad:
        raise ArithmeticError(f"{chart.kind}: AD curvature fails the validator: {bad}")
    if m.n >= 3:
        return weyl_decompose(r, m)
    s = ricci(r, m)
    return CurvaturePackage(m=m, R=_frozen(r), S=_frozen(s), kappa=metric_trace(s, m),
                            C=_frozen(np.zeros_like(r)))


def fd_first_partials(chart: Chart, x, step: float = 1e-5) -> np.ndarray:
    """Central finite differences of ``g``; same layout as the ``dg`` of :func:`metric_jet`."""
    x = np.asarray(x, dtype=float)
    out = np.zeros((chart.n, chart.n, chart.n))
    for k in range(chart.n):
        e = np.zeros(chart.n)
        e[k] = step
        out[k] = (chart.metric(x + e) - chart.metric(x - e)) / (2 * step)
    return out


# ---------------------------------------------------------------------------
# built-in chart families


def _sphere_block(angles, radius: float) -> list:
    """Diagonal entries of the round ``S^p(radius)`` metric in hyperspherical angles."""
    diag = []
    factor = radius**2
    for a in angles:
        diag.append(factor)
        factor = factor * ts.sin(a) ** 2
    return diag


def _sphere_guard(angles) -> str | None:
    # the last angle is the azimuth; every earlier one must stay off the poles
    for a in angles[:-1]:
        if abs(math.sin(a)) <= GUARD_EPS:
            return "coordinate pole (sin theta = 0)"
    return None


def _diag_matrix(entries) -> list:
    n = len(entries)
    return [[entries[i] if i == j else 0.0 for j in range(n)] for i in range(n)]


def _rn_h(r, mass, charge, lam):
    return 1 - 2 * mass / r + charge**2 / r**2 - lam * r**2 / 3


def _rn_ds(params: dict) -> Chart:
    mass = float(params.get("M", 1.0))
    charge = float(params.get("Q", 0.5))
    lam = float(params.get("Lambda", 0.0))
    if mass == 0.0 or charge == 0.0:
        raise ValueError("rn_ds needs non-zero M and Q")

    def metric(x):
        _, r, th, _ = x
        h = _rn_h(r, mass, charge, lam)
        return _diag_matrix([-h, 1 / h, r**2, r**2 * ts.sin(th) ** 2])

    def guard(x):
        _, r, th, _ = x
        if r <= 0:
            return "r must be positive"
        if abs(_rn_h(r, mass, charge, lam)) <= GUARD_EPS:
            return "horizon (h(r) = 0)"
        if abs(math.sin(th)) <= GUARD_EPS:
            return "coordinate pole (sin theta = 0)"
        return None

    return Chart(4, metric, guard, "rn_ds", {"M": mass, "Q": charge, "Lambda": lam},
                 ((0.0, 3.0, 1.0, 0.0), (0.0, 5.0, 0.7, 0.0)))


def _space_form(params: dict) -> Chart:
    n = int(params.get("n", 4))
    c = float(params.get("c", 1.0))
    signature = int(params.get("signature", 0))
    if not 2 <= n or not 0 <= signature <= n:
        raise ValueError("space_form needs n >= 2 and 0 <= signature <= n")
    eta = [-1.0] * signature + [1.0] * (n - signature)

    def conformal(x):
        q = sum(e * xi * xi for e, xi in zip(eta, x))
        return 1 + c * q / 4

    def metric(x):
        f = conformal(x)
        w = 1 / (f * f)
        return _diag_matrix([e * w for e in eta])

    def guard(x):
        if abs(conformal(list(x))) <= 1e-9:
            return "conformal factor vanishes"
        return None

    pt = tuple(0.1 * (i + 1) for i in range(n))
    return Chart(n, metric, guard, "space_form", {"n": n, "c": c, "signature": signature}, (pt,))


def _product_spheres(params: dict) -> Chart:
    p = int(params.get("p", 2))
    q = int(params.get("q", 2))
    r1 = float(params.get("r1", 1.0))
    r2 = float(params.get("r2", 1.0))
    if p < 1 or q < 1 or (p == 1 and q == 1):
        raise ValueError("product_spheres needs p, q >= 1 and p + q >= 3")
    if r1 <= 0 or r2 <= 0:
        raise ValueError("radii must be positive")
    n = p + q

    def metric(x):
        return _diag_matrix(_sphere_block(x[:p], r1) + _sphere_block(x[p:], r2))

    def guard(x):
        return _sphere_guard(list(x[:p])) or _sphere_guard(list(x[p:]))

    pt = tuple(0.7 + 0.15 * i for i in range(n))
    return Chart(n, metric, guard, "product_spheres", {"p": p, "r1": r1, "q": q, "r2": r2}, (pt,))


def _round_sphere(params: dict) -> Chart:
    n = int(params.get("n", 2))
    radius = float(params.get("radius", 1.0))
    if n < 2 or radius <= 0:
        raise ValueError("round_sphere needs n >= 2 and a positive radius")

    def metric(x):
        return _diag_matrix(_sphere_block(x, radius))

    def guard(x):
        return _sphere_guard(list(x))

    pt = tuple([1.0] + [0.5] * (n - 1))
    return Chart(n, metric, guard, "round_sphere", {"n": n, "radius": radius}, (pt,))


def _warped_1d_einstein(params: dict) -> Chart:
    """``sign dt^2 + F(t)^2 (S^2(a) x S^2(a))`` with polynomial ``F`` (coefficients, low order first).

    The fibre is Einstein. ``F(t) = t`` with ``a^2 = 1/3`` gives a Ricci-flat cone;
    the default ``F`` gives a quasi-Einstein metric.
    """
    sign = float(params.get("sign", 1.0))
    coeffs = [float(v) for v in params.get("F", [1.0, 0.5, 0.3])]
    a = float(params.get("fiber_radius", 1.0))
    if sign not in (-1.0, 1.0) or a <= 0 or not coeffs:
        raise ValueError("warped_1d_einstein needs sign = +-1, a positive fibre radius and F")

    def poly(t):
        out = 0.0
        for cf in reversed(coeffs):
            out = out * t + cf
        return out

    def metric(x):
        f2 = poly(x[0]) ** 2
        fib = _sphere_block(x[1:3], a) + _sphere_block(x[3:5], a)
        return _diag_matrix([sign] + [f2 * e for e in fib])

    def guard(x):
        if abs(poly(float(x[0]))) <= GUARD_EPS:
            return "warping function vanishes"
        return _sphere_guard(list(x[1:3])) or _sphere_guard(list(x[3:5]))

    return Chart(5, metric, guard, "warped_1d_einstein",
                 {"sign": sign, "F": coeffs, "fiber_radius": a}, ((1.3, 0.9, 0.4, 1.1, 0.2),))


def _flat(params: dict) -> Chart:
    n = int(params.get("n", 4))
    signature = int(params.get("signature", 1))
    eta = [-1.0] * signature + [1.0] * (n - signature)

    def metric(x):
        return _diag_matrix(list(eta))

    return Chart(n, metric, lambda x: None, "flat", {"n": n, "signature": signature},
                 (tuple([0.0] * n),))


CHART_KINDS: dict[str, Callable[[dict], Chart]] = {
    "flat": _flat,
    "rn_ds": _rn_ds,
    "space_form": _space_form,
    "product_spheres": _product_spheres,
    "round_sphere": _round_sphere,
    "warped_1d_einstein": _warped_1d_einstein,
}


def build_chart(kind: str, params: dict | None = None) -> Chart:
    if kind not in CHART_KINDS:
        raise KeyError(f"unknown chart kind {kind!r}; known: {sorted(CHART_KINDS)}")
    return CHART_KINDS[kind](dict(params or {}))


def rn_roter_closed_form(mass: float, charge: float, lam: float, r: float) -> dict[str, float]:
    """Closed-form Roter coefficients ``(phi, mu, eta)`` of the RN(-dS/-AdS) metric at radius ``r``."""
    m, q, l = mass, charge, lam
    q4 = q**4
    phi = 1.5 * (q**2 - m * r) * r**4 / q4
    mu = 0.5 * (q4 + 3 * q**2 * l * r**4 - 3 * l * m * r**5) / q4
    eta = (3 * q**6 + 4 * q4 * l * r**4 - 3 * q4 * m * r + 9 * q**2 * l**2 * r**8
           - 9 * l**2 * m * r**9) / (12 * r**4 * q4)
    return {"phi": phi, "mu": mu, "eta": eta}
