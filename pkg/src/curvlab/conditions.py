"""Fits and flags for the pseudosymmetry-type curvature conditions at one point."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from .curvature_ops import CurvaturePackage
from .fitting import DEFAULT_TOL, FitResult, fit_span
from .hypersurface import quasi_einstein_alpha
from .tensor_core import kn_product, numeric_rank, res

# Set-membership threshold: a tensor counts as non-zero above this relative size.
SET_TOL = 1e-9


def _rel(a, scale_of) -> float:
    return float(np.linalg.norm(a) / max(1.0, np.linalg.norm(scale_of)))


def membership(pkg: CurvaturePackage, tol: float = SET_TOL) -> dict[str, bool]:
    """Membership of the point in ``U_S``, ``U_C`` and ``U_R``."""
    n = pkg.n
    u_s = _rel(pkg.S - pkg.kappa / n * pkg.g, pkg.S) > tol
    u_c = _rel(pkg.C, pkg.R) > tol
    u_r = _rel(pkg.R - pkg.kappa / ((n - 1) * n) * pkg.G, pkg.R) > tol
    return {"U_S": u_s, "U_C": u_c, "U_R": u_r}


@dataclass(frozen=True)
class RoterFit:
    phi: float
    mu: float
    eta: float
    residual: float
    exact: bool
    applicable: bool
    derived: dict = field(default_factory=dict)
    checks: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return asdict(self)


def roter_basis(pkg: CurvaturePackage) -> dict[str, np.ndarray]:
    return {"phi": 0.5 * pkg.SS, "mu": pkg.gS(), "eta": 0.5 * kn_product(pkg.g, pkg.g)}


def roter_scalars(phi: float, mu: float, eta: float, kappa: float, n: int) -> dict[str, float]:
    """Scalars that a Roter-type curvature tensor determines."""
    a1 = kappa + ((n - 2) * mu - 1) / phi
    a2 = (mu * kappa + (n - 1) * eta) / phi
    l_r = ((n - 2) * (mu**2 - phi * eta) - mu) / phi
    l_gen = (n - 2) * (mu**2 - phi * eta) / phi
    l_c = l_r + (kappa / (n - 1) - a1) / (n - 2)
    return {"alpha1": a1, "alpha2": a2, "L_R": l_r, "L": l_gen, "L_C": l_c}


def roter_checks(pkg: CurvaturePackage, phi: float, mu: float, eta: float) -> dict[str, float]:
    """Residuals of every relation a Roter-type tensor forces (both expansions of R.C - C.R)."""
    n, k = pkg.n, pkg.kappa
    d = roter_scalars(phi, mu, eta, k, n)
    l_r, l_gen, l_c = d["L_R"], d["L"], d["L_C"]
    diff = pkg.RC - pkg.CR
    first = (pkg.QSR / (n - 2)
             + (((n - 1) * mu - 1) / ((n - 2) * phi) + k / (n - 1)) * pkg.QgR
             + (mu * ((n - 1) * mu - 1) - (n - 1) * phi * eta) / ((n - 2) * phi) * pkg.QSG)
    second = ((1 / phi * (mu - 1 / (n - 2)) + k / (n - 1)) * pkg.QgR
              + (mu / phi * (mu - 1 / (n - 2)) - eta) * pkg.QSG)
    return {
        "S2": res(pkg.S2, d["alpha1"] * pkg.S + d["alpha2"] * pkg.g),
        "RC": res(pkg.RC, l_r * pkg.QgC),
        "RR": res(pkg.RR, l_r * pkg.QgR),
        "RS": res(pkg.RS, l_r * pkg.QgS),
        "RR_QSR": res(pkg.RR, pkg.QSR + l_gen * pkg.QgC),
        "CC": res(pkg.CC, l_c * pkg.QgC),
        "CR": res(pkg.CR, l_c * pkg.QgR),
        "CS": res(pkg.CS, l_c * pkg.QgS),
        "diff_first": res(diff, first),
        "diff_second": res(diff, second),
        "star": condition_star_residual(pkg),
        "sum": res(pkg.RC + pkg.CR, pkg.QSC + (l_gen + l_c - 1 / ((n - 2) * phi)) * pkg.QgC),
    }


def fit_roter(pkg: CurvaturePackage, tol: float = DEFAULT_TOL) -> RoterFit:
    """Least-squares ``R = phi/2 S^S + mu g^S + eta/2 g^g`` with the derived scalars.

    Off ``U_S`` or ``U_C`` the decomposition is not unique and the fit is flagged
    as not applicable.
    """
    mem = membership(pkg)
    fit = fit_span(pkg.R, roter_basis(pkg), tol)
    phi, mu, eta = fit["phi"], fit["mu"], fit["eta"]
    applicable = mem["U_S"] and mem["U_C"]
    derived: dict = {}
    checks: dict = {}
    if applicable and fit.exact and abs(phi) > 1e-12:
        derived = roter_scalars(phi, mu, eta, pkg.kappa, pkg.n)
        checks = roter_checks(pkg, phi, mu, eta)
    return RoterFit(phi, mu, eta, fit.residual, fit.exact and applicable, applicable, derived, checks)


def condition_star_residual(pkg: CurvaturePackage) -> float:
    """Residual of ``C.R - R.C = Q(S,C) - kappa/(n-1) Q(g,C)``."""
    n = pkg.n
    if n < 4:
        raise ValueError("condition (*) is considered for n >= 4")
    return res(pkg.CR - pkg.RC, pkg.QSC - pkg.kappa / (n - 1) * pkg.QgC)


def _fit_entry(fit: FitResult) -> dict:
    return {**fit.coefficients, "residual": fit.residual, "exact": fit.exact}


@dataclass
class ClassificationReport:
    einstein: bool
    quasi_einstein: bool
    alpha: float | None
    rank_S_alpha: int | None
    membership: dict
    pseudosymmetric: dict
    ricci_pseudosymmetric: dict
    weyl_pseudosymmetric: dict
    pseudosymmetric_weyl: dict
    genpseudo: dict
    roter: dict
    condition_star: float | None
    cond01: dict
    consistency: dict

    def as_dict(self) -> dict:
        return asdict(self)


def classify(pkg: CurvaturePackage, tol: float = DEFAULT_TOL) -> ClassificationReport:
    n = pkg.n
    mem = membership(pkg)
    qe = quasi_einstein_alpha(pkg, tol)
    pseudo = fit_span(pkg.RR, {"L_R": pkg.QgR}, tol)
    ricci = fit_span(pkg.RS, {"L_S": pkg.QgS}, tol)
    weyl_p = fit_span(pkg.RC, {"L_1": pkg.QgC}, tol)
    p_weyl = fit_span(pkg.CC, {"L_C": pkg.QgC}, tol)
    gen = fit_span(pkg.RR - pkg.QSR, {"L": pkg.QgC}, tol)
    star = condition_star_residual(pkg) if n >= 4 else None
    c01 = fit_span(pkg.RC - pkg.CR, {"L1": pkg.QSC, "L2": pkg.QgC}, tol)
    roter = fit_roter(pkg, tol)
    pseudo_entry = {**_fit_entry(pseudo), "determined": True}
    if not mem["U_R"]:
        # Q(g,R) = 0 leaves L_R free; report the curvature of R = c G
        pseudo_entry.update(L_R=pkg.kappa / ((n - 1) * n), determined=False)

    consistency = {
        # U_S and U_C cover U_R; reported, not asserted
        "U_S_or_U_C_equals_U_R": (mem["U_S"] or mem["U_C"]) == mem["U_R"],
        "einstein_excludes_quasi": not (qe.einstein and qe.quasi_einstein),
    }
    if roter.exact and roter.derived:
        consistency["roter_LR_matches_fit"] = (
            pseudo.exact and abs(pseudo["L_R"] - roter.derived["L_R"])
            <= tol * max(1.0, abs(roter.derived["L_R"])))
        consistency["roter_star"] = star is not None and star <= tol

    return ClassificationReport(
        einstein=qe.einstein,
        quasi_einstein=qe.quasi_einstein,
        alpha=qe.alpha,
        rank_S_alpha=qe.rank,
        membership=mem,
        pseudosymmetric=pseudo_entry,
        ricci_pseudosymmetric=_fit_entry(ricci),
        weyl_pseudosymmetric=_fit_entry(weyl_p),
        pseudosymmetric_weyl=_fit_entry(p_weyl),
        genpseudo=_fit_entry(gen),
        roter={"phi": roter.phi, "mu": roter.mu, "eta": roter.eta, "residual": roter.residual,
               "exact": roter.exact, "applicable": roter.applicable, **roter.derived},
        condition_star=star,
        cond01=_fit_entry(c01),
        consistency=consistency,
    )


def rank_S_minus(pkg: CurvaturePackage, alpha: float) -> int:
    return numeric_rank(pkg.S - alpha * pkg.g)
