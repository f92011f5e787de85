"""Premise => conclusion audits of the curvature identities and theorems.

Every audit is a function of a :class:`CaseContext` returning branches. A
branch has a premise (True, False, or None when not applicable) and a set of
conclusion residuals. An audit fails only when some branch has a true premise
and a conclusion residual above tolerance; false premises are vacuous passes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable

import numpy as np

from .chart_lab import rn_roter_closed_form
from .conditions import (
    SET_TOL,
    ClassificationReport,
    classify,
    condition_star_residual,
    fit_roter,
    roter_basis,
    roter_checks,
    roter_scalars,
)
from .curvature_ops import (
    CurvaturePackage,
    cyclic_sum_residual,
    package_consistency,
    prop22_residual,
    qg_kernel_test,
    tachibana,
    weyl,
)
from .fitting import DEFAULT_TOL, fit_span
from .hypersurface import (
    CubicFit,
    HypersurfaceData,
    UHResult,
    detect_UH,
    eigen_clusters,
    fit_cubic,
    gauss_curvature,
    gauss_ricci,
    principal_rank,
)
from .tensor_core import kn_product, metric_trace, numeric_rank, res

PREMISE_TOL = 1e-9
RN_TOL = 1e-6

HOLDS, FAILED, NA = "holds", "failed", "n/a"


def srel(a: float, b: float) -> float:
    """Scalar version of the relative residual."""
    return abs(a - b) / max(1.0, abs(a) + abs(b))


def agree(p: bool, q: bool) -> float:
    """0 when two decisions agree, 1 otherwise (an equivalence expressed as a residual)."""
    return 0.0 if bool(p) == bool(q) else 1.0


@dataclass
class CaseContext:
    """Everything an audit may look at for one point of one gallery case."""

    pkg: CurvaturePackage
    hyper: HypersurfaceData | None = None
    chart_kind: str | None = None
    chart_params: dict = field(default_factory=dict)
    point: tuple | None = None
    tol: float = DEFAULT_TOL
    asserted: tuple = ()

    @property
    def n(self) -> int:
        return self.pkg.n

    @cached_property
    def report(self) -> ClassificationReport:
        return classify(self.pkg, self.tol)

    @cached_property
    def uh(self) -> UHResult:
        return detect_UH(self.hyper)

    @cached_property
    def cubic(self) -> CubicFit:
        return fit_cubic(self.hyper)

    @property
    def c(self) -> float:
        return self.hyper.c

    @cached_property
    def ds4(self) -> bool:
        return self.uh.in_UH and self.cubic.residual <= PREMISE_TOL

    @cached_property
    def ds4aa_residual(self) -> float:
        h = self.hyper
        return fit_span(h.H3 - h.trH * h.H2, {"psi": h.H}).residual

    @cached_property
    def ds4aa(self) -> bool:
        return self.uh.in_UH and self.ds4aa_residual <= PREMISE_TOL

    @cached_property
    def rank_H(self) -> int:
        return principal_rank(self.hyper)

    @cached_property
    def no_rank_one_shift(self) -> bool:
        """``rank(S - alpha g) > 1`` for every real ``alpha``."""
        pkg = self.pkg
        if self.report.einstein:
            return False
        for value, _ in eigen_clusters(pkg.S, pkg.m):
            if abs(value.imag) <= 1e-7 * max(1.0, abs(value)):
                if numeric_rank(pkg.S - value.real * pkg.g) <= 1:
                    return False
        return True

    @cached_property
    def cond01(self) -> bool:
        return self.report.cond01["residual"] <= PREMISE_TOL


@dataclass(frozen=True)
class Branch:
    name: str
    premise: bool | None
    residuals: dict = field(default_factory=dict)
    constants: dict = field(default_factory=dict)
    tol: float | None = None


@dataclass
class AuditResult:
    name: str
    premise: str
    residuals: dict
    constants: dict
    branches: dict
    passed: bool
    failing: list

    def as_dict(self) -> dict:
        return {"name": self.name, "premise": self.premise, "branches": self.branches,
                "residuals": self.residuals, "constants": self.constants,
                "passed": self.passed, "failing": self.failing}


def _combine(name: str, branches: list[Branch], tol: float) -> AuditResult:
    residuals: dict = {}
    constants: dict = {}
    status: dict = {}
    failing: list = []
    for b in branches:
        if b.premise is None:
            status[b.name] = NA
            continue
        status[b.name] = HOLDS if b.premise else FAILED
        prefix = f"{b.name}." if len(branches) > 1 else ""
        for k, v in b.constants.items():
            constants[prefix + k] = v
        if not b.premise:
            continue
        limit = tol if b.tol is None else b.tol
        for k, v in b.residuals.items():
            residuals[prefix + k] = float(v)
            if not (v <= limit):
                failing.append(prefix + k)
    states = set(status.values())
    premise = HOLDS if HOLDS in states else FAILED if FAILED in states else NA
    return AuditResult(name, premise, residuals, constants, status, not failing, failing)


# ---------------------------------------------------------------------------
# universal identities


def audit_lemma21(ctx: CaseContext) -> list[Branch]:
    pkg = ctx.pkg
    cyc = {
        "cyclic_QgR": cyclic_sum_residual(pkg.QgR),
        "cyclic_QSR": cyclic_sum_residual(pkg.QSR),
        "cyclic_QSC": cyclic_sum_residual(pkg.QSC),
        "cyclic_QgC": cyclic_sum_residual(pkg.QgC),
    }
    kernel = {}
    for label, t in (("R", pkg.R), ("C", pkg.C)):
        try:
            qg_kernel_test(t, pkg.m, SET_TOL)
            kernel[f"kernel_{label}"] = 0.0
        except ArithmeticError:
            kernel[f"kernel_{label}"] = 1.0
    return [Branch("i", True, cyc), Branch("ii", True, kernel)]


def audit_prop22(ctx: CaseContext) -> list[Branch]:
    if ctx.n < 4:
        return [Branch("identity01", None)]
    return [Branch("identity01", True, {"identity01": prop22_residual(ctx.pkg)})]


def audit_eqn21(ctx: CaseContext) -> list[Branch]:
    pkg = ctx.pkg
    if ctx.n < 3:
        return [Branch("weyl", None)]
    n, k, g = ctx.n, pkg.kappa, pkg.g
    cons = package_consistency(pkg)
    zero6 = np.zeros((n,) * 6)
    out = {
        "weyl_formula": res(pkg.C, weyl(pkg.R, pkg.S, k, pkg.m)),
        "weyl_trace_free": cons["weyl_trace"],
        "ricci_contraction": cons["ricci"],
        "QSG": res(pkg.QSG, -tachibana(g, pkg.gS())),
        "QgG": res(tachibana(g, pkg.G), zero6),
        "srsr": res(pkg.QSC, pkg.QSR + tachibana(g, 0.5 * pkg.SS) / (n - 2)
                    - k / ((n - 2) * (n - 1)) * tachibana(g, pkg.gS())),
    }
    return [Branch("weyl", True, out)]


def audit_thm23(ctx: CaseContext) -> list[Branch]:
    pkg, rep = ctx.pkg, ctx.report
    if ctx.n < 4:
        return [Branch("i", None), Branch("ii", None)]
    n, k = ctx.n, pkg.kappa
    einstein = rep.einstein
    first = Branch("i", einstein, {"star": condition_star_residual(pkg)} if einstein else {})
    pseudo = einstein and rep.pseudosymmetric["exact"] and rep.membership["U_R"]
    second = {}
    if pseudo:
        lr = rep.pseudosymmetric["L_R"]
        second = {
            "RR": res(pkg.RR, pkg.QSR + (lr - k / n) * pkg.QgC),
            "CC": res(pkg.CC, (lr - k / ((n - 1) * n)) * pkg.QgC),
            "RC_plus_CR": res(pkg.RC + pkg.CR, pkg.QSC + (2 * lr - k / (n - 1)) * pkg.QgC),
        }
    return [first, Branch("ii", pseudo, second)]


def audit_thm24(ctx: CaseContext) -> list[Branch]:
    pkg = ctx.pkg
    if ctx.n < 4:
        return [Branch("roter", None)]
    fit = fit_roter(pkg, ctx.tol)
    premise = fit.applicable and fit.residual <= PREMISE_TOL and abs(fit.phi) > 1e-12
    if not premise:
        return [Branch("roter", False, constants={"roter_residual": fit.residual,
                                                  "applicable": fit.applicable})]
    consts = {"phi": fit.phi, "mu": fit.mu, "eta": fit.eta,
              **roter_scalars(fit.phi, fit.mu, fit.eta, pkg.kappa, pkg.n)}
    return [Branch("roter", True, roter_checks(pkg, fit.phi, fit.mu, fit.eta), consts)]


def audit_weyl_pseudo_bis(ctx: CaseContext) -> list[Branch]:
    pkg, rep = ctx.pkg, ctx.report
    pseudo = rep.pseudosymmetric
    premise = pseudo["residual"] <= PREMISE_TOL
    out = {}
    if premise:
        lr = pseudo["L_R"]
        out = {"RS": res(pkg.RS, lr * pkg.QgS), "RC": res(pkg.RC, lr * pkg.QgC)}
    return [Branch("pseudo", premise, out, {"L_R": pseudo["L_R"]})]


def _remark25_iiib_pattern(h: HypersurfaceData) -> bool:
    """Principal curvatures lam (p times), -lam (p times), 0 once, n = 2p + 1, in Euclidean space."""
    n = h.n
    if n < 5 or n % 2 == 0 or h.kappa_tilde != 0 or h.epsilon != 1 or h.m.signature != 0:
        return False
    p = (n - 1) // 2
    ev = np.sort(np.linalg.eigvals(h.shape_operator()).real)
    lam = ev[-1]
    if lam <= 1e-9:
        return False
    target = np.sort(np.r_[[lam] * p, [-lam] * p, [0.0]])
    return bool(np.allclose(ev, target, atol=1e-9 * max(1.0, lam)))


def audit_remark25(ctx: CaseContext) -> list[Branch]:
    pkg, rep, n, k = ctx.pkg, ctx.report, ctx.n, ctx.pkg.kappa
    branches = []
    # (i) warped products over a 1-dimensional base with an Einstein fibre
    if ctx.chart_kind == "warped_1d_einstein" and n >= 4:
        qe_or_e = rep.quasi_einstein or rep.einstein
        branches.append(Branch("i", True, {
            "quasi_einstein": 0.0 if qe_or_e else 1.0,
            "ricci_pseudosymmetric": rep.ricci_pseudosymmetric["residual"],
        }, {"alpha": rep.alpha, "L_S": rep.ricci_pseudosymmetric["L_S"]}))
    else:
        branches.append(Branch("i", None))
    # (ii) quasi-Einstein points
    if n >= 3:
        qe = rep.quasi_einstein
        out = {}
        if qe:
            a = rep.alpha
            shifted = pkg.S - a * pkg.g
            out = {
                "rank_one_square": res(kn_product(shifted, shifted), np.zeros_like(pkg.R)),
                "trtrtr": res(pkg.QSR, pkg.QSC - (a - k / (n - 1)) / (n - 2) * tachibana(pkg.g, pkg.gS())),
            }
        branches.append(Branch("ii", qe, out, {"alpha": rep.alpha}))
    else:
        branches.append(Branch("ii", None))
    # (iii)(b) three principal curvatures lam, -lam, 0
    h = ctx.hyper
    if h is not None and n >= 5:
        hit = _remark25_iiib_pattern(h)
        out = {}
        if hit:
            out = {
                "H3": res(h.H3, -k / (n - 1) * h.H),
                "ricci_semisymmetric": res(pkg.RS, np.zeros_like(pkg.RS)),
                "quasi_einstein": 0.0 if rep.quasi_einstein else 1.0,
                "alpha": srel(rep.alpha if rep.alpha is not None else math.inf, k / (n - 1)),
                "RC": res(pkg.RC, pkg.QSC),
                "CR": res(pkg.CR, (n - 3) / (n - 2) * pkg.QSC),
                "quasi022": res((n - 2) * (pkg.RC - pkg.CR), pkg.QSC),
            }
        branches.append(Branch("iii_b", hit, out, {"kappa": k}))
    else:
        branches.append(Branch("iii_b", None))
    # (v) Reissner-Nordstrom(-de Sitter) Roter coefficients
    if ctx.chart_kind == "rn_ds" and ctx.point is not None:
        branches.append(rn_roter_branch(ctx))
    else:
        branches.append(Branch("v", None))
    return branches


def rn_convention_map(phi: float, mu: float, eta: float) -> dict[str, float]:
    """Express Roter coefficients in the opposite curvature-sign convention with an ``eta g^g`` term.

    The closed forms of :func:`rn_roter_closed_form` use ``R' = -R`` and normalise the last term as
    ``eta' g^g``; in that convention ``(phi', mu', eta') = (-phi, mu, -eta/2)``.
    """
    return {"phi": -phi, "mu": mu, "eta": -0.5 * eta}


def rn_roter_branch(ctx: CaseContext) -> Branch:
    pkg, p = ctx.pkg, ctx.chart_params
    r = float(ctx.point[1])
    fit = fit_span(pkg.R, roter_basis(pkg))
    mapped = rn_convention_map(fit["phi"], fit["mu"], fit["eta"])
    closed = rn_roter_closed_form(p["M"], p["Q"], p["Lambda"], r)
    out = {f"{k}_rel": abs(mapped[k] - closed[k]) / max(abs(closed[k]), 1e-300) for k in closed}
    out["roter_fit"] = fit.residual
    out["star"] = condition_star_residual(pkg)
    consts = {"phi_fit": fit["phi"], "mu_fit": fit["mu"], "eta_fit": fit["eta"],
              **{f"{k}_closed": v for k, v in closed.items()}}
    return Branch("v", True, out, consts, tol=RN_TOL)


# ---------------------------------------------------------------------------
# hypersurfaces


def _needs_hyper(ctx: CaseContext, names: list[str], min_n: int = 4) -> list[Branch] | None:
    if ctx.hyper is None or ctx.n < min_n:
        return [Branch(nm, None) for nm in names]
    return None


def audit_gauss(ctx: CaseContext) -> list[Branch]:
    skip = _needs_hyper(ctx, ["gauss"], 3)
    if skip:
        return skip
    pkg, h, n = ctx.pkg, ctx.hyper, ctx.n
    c = h.c
    s, k = gauss_ricci(h)
    out = {
        "R": res(pkg.R, gauss_curvature(h)),
        "C5ab_S": res(pkg.S, s),
        "C5ab_kappa": srel(pkg.kappa, k),
        "900ab": res(pkg.RR, pkg.QSR - (n - 2) * c * pkg.QgC),
        "900abdzdz": res(pkg.RR, pkg.QSR - (n - 2) * c * pkg.QgR - c * pkg.QSG),
    }
    return [Branch("gauss", True, out)]


def audit_thm3x(ctx: CaseContext) -> list[Branch]:
    names = ["thm31", "thm32_i", "thm32_ii", "thm32_iii", "thm32_iv", "thm32_v", "thm33", "thm34_35"]
    if ctx.hyper is None or ctx.n < 3:
        return [Branch(nm, None) for nm in names]
    pkg, h, rep, n = ctx.pkg, ctx.hyper, ctx.report, ctx.n
    eps, c = h.epsilon, h.c
    uh = ctx.uh
    two = not uh.in_UH
    mem = rep.membership
    out: list[Branch] = []

    # two-eigenvalue branch: H^2 = alpha H + beta g on U_R
    p31 = two and mem["U_R"]
    out.append(Branch("thm31", p31,
                      {"RR": res(pkg.RR, (c - eps * uh.beta) * pkg.QgR)} if p31 else {},
                      {"alpha": uh.alpha, "beta": uh.beta}))
    if n < 4:
        out.extend(Branch(nm, None) for nm in names[1:])
        return out

    pseudo = rep.pseudosymmetric
    p_i = mem["U_R"] and pseudo["residual"] <= PREMISE_TOL
    r_i = {}
    if p_i:
        a = pseudo["L_R"] + (n - 2) * c
        r_i = {"pseudo77": res(pkg.QSR, c * pkg.QSG + a * pkg.QgR)}
    out.append(Branch("thm32_i", p_i, r_i, {"L_R": pseudo["L_R"]}))

    rank2 = ctx.rank_H == 2
    out.append(Branch("thm32_ii", True,
                      {"equivalence": agree(pseudo["exact"], two or rank2)},
                      {"pseudosymmetric": pseudo["exact"], "two": two, "rank_H": ctx.rank_H}))

    out.append(Branch("thm32_iii", rank2,
                      {"pseudo_constant01": res(pkg.RR, c * pkg.QgR)} if rank2 else {}))

    p_iv = rank2 and uh.in_UH
    out.append(Branch("thm32_iv", p_iv,
                      {"pseudo88": res(pkg.QSR, c * pkg.QSG + (n - 1) * c * pkg.QgR)} if p_iv else {}))

    s_hat = pkg.S - (n - 1) * c * pkg.g
    p_v = p_iv and numeric_rank(s_hat) > 1
    r_v, c_v = {}, {}
    if p_v:
        fit = fit_span(pkg.R - c * pkg.G, {"phi": 0.5 * kn_product(s_hat, s_hat)})
        r_v = {"pseudo_constant06": fit.residual}
        c_v = {"phi": fit["phi"]}
    out.append(Branch("thm32_v", p_v, r_v, c_v))

    # Roter form off U_H, on U_S and U_C
    p33 = two and mem["U_S"] and mem["U_C"] and abs(h.trH - uh.alpha) > 1e-12
    r33, c33 = {}, {}
    if p33:
        phi = eps * (h.trH - uh.alpha) ** -2
        shift = (n - 1) * c - eps * uh.beta
        mu = -phi * shift
        eta = phi * shift**2 + c
        model = phi / 2 * pkg.SS + mu * pkg.gS() + eta / 2 * kn_product(pkg.g, pkg.g)
        indep = fit_roter(pkg, ctx.tol)
        r33 = {"roter": res(pkg.R, model), "phi_vs_fit": srel(phi, indep.phi),
               "mu_vs_fit": srel(mu, indep.mu), "eta_vs_fit": srel(eta, indep.eta)}
        c33 = {"phi": phi, "mu": mu, "eta": eta}
    out.append(Branch("thm33", p33, r33, c33))

    # condition (*) whenever H^2 is in span{H, g}
    distinct = len(eigen_clusters(h.H, h.m))
    out.append(Branch("thm34_35", two, {"star": condition_star_residual(pkg)} if two else {},
                      {"distinct_principal_curvatures": distinct}))
    return out


def _min_rank_shift(h: HypersurfaceData) -> int:
    best = h.n
    for value, _ in eigen_clusters(h.H, h.m):
        if abs(value.imag) <= 1e-7 * max(1.0, abs(value)):
            best = min(best, numeric_rank(h.H - value.real * h.m.g))
    return best


def audit_remark37(ctx: CaseContext) -> list[Branch]:
    skip = _needs_hyper(ctx, ["i", "ii"])
    if skip:
        return skip
    pkg, h, rep, n = ctx.pkg, ctx.hyper, ctx.report, ctx.n
    eps, kt, k = h.epsilon, h.kappa_tilde, pkg.kappa
    r_i = {}
    if rep.einstein:
        rhs = h.trH * h.H + (n - 1) * eps / n * (kt / (n + 1) - k / (n - 1)) * h.m.g
        r_i = {"H2": res(h.H2, rhs)}
    low = _min_rank_shift(h) <= 1
    conf_flat = not rep.membership["U_C"]
    r_ii = {"conformally_flat_iff_rank": agree(conf_flat, low)}
    if low:
        r_ii["two"] = ctx.uh.residual
    return [Branch("i", rep.einstein, r_i),
            Branch("ii", True, r_ii, {"min_rank_H_shift": _min_rank_shift(h)})]


def _ds4_constants(ctx: CaseContext) -> dict:
    h, pkg, n = ctx.hyper, ctx.pkg, ctx.n
    eps, c, k = h.epsilon, h.c, pkg.kappa
    psi, rho = ctx.cubic.psi, ctx.cubic.rho
    a1 = (k / (n - 1) + eps * psi - (n * n - 3 * n + 3) * c) / (n - 2)
    a2 = -(n - 3) * c / (n - 2)
    a3 = eps * psi - 2 * (n - 1) * c
    lam = rho * h.trH - k * a3 - metric_trace(pkg.S2, pkg.m)
    return {"psi": psi, "rho": rho, "alpha1": a1, "alpha2": a2, "alpha3": a3, "lambda": lam}


def audit_prop41(ctx: CaseContext) -> list[Branch]:
    skip = _needs_hyper(ctx, ["ds4"])
    if skip:
        return skip
    if not ctx.ds4:
        return [Branch("ds4", False, constants={"in_UH": ctx.uh.in_UH, "ds4_residual": ctx.cubic.residual})]
    pkg, h, n = ctx.pkg, ctx.hyper, ctx.n
    eps, c, k = h.epsilon, h.c, pkg.kappa
    d = _ds4_constants(ctx)
    psi, rho, a1, a2 = d["psi"], d["rho"], d["alpha1"], d["alpha2"]
    qhg = tachibana(h.H, pkg.G)
    out = {
        "ZZ1": res(pkg.RC, pkg.QSR - (n - 2) * c * pkg.QgR + a2 * pkg.QSG + rho / (n - 2) * qhg),
        "ZZ2": res(pkg.CR, (n - 3) / (n - 2) * pkg.QSR + a1 * pkg.QgR + a2 * pkg.QSG),
        "ZZ3": res((n - 2) * (pkg.RC - pkg.CR),
                   pkg.QSR + rho * qhg + ((n - 1) * c - k / (n - 1) - eps * psi) * pkg.QgR),
        "DS16A": res((n - 2) * pkg.CC, (n - 3) * pkg.QSR + (n - 2) * a1 * pkg.QgR
                     + (a1 - a2) * pkg.QSG + (n - 3) / (n - 2) * rho * qhg),
        "DZ004": res(pkg.RS, c * pkg.QgS + rho * tachibana(pkg.g, h.H)),
    }
    return [Branch("ds4", True, out, d)]


def audit_prop42(ctx: CaseContext) -> list[Branch]:
    skip = _needs_hyper(ctx, ["i", "ii"])
    if skip:
        return skip
    if not ctx.ds4:
        return [Branch("i", False), Branch("ii", False)]
    pkg, h, n = ctx.pkg, ctx.hyper, ctx.n
    eps, c, k, m = h.epsilon, h.c, pkg.kappa, pkg.m
    d = _ds4_constants(ctx)
    psi, rho, a1, a2, a3, lam = (d[x] for x in ("psi", "rho", "alpha1", "alpha2", "alpha3", "lambda"))
    s, s2, s3 = pkg.S, pkg.S2, pkg.S3
    r1 = -(n - 2) * c - a3
    r2 = -lam / n - ((n - 1) * c + a3) * a3
    r3 = (metric_trace(s3, m) + (2 * eps * psi - 3 * (n - 1) * c) * metric_trace(s2, m) - k * r2) / n
    zero6 = np.zeros((n,) * 6)
    a3_alt = (n - 2) ** 2 * ((a1 - a2) / (n - 2) - 2 * a2 - c) - k / (n - 1)
    out = {
        "DZ005": res(tachibana(rho * h.H - a3 * s - s2, pkg.G), zero6),
        "DZ006": srel(a3, a3_alt),
        "DZ008": res(rho * h.H, s2 + a3 * s + lam / n * pkg.g),
        "GGG01": res(pkg.RS, tachibana(pkg.g, s2) + (eps * psi - (2 * n - 3) * c) * pkg.QgS),
        "EEE01": res(pkg.act(pkg.R, s2), tachibana(s, s2) + r1 * tachibana(pkg.g, s2) + r2 * pkg.QgS),
        "EEE01new": res(s3, (-2 * eps * psi + 3 * (n - 1) * c) * s2 + r2 * s + r3 * pkg.g),
    }
    first = Branch("i", True, out, {**d, "rho1": r1, "rho2": r2, "rho3": r3})
    # substituting S^2 = beta1 S + beta2 g into DZ008 with rho = 0 forces beta1 = -alpha3
    quad = fit_span(s2, {"beta1": s, "beta2": pkg.g})
    p_ii = quad.residual <= PREMISE_TOL
    r_ii = {}
    if p_ii:
        scale = max(1.0, float(np.linalg.norm(h.H3)))
        r_ii = {"rho_zero": abs(rho) * np.linalg.norm(pkg.g) / scale,
                "beta1": srel(quad["beta1"], -a3), "beta2": srel(quad["beta2"], -lam / n)}
    second = Branch("ii", p_ii, r_ii, {"beta1": quad["beta1"], "beta2": quad["beta2"]})
    return [first, second]


def audit_prop43(ctx: CaseContext) -> list[Branch]:
    names = ["i", "ii", "iii", "iv", "v"]
    skip = _needs_hyper(ctx, names)
    if skip:
        return skip
    pkg, h, n = ctx.pkg, ctx.hyper, ctx.n
    eps, c, kt, k = h.epsilon, h.c, h.kappa_tilde, pkg.kappa
    uh = ctx.uh.in_UH
    out = []
    p_i = n == 4 and ctx.ds4
    out.append(Branch("i", p_i, {"DS4aa": ctx.ds4aa_residual} if p_i else {}))

    rank2 = ctx.rank_H == 2 and uh
    r_ii, c_ii = {}, {}
    if rank2:
        psi_a = 0.5 * (metric_trace(h.H2, h.m) - h.trH**2)
        psi_b = (n - 1) * eps / 2 * (kt / (n + 1) - k / (n - 1))
        r_ii = {"DS4aa": ctx.ds4aa_residual, "psi_trace": srel(ctx.cubic.psi, psi_a),
                "psi_curvature": srel(ctx.cubic.psi, psi_b)}
        c_ii = {"psi": ctx.cubic.psi}
    out.append(Branch("ii", rank2, r_ii, c_ii))

    s_hat = pkg.S - (n - 1) * c * pkg.g
    p_iii = rank2 and numeric_rank(s_hat) > 1
    r_iii, c_iii = {}, {}
    if p_iii:
        # closed-form normalisation: 2/((n-1) phi_14) = kt/(n+1) - kappa/(n-1); Roter uses phi = -phi_14
        phi14 = 2 / ((n - 1) * (kt / (n + 1) - k / (n - 1)))
        phi = -phi14
        mu = -(n - 1) * c * phi
        eta = c * ((n - 1) ** 2 * c * phi + 1)
        model = phi / 2 * pkg.SS + mu * pkg.gS() + eta / 2 * kn_product(pkg.g, pkg.g)
        f = (n - 3) / ((n - 2) * (n - 1) * phi14)
        r_iii = {
            "roter": res(pkg.R, model),
            "pseudo_constant01": res(pkg.RR, c * pkg.QgR),
            "pseudo_constant02": res(pkg.RC, c * pkg.QgC),
            "pseudo_constant03": res(pkg.CR, f * pkg.QgR),
            "pseudo_constant04": res(pkg.CC, f * pkg.QgC),
        }
        c_iii = {"phi": phi, "phi_14": phi14, "mu": mu, "eta": eta}
    out.append(Branch("iii", p_iii, r_iii, c_iii))

    r_iv = {}
    if uh:
        r_iv = {"equivalence": agree(res(pkg.RR, c * pkg.QgR) <= ctx.tol,
                                     res(pkg.RC, c * pkg.QgC) <= ctx.tol)}
    out.append(Branch("iv", uh, r_iv))

    p_v = ctx.ds4aa
    out.append(Branch("v", p_v, {"DZ004Ricciaaa": res(pkg.RS, c * pkg.QgS)} if p_v else {}))
    return out


def _b_tensors(ctx: CaseContext) -> dict[str, np.ndarray]:
    pkg, h, n = ctx.pkg, ctx.hyper, ctx.n
    eps, c, kt, k = h.epsilon, h.c, h.kappa_tilde, pkg.kappa
    psi = ctx.cubic.psi
    r, gs, gs2, ss = pkg.R, pkg.gS(), pkg.gS(pkg.S2), pkg.SS
    lead = k / (n - 1) + 2 * eps * psi / (n - 1) - kt / (n + 1)
    # the lambda G terms are dropped: Q(g, G) = 0 makes them invisible
    return {
        "B1": ((k + eps * psi - (n - 1) ** 2 * c) * r - 0.5 * ss + gs2 + (eps * psi - (n - 1) * c) * gs) / (n - 1),
        "B2": ((k + eps * psi - (n - 1) ** 2 * c) * r - gs2 / (n - 2) - 0.5 * ss
               - (eps * psi - (n - 1) ** 2 * c) * gs / (n - 2)) / (n - 1),
        "B3": lead * r + (n - 3) / ((n - 2) * (n - 1)) * ((eps * psi - (n - 1) * c) * gs - 0.5 * ss + gs2),
        "B4": (-eps * psi / (n - 1) + c) * r + (-eps * psi / (n - 1) + 2 * c) * gs - gs2 / (n - 1)
        - ss / (2 * (n - 2) * (n - 1)),
        "B": lead * pkg.C - (n - 3) / ((n - 2) ** 2 * (n - 1)) * ((n - 2) / 2 * ss - k * gs + gs2),
        "B_zz": lead * r - (n - 3) / (2 * (n - 2) * (n - 1)) * ss
        - (k / ((n - 2) * (n - 1)) + 2 * eps * psi / (n - 1) - kt / (n + 1)) * gs / (n - 2)
        - (n - 3) / ((n - 2) ** 2 * (n - 1)) * gs2,
    }


def _b_residuals(ctx: CaseContext) -> dict[str, float]:
    pkg = ctx.pkg
    b = _b_tensors(ctx)
    g = pkg.g
    return {
        "RR_B1": res(pkg.RR, tachibana(g, b["B1"])),
        "RC_B2": res(pkg.RC, tachibana(g, b["B2"])),
        "CR_B3": res(pkg.CR, tachibana(g, b["B3"])),
        "diff_B4": res(pkg.RC - pkg.CR, tachibana(g, b["B4"])),
        "CC_B": res(pkg.CC, tachibana(g, b["B"])),
        "CC_B_zz": res(pkg.CC, tachibana(g, b["B_zz"])),
    }


def thm46_hypothesis(ctx: CaseContext) -> float:
    """Residual of ``Q(S,R)`` against ``Q(g, span{R, g^S, g^S^2, S^S})``."""
    pkg = ctx.pkg
    g = pkg.g
    basis = [tachibana(g, t) for t in (pkg.R, pkg.gS(), pkg.gS(pkg.S2), pkg.SS)]
    return fit_span(pkg.QSR, basis).residual


def audit_thm44_45(ctx: CaseContext) -> list[Branch]:
    skip = _needs_hyper(ctx, ["thm46"])
    if skip:
        return skip
    hyp = thm46_hypothesis(ctx)
    premise = ctx.ds4 and hyp <= PREMISE_TOL
    consts = {"hypothesis_residual": hyp, "lambda": "indeterminate (annihilated by Q(g,.))"}
    return [Branch("thm46", premise, _b_residuals(ctx) if premise else {}, consts)]


def audit_prop47(ctx: CaseContext) -> list[Branch]:
    skip = _needs_hyper(ctx, ["i", "ii"])
    if skip:
        return skip
    pkg, h, n = ctx.pkg, ctx.hyper, ctx.n
    eps, c, k = h.epsilon, h.c, pkg.kappa
    br = (n - 2) / 2 * pkg.SS - k * pkg.gS() + pkg.gS(pkg.S2)
    qbr = tachibana(pkg.g, br)
    first = Branch("i", True, {"02identity01hyper": res(
        pkg.RC + pkg.CR, pkg.QSC - (n - 2) * c * pkg.QgC + pkg.CC - qbr / (n - 2) ** 2)})
    r_ii = {}
    if ctx.ds4:
        psi = ctx.cubic.psi
        r_ii = {
            "DS16Anew01": res(pkg.CC, (n - 3) / (n - 2) * pkg.RC
                              + (k / (n - 1) + eps * psi - (2 * n - 3) * c) / (n - 2) * pkg.QgC),
            "02identity01hyper17": res((n - 2) * pkg.CR + pkg.RC, (n - 2) * pkg.QSC
                                       + (k / (n - 1) + eps * psi - (n - 1) ** 2 * c) * pkg.QgC
                                       - qbr / (n - 2)),
        }
    return [first, Branch("ii", ctx.ds4, r_ii)]


def _qqee(ctx: CaseContext) -> tuple[dict, dict]:
    """Residuals of the quasi-Einstein relations on U_H and their constants."""
    pkg, h, rep, n = ctx.pkg, ctx.hyper, ctx.report, ctx.n
    c, kt, k = h.c, h.kappa_tilde, pkg.kappa
    a_expected = k / (n - 1) - c
    shift = ((n - 2) * k / (n - 1) + c) / (n - 1)
    a_tensor = (n - 1) / (n - 2) * tachibana(pkg.S - shift * pkg.g, pkg.C)
    diff = pkg.RC - pkg.CR
    star = condition_star_residual(pkg)
    a_zero = res(a_tensor, np.zeros_like(a_tensor)) <= ctx.tol
    q08a = srel(k / (n - 1), kt / (n + 1)) <= ctx.tol
    q08b = res(pkg.QSC, k / n * pkg.QgC) <= ctx.tol
    out = {
        "qqee02": srel(rep.alpha, a_expected),
        "qqee05": res((n - 2) * diff, pkg.QSR - c * pkg.QgR),
        "qqee06": res(diff, pkg.QSC / (n - 2) - c / (n - 2) * pkg.QgC),
        "qqee03": res(diff, k / (n - 1) * pkg.QgC - pkg.QSC + a_tensor),
        "A_zero_iff_star": agree(a_zero, star <= ctx.tol),
        "qqee08_iff_star": agree(q08a and q08b, star <= ctx.tol),
    }
    consts = {"alpha": rep.alpha, "alpha_expected": a_expected, "star": star,
              "qqee08a": q08a, "qqee08b": q08b}
    return out, consts


def audit_thm48(ctx: CaseContext) -> list[Branch]:
    skip = _needs_hyper(ctx, ["qe_ds4aa"])
    if skip:
        return skip
    premise = ctx.report.quasi_einstein and ctx.ds4aa
    if not premise:
        return [Branch("qe_ds4aa", False)]
    out, consts = _qqee(ctx)
    return [Branch("qe_ds4aa", True, out, consts)]


def audit_example49(ctx: CaseContext) -> list[Branch]:
    skip = _needs_hyper(ctx, ["iii"], 5)
    if skip:
        return skip
    pkg, h, rep, n = ctx.pkg, ctx.hyper, ctx.report, ctx.n
    k, m = pkg.kappa, pkg.m
    premise = (h.kappa_tilde == 0 and h.epsilon == 1 and ctx.ds4 and not rep.quasi_einstein
               and abs(ctx.cubic.rho) > 1e-9
               and srel(ctx.cubic.psi, -k / (n - 1)) <= PREMISE_TOL
               and srel(ctx.cubic.rho, k * h.trH / (n - 1)) <= PREMISE_TOL)
    if not premise:
        return [Branch("iii", False)]
    s, s2, s3 = pkg.S, pkg.S2, pkg.S3
    x = tachibana(s2 - k / (n - 1) * s, pkg.G)
    out = {
        "S3": res(s3, 2 * k / (n - 1) * s2
                  + (metric_trace(s3, m) / k - 2 * metric_trace(s2, m) / (n - 1)) * s),
        "DZ020": res(pkg.RC, pkg.QSR + x / (n - 2)),
        "DZ021": res(pkg.CR, (n - 3) / (n - 2) * pkg.QSR),
        "DZ022": res(pkg.CC, (n - 3) / (n - 2) * (pkg.QSR + x / (n - 2))),
        "diff": res((n - 2) * (pkg.RC - pkg.CR), pkg.QSR + x),
        "CC_CR": res(pkg.CC, pkg.CR + (n - 3) / (n - 2) ** 2 * x),
        "DZ024": res(pkg.CC, (n - 3) / (n - 2) * pkg.RC),
    }
    return [Branch("iii", True, out, {"psi": ctx.cubic.psi, "rho": ctx.cubic.rho})]


def audit_thm5x(ctx: CaseContext) -> list[Branch]:
    skip = _needs_hyper(ctx, ["thm51", "thm52_53"])
    if skip:
        return skip
    pkg, h, rep, n = ctx.pkg, ctx.hyper, ctx.report, ctx.n
    eps, c, k = h.epsilon, h.c, pkg.kappa
    base = ctx.uh.in_UH and ctx.cond01
    consts = {"L1": rep.cond01["L1"], "L2": rep.cond01["L2"], "cond01_residual": rep.cond01["residual"]}

    p51 = base and rep.quasi_einstein
    r51 = {}
    if p51:
        qq, _ = _qqee(ctx)
        r51 = {"DS4aa": ctx.ds4aa_residual,
               "quasi321": res((n - 2) * (pkg.RC - pkg.CR), pkg.QSC - c * pkg.QgC),
               **{key: qq[key] for key in ("qqee02", "qqee03", "qqee08_iff_star")}}

    p52 = base and ctx.no_rank_one_shift
    r52 = {}
    if p52:
        psi = ctx.cubic.psi
        t = ((eps * psi + k - (n - 1) * c) * pkg.R + (eps * psi - 2 * (n - 1) * c) * pkg.gS()
             + pkg.gS(pkg.S2) - 0.5 * pkg.SS)
        r52 = {"DS4": ctx.cubic.residual, "star": condition_star_residual(pkg),
               "cond02uuu": res((n - 1) * pkg.QSR, tachibana(pkg.g, t)), **_b_residuals(ctx)}
    return [Branch("thm51", p51, r51, consts), Branch("thm52_53", p52, r52, consts)]


# ---------------------------------------------------------------------------
# conditions asserted by the configuration (negative controls)


def _asserted_residual(ctx: CaseContext, name: str) -> float:
    rep, pkg = ctx.report, ctx.pkg
    table: dict[str, Callable[[], float]] = {
        "condition_star": lambda: condition_star_residual(pkg),
        "einstein": lambda: res(pkg.S, pkg.kappa / pkg.n * pkg.g),
        "semisymmetric": lambda: res(pkg.RR, np.zeros_like(pkg.RR)),
        "pseudosymmetric": lambda: rep.pseudosymmetric["residual"],
        "ricci_pseudosymmetric": lambda: rep.ricci_pseudosymmetric["residual"],
        "weyl_pseudosymmetric": lambda: rep.weyl_pseudosymmetric["residual"],
        "pseudosymmetric_weyl": lambda: rep.pseudosymmetric_weyl["residual"],
        "roter": lambda: rep.roter["residual"],
        "cond01": lambda: rep.cond01["residual"],
        "quasi_einstein": lambda: 0.0 if rep.quasi_einstein else 1.0,
    }
    if name not in table:
        raise KeyError(f"unknown asserted condition {name!r}")
    return table[name]()


ASSERTABLE = ("condition_star", "einstein", "semisymmetric", "pseudosymmetric",
              "ricci_pseudosymmetric", "weyl_pseudosymmetric", "pseudosymmetric_weyl",
              "roter", "cond01", "quasi_einstein")


def audit_asserted(ctx: CaseContext) -> list[Branch]:
    if not ctx.asserted:
        return [Branch("asserted", None)]
    return [Branch(name, True, {name: _asserted_residual(ctx, name)}) for name in ctx.asserted]


AUDITS: dict[str, Callable[[CaseContext], list[Branch]]] = {
    "lemma21": audit_lemma21,
    "prop22": audit_prop22,
    "eqn21": audit_eqn21,
    "thm23": audit_thm23,
    "thm24": audit_thm24,
    "weyl_pseudo_bis": audit_weyl_pseudo_bis,
    "remark25": audit_remark25,
    "gauss": audit_gauss,
    "thm3x": audit_thm3x,
    "remark37": audit_remark37,
    "prop41": audit_prop41,
    "prop42": audit_prop42,
    "prop43": audit_prop43,
    "thm44_45": audit_thm44_45,
    "prop47": audit_prop47,
    "thm48": audit_thm48,
    "example49": audit_example49,
    "thm5x": audit_thm5x,
    "asserted": audit_asserted,
}


def run_audit(name: str, ctx: CaseContext, tol: float | None = None) -> AuditResult:
    """Run one audit; ``tol`` overrides the context's conclusion tolerance."""
    if name not in AUDITS:
        raise KeyError(f"unknown audit {name!r}")
    return _combine(name, AUDITS[name](ctx), ctx.tol if tol is None else tol)


def run_all(ctx: CaseContext, names=None, tol_overrides: dict | None = None) -> list[AuditResult]:
    overrides = tol_overrides or {}
    return [run_audit(nm, ctx, overrides.get(nm)) for nm in (names or AUDITS)]
