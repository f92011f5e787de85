"""Acceptance criteria, one test each. Every test prints one PASS/FAIL line."""

import json

import numpy as np
import pytest
from click.testing import CliRunner

from conftest import clifford_curvatures, hyper
from curvlab.audits import rn_convention_map
from curvlab.chart_lab import build_chart, curvature_at, rn_roter_closed_form
from curvlab.cli import main
from curvlab.conditions import condition_star_residual, fit_roter
from curvlab.curvature_ops import (
    cyclic_sum_residual,
    prop22_residual,
    random_algebraic_curvature,
    random_metric,
    random_sym2,
    tachibana,
    weyl_decompose,
)
from curvlab.gallery import load_config, report_json, run_gallery
from curvlab.hypersurface import HypersurfaceData, fit_cubic, gauss_package, quasi_einstein_alpha
from curvlab.tensor_core import metric_trace, res


@pytest.fixture
def report_line(capsys):
    def emit(number, title, ok, detail):
        with capsys.disabled():
            print(f"\n[criterion {number}] {'PASS' if ok else 'FAIL'} {title}: {detail}")
        assert ok, detail
    return emit


@pytest.fixture(scope="module")
def default_report():
    return run_gallery(load_config(), meta=False)


def test_criterion_1_universal_identities(report_line):
    rng = np.random.default_rng(1)
    worst_cyclic = worst_prop22 = 0.0
    count = 0
    for n in (4, 5, 6):
        for s in (0, 1):
            for _ in range(50):
                m = random_metric(rng, n, s)
                pkg = weyl_decompose(random_algebraic_curvature(rng, n, m, 3), m)
                a = random_sym2(rng, n)
                worst_cyclic = max(worst_cyclic, cyclic_sum_residual(pkg.QgR), cyclic_sum_residual(pkg.QSC),
                                   cyclic_sum_residual(tachibana(a, pkg.R)))
                worst_prop22 = max(worst_prop22, prop22_residual(pkg))
                count += 1
    ok = count >= 300 and worst_cyclic <= 1e-10 and worst_prop22 <= 1e-10
    report_line(1, "universal identities", ok,
                f"{count} packages, max cyclic {worst_cyclic:.2e}, max identity01 {worst_prop22:.2e} (tol 1e-10)")


def test_criterion_2_gauss_consistency(report_line):
    rng = np.random.default_rng(2)
    worst_c5 = worst_900 = 0.0
    count = 0
    for eps in (1, -1):
        for kt in (-6.0, 0.0, 30.0):
            for i in range(100):
                n = 4 + i % 3
                m = random_metric(rng, n, i % 2)
                h = HypersurfaceData(m, random_sym2(rng, n), eps, kt)
                pkg = gauss_package(h)
                h2 = h.H @ m.g_inv @ h.H
                tr, tr2 = metric_trace(h.H, m), metric_trace(h2, m)
                s_closed = eps * (tr * h.H - h2) + (n - 1) * kt / (n * (n + 1)) * m.g
                k_closed = eps * (tr**2 - tr2) + (n - 1) * kt / (n + 1)
                worst_c5 = max(worst_c5, res(pkg.S, s_closed),
                               abs(pkg.kappa - k_closed) / max(1.0, abs(k_closed)))
                rhs = pkg.QSR - (n - 2) * kt / (n * (n + 1)) * pkg.QgC
                worst_900 = max(worst_900, res(pkg.RR, rhs))
                count += 1
    ok = count >= 600 and worst_c5 <= 1e-10 and worst_900 <= 1e-9
    report_line(2, "Gauss consistency", ok,
                f"{count} hypersurfaces, max C5ab {worst_c5:.2e} (tol 1e-10), max 900ab {worst_900:.2e} (tol 1e-9)")


def test_criterion_3_rn_roter(report_line):
    worst_coef = worst_star = 0.0
    for lam in (0.0, 0.01, -0.01):
        chart = build_chart("rn_ds", {"M": 1.0, "Q": 0.5, "Lambda": lam})
        for r, th in ((3.0, 1.0), (5.0, 0.7)):
            pkg = curvature_at(chart, (0.0, r, th, 0.0))
            fit = fit_roter(pkg)
            mapped = rn_convention_map(fit.phi, fit.mu, fit.eta)
            closed = rn_roter_closed_form(1.0, 0.5, lam, r)
            for k in closed:
                worst_coef = max(worst_coef, abs(mapped[k] - closed[k]) / abs(closed[k]))
            worst_star = max(worst_star, condition_star_residual(pkg))
    ok = worst_coef <= 1e-6 and worst_star <= 1e-6
    report_line(3, "RN(-dS/-AdS) Roter reproduction", ok,
                f"max coefficient rel err {worst_coef:.2e}, max (*) residual {worst_star:.2e} (tol 1e-6)")


def test_criterion_4_clifford(report_line):
    pkg = gauss_package(hyper(clifford_curvatures(5, 2), 1, 30.0))
    scale = max(1.0, np.linalg.norm(pkg.QgR))
    rr = np.linalg.norm(pkg.RR) / scale
    rc = np.linalg.norm(pkg.RC) / max(1.0, np.linalg.norm(pkg.QgC))
    fit = fit_roter(pkg)
    coef = max(abs(fit.phi - 6), abs(fit.mu + 18), abs(fit.eta - 55))
    star = condition_star_residual(pkg)
    cr = res(pkg.CR, pkg.QSC - pkg.kappa / 4 * pkg.QgC)
    ok = rr <= 1e-8 and rc <= 1e-8 and coef <= 1e-8 and star <= 1e-8 and cr <= 1e-8
    report_line(4, "Clifford torus n=5 p=2", ok,
                f"R.R {rr:.1e}, R.C {rc:.1e}, (phi,mu,eta)=({fit.phi:.10g},{fit.mu:.10g},{fit.eta:.10g}), "
                f"(*) {star:.1e}, C.R {cr:.1e}")


REQUIRED_BRANCHES = {
    "thm3x": ["thm31", "thm32_iii", "thm32_iv", "thm32_v"],
    "prop41": ["ds4"],
    "prop42": ["i"],
    "prop43": ["ii", "iii", "v"],
    "prop47": ["i", "ii"],
    "thm48": ["qe_ds4aa"],
    "thm44_45": ["thm46"],
    "thm5x": ["thm51", "thm52_53"],
}


def test_criterion_5_gallery_audits(report_line, default_report):
    held = {a: set() for a in REQUIRED_BRANCHES}
    failures = []
    worst = 0.0
    for case in default_report["cases"]:
        for a in case.get("audits", []):
            failures += [f"{case['name']}:{a['name']}:{k}" for k in a["failing"]]
            if a["name"] in REQUIRED_BRANCHES:
                held[a["name"]] |= {b for b, st in a["branches"].items() if st == "holds"}
                worst = max([worst] + list(a["residuals"].values()))
    missing = [f"{a}.{b}" for a, bs in REQUIRED_BRANCHES.items() for b in bs if b not in held[a]]
    errored = default_report["summary"]["errored"]
    ok = not failures and not missing and not errored and worst <= 1e-8
    report_line(5, "hypersurface theorem audits over the default gallery", ok,
                f"{len(default_report['cases'])} cases, failures {failures or 'none'}, "
                f"unexercised {missing or 'none'}, max residual {worst:.2e} (tol 1e-8)")


def test_criterion_6_named_instances(report_line):
    n = 5
    h = hyper([1, 1, -1, -1, 0])
    pkg = gauss_package(h)
    k = pkg.kappa
    qe = quasi_einstein_alpha(pkg)
    checks = {
        "kappa": abs(k + 4),
        "H3": res(h.H3, -k / (n - 1) * h.H),
        "RC": res(pkg.RC, pkg.QSC),
        "CR": res(pkg.CR, 2 / 3 * pkg.QSC),
        "diff": res((n - 2) * (pkg.RC - pkg.CR), pkg.QSC),
        "alpha": abs(qe.alpha - k / (n - 1)) + abs(qe.alpha + 1) + (0.0 if qe.quasi_einstein else 1.0),
    }
    h2 = hyper([2, 3, 0, 0, 0])
    pkg2 = gauss_package(h2)
    fit = fit_cubic(h2)
    alpha1 = (pkg2.kappa / 4 + fit.psi) / 3
    checks |= {
        "rank2_psi": abs(fit.psi + 6),
        "rank2_rho": abs(fit.rho),
        "rank2_alpha1": abs(alpha1 + 1),
        "rank2_RR": np.linalg.norm(pkg2.RR) / max(1.0, np.linalg.norm(pkg2.QgR)),
    }
    worst = max(checks.values())
    report_line(6, "named instance regressions", worst <= 1e-10,
                f"max deviation {worst:.2e} over {sorted(checks)} (tol 1e-10)")


def test_criterion_7_negative_control(report_line, tmp_path):
    cfg = tmp_path / "negative.json"
    cfg.write_text(json.dumps({"cases": [{
        "name": "three_curvature_5", "source": "hypersurface", "g": "identity",
        "H": [1, 1, -1, -1, 0], "epsilon": 1, "kappa_tilde": 0, "assert": ["condition_star"]}]}))
    result = CliRunner().invoke(main, ["verify", "--config", str(cfg), "--no-meta"])
    named = "three_curvature_5:asserted:condition_star" in result.stderr
    star = condition_star_residual(gauss_package(hyper([1, 1, -1, -1, 0])))
    ok = result.exit_code != 0 and named and star > 1e-4
    report_line(7, "negative control", ok,
                f"exit {result.exit_code}, failing audit named: {named}, (*) residual {star:.3f} (> 1e-4)")


def test_criterion_8_determinism(report_line, tmp_path):
    runner = CliRunner()
    outs = []
    for i, workers in enumerate((1, 1, 4)):
        path = tmp_path / f"r{i}.json"
        result = runner.invoke(main, ["verify", "--no-meta", "--workers", str(workers), "--out", str(path)])
        assert result.exit_code == 0, result.output
        outs.append(path.read_bytes())
    in_process = report_json(run_gallery(load_config(), meta=False)).encode()
    ok = outs[0] == outs[1] == outs[2] == in_process
    report_line(8, "determinism and parallel equivalence", ok,
                f"{len(outs[0])} bytes; rerun identical {outs[0] == outs[1]}, "
                f"1 vs 4 workers identical {outs[0] == outs[2]}")
