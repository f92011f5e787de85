import numpy as np
import pytest

from conftest import clifford_curvatures, hyper, kn_loop
from curvlab.conditions import (
    classify,
    condition_star_residual,
    fit_roter,
    membership,
    roter_checks,
)
from curvlab.curvature_ops import random_algebraic_curvature, random_metric, tachibana, weyl_decompose
from curvlab.fitting import fit_span
from curvlab.hypersurface import gauss_package
from curvlab.tensor_core import MetricPoint, g_tensor, res

try:
    from hypothesis import given, settings
    from hypothesis import strategies as st
except ImportError:  # pragma: no cover
    given = None


def _space_form(c=0.4, n=5, neg=1):
    m = MetricPoint.diagonal(n, neg)
    return weyl_decompose(c * g_tensor(m), m)


class TestFitSpan:
    def test_exact_multiple(self, rank2_pkg):
        fit = fit_span(2 * rank2_pkg.QgR, {"L": rank2_pkg.QgR})
        assert fit["L"] == pytest.approx(2) and fit.residual <= 1e-15 and fit.exact

    def test_zero_target_and_basis(self):
        pkg = _space_form()
        fit = fit_span(pkg.RR, [pkg.QgR])
        assert fit.exact and fit["c0"] == 0.0

    def test_semisymmetric_clifford(self, clifford_pkg):
        fit = fit_span(clifford_pkg.RR, {"L_R": clifford_pkg.QgR})
        assert fit.exact and abs(fit["L_R"]) <= 1e-10

    def test_degenerate_minimal_norm(self):
        b = np.ones((2, 2))
        fit = fit_span(2 * b, [b, b])
        assert fit["c0"] == pytest.approx(1) and fit["c1"] == pytest.approx(1) and fit.rank == 1

    def test_valence_mismatch(self):
        with pytest.raises(ValueError):
            fit_span(np.zeros((2, 2)), [np.zeros((2, 2, 2))])
        with pytest.raises(ValueError):
            fit_span(np.zeros((2, 2)), [])

    @pytest.mark.parametrize("c", [-2.0, 1 / 3, 10.0])
    def test_scale_equivariance(self, rank2_pkg, c):
        pkg = rank2_pkg
        base = fit_span(pkg.RC - pkg.CR, {"L1": pkg.QSC, "L2": pkg.QgC})
        scaled = fit_span(c * (pkg.RC - pkg.CR), {"L1": pkg.QSC, "L2": pkg.QgC})
        assert scaled.exact == base.exact
        for k in base.coefficients:
            assert scaled[k] == pytest.approx(c * base[k], rel=1e-10, abs=1e-12)


if given is not None:
    @settings(max_examples=25, deadline=None)
    @given(seed=st.integers(0, 2**32 - 1), c=st.floats(-10, 10).filter(lambda v: abs(v) > 0.1))
    def test_scale_equivariance_property(seed, c):
        m = random_metric(np.random.default_rng(seed), 4, seed % 2)
        pkg = weyl_decompose(random_algebraic_curvature(seed, 4, m), m)
        basis = {"a": pkg.QgR, "b": pkg.QSR}
        base, scaled = fit_span(pkg.RR, basis), fit_span(c * pkg.RR, basis)
        assert scaled.exact == base.exact
        assert scaled.residual == pytest.approx(base.residual, rel=1e-6, abs=1e-14)
        for k in basis:
            assert scaled[k] == pytest.approx(c * base[k], rel=1e-8, abs=1e-10)


class TestRoter:
    def test_clifford_coefficients(self, clifford_pkg):
        fit = fit_roter(clifford_pkg)
        assert fit.exact and fit.applicable
        assert (fit.phi, fit.mu, fit.eta) == pytest.approx((6, -18, 55), abs=1e-8)

    def test_clifford_product_form_oracle(self, clifford_pkg):
        n, p = 5, 2
        pkg = clifford_pkg
        a = p * (n - p) / (2 * (n - 2 * p) ** 2)
        t = pkg.S - (n - 2) * pkg.g
        r_oracle = a * kn_loop(t, t) + 0.5 * kn_loop(pkg.g, pkg.g)
        assert res(pkg.R, r_oracle) <= 1e-12

    def test_clifford_derived_scalars(self, clifford_pkg):
        fit = fit_roter(clifford_pkg)
        assert all(v <= 1e-8 for v in fit.checks.values()), fit.checks
        assert fit.derived["L_R"] == pytest.approx(0, abs=1e-10)

    def test_space_form_not_applicable(self):
        fit = fit_roter(_space_form())
        assert not fit.applicable and not fit.exact

    @pytest.mark.parametrize("n, p", [(7, 2), (7, 3), (6, 2)])
    def test_other_clifford_tori_close(self, n, p):
        pkg = gauss_package(hyper(clifford_curvatures(n, p), 1, float(n * (n + 1))))
        fit = fit_roter(pkg)
        assert fit.exact
        assert max(roter_checks(pkg, fit.phi, fit.mu, fit.eta).values()) <= 1e-8


class TestConditionStar:
    def test_clifford(self, clifford_pkg):
        pkg = clifford_pkg
        assert condition_star_residual(pkg) <= 1e-10
        assert res(pkg.CR, pkg.QSC - pkg.kappa / 4 * pkg.QgC) <= 1e-8
        assert np.linalg.norm(pkg.RC) <= 1e-8 * np.linalg.norm(pkg.QgC)

    def test_obstruction(self, three_pkg):
        assert condition_star_residual(three_pkg) > 1e-4

    def test_requires_n4(self):
        m = MetricPoint.identity(3)
        with pytest.raises(ValueError):
            condition_star_residual(weyl_decompose(random_algebraic_curvature(1, 3, m), m))


class TestClassify:
    def test_space_form(self):
        rep = classify(_space_form(0.4))
        assert rep.einstein and not rep.quasi_einstein
        assert rep.pseudosymmetric["L_R"] == pytest.approx(0.4)
        assert not rep.pseudosymmetric["determined"]
        assert rep.membership == {"U_S": False, "U_C": False, "U_R": False}

    def test_clifford(self, clifford_pkg):
        rep = classify(clifford_pkg)
        assert rep.pseudosymmetric["exact"] and abs(rep.pseudosymmetric["L_R"]) <= 1e-10
        assert (rep.roter["phi"], rep.roter["mu"], rep.roter["eta"]) == pytest.approx((6, -18, 55))
        assert rep.condition_star <= 1e-10
        assert all(rep.consistency.values())
        assert "cartan" not in rep.as_dict()

    def test_three_curvature(self, three_pkg):
        rep = classify(three_pkg)
        assert rep.quasi_einstein and rep.alpha == pytest.approx(-1) and rep.rank_S_alpha == 1
        assert rep.ricci_pseudosymmetric["exact"] and abs(rep.ricci_pseudosymmetric["L_S"]) <= 1e-12
        assert rep.cond01["exact"]
        assert (rep.cond01["L1"], rep.cond01["L2"]) == pytest.approx((1 / 3, 0), abs=1e-10)

    def test_membership_union_flag(self, rng):
        m = random_metric(rng, 5, 1)
        pkg = weyl_decompose(random_algebraic_curvature(rng, 5, m), m)
        assert membership(pkg) == {"U_S": True, "U_C": True, "U_R": True}
        assert classify(pkg).consistency["U_S_or_U_C_equals_U_R"]


class TestImplications:
    def test_roter_closure(self, rng):
        # Roter form in s0 whose operator g^-1 s0 has two eigenvalues of multiplicity >= 2;
        # then the Ricci tensor lies in span{s0, g} and R is Roter in its own S
        for n, neg in [(4, 0), (5, 1), (6, 2)]:
            e = np.eye(n) + 0.3 * rng.uniform(-1, 1, (n, n))
            eta_d = np.diag([-1.0] * neg + [1.0] * (n - neg))
            m = MetricPoint.from_matrix(e.T @ eta_d @ e)
            d = np.diag([1.5, 1.5] + [-0.5] * (n - 2))
            s0 = e.T @ eta_d @ d @ e
            phi, mu, eta = rng.uniform(0.5, 2, 3)
            r = phi / 2 * kn_loop(s0, s0) + mu * kn_loop(m.g, s0) + eta / 2 * kn_loop(m.g, m.g)
            pkg = weyl_decompose(r, m)
            fit = fit_roter(pkg)
            assert fit.exact
            assert max(fit.checks.values()) <= 1e-8, fit.checks

    def test_pseudosymmetry_implies_weyl_and_ricci(self):
        pkg = gauss_package(hyper([2, 1, 1, 1, 1]))
        rep = classify(pkg)
        lr = rep.pseudosymmetric["L_R"]
        assert rep.pseudosymmetric["exact"]
        assert res(pkg.RS, lr * pkg.QgS) <= 1e-8
        assert res(pkg.RC, lr * pkg.QgC) <= 1e-8

    def test_quasi_einstein_identity(self, three_pkg):
        pkg = three_pkg
        alpha, n, k = -1.0, 5, pkg.kappa
        rhs = pkg.QSC - (alpha - k / (n - 1)) / (n - 2) * tachibana(pkg.g, pkg.gS())
        assert res(pkg.QSR, rhs) <= 1e-8

    def test_two_eigenvalue_condition_star(self):
        for eps, kt, neg in [(1, 0.0, 0), (1, 30.0, 0), (-1, -6.0, 1)]:
            pkg = gauss_package(hyper([2, 2, 1, 1, 1], eps, kt, neg))
            assert condition_star_residual(pkg) <= 1e-8
