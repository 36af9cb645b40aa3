"""Quadrature oracle checks.

Closed forms used below for f(y) = y^2/2 (derived by direct Gaussian
integration):

  energy with alpha=1, beta, lam:
      F(x)  = x^2 * lam / (2 (lam + beta^2)) + (lam/2) log(1 + beta^2/lam)
      (canonical beta^2 = lam:  x^2/4 + (lam/2) log 2)

  soft envelope:
      -lam log INT exp(-y^2/(2 lam) - (x-y)^2/(2 lam)) dy
        = x^2/4 - (lam/2) log(pi lam)

  their difference is (lam/2) log(2 pi lam), independent of x.
"""

import numpy as np
import pytest

from pgho import canonical_schedule, schedule_eval
from pgho.oracles import (
    VERIFY_OBJECTIVES_1D,
    cos_quad_1d,
    log_marginal_quadrature_1d,
    moreau_oracle_1d,
    pgh_energy_quadrature_1d,
    posterior_mean_quadrature_1d,
    quad_1d,
    soft_moreau_quadrature_1d,
    two_well_1d,
)


def soft_moreau_trapezoid(f, x, lam, span=40.0, n=400_001):
    """Independent brute-force route: wide trapezoid integration."""
    y = np.linspace(x - span, x + span, n)
    g = f(y) / lam + (x - y) ** 2 / (2.0 * lam)
    m = g.min()
    integral = np.trapezoid(np.exp(-(g - m)), y)
    return float(lam * m - lam * np.log(integral))


def schedule_with_lambda(lam):
    return canonical_schedule(eps=float(np.sqrt(lam)), lambda_min=1e-12)


class TestMoreauOracle:
    def test_quadratic_closed_form(self):
        # min_y y^2/2 + (1-y)^2/2 = 1/4 at y = 1/2
        v = moreau_oracle_1d(quad_1d, 1.0, 1.0, grid=(-10.0, 10.0, 2001))
        assert v == pytest.approx(0.25, abs=1e-6)

    def test_constant_function(self):
        v = moreau_oracle_1d(lambda y: 3.5 + 0.0 * y, 2.0, 0.7)
        assert v == pytest.approx(3.5, abs=1e-12)

    def test_small_lambda_approaches_f(self):
        v = moreau_oracle_1d(np.cos, 0.0, 1e-6, grid=(-2.0, 2.0, 4001))
        assert v == pytest.approx(1.0, abs=1e-4)

    def test_boundary_minimizer_rejected(self):
        with pytest.raises(ValueError, match="boundary"):
            moreau_oracle_1d(lambda y: y, 0.0, 1e6, grid=(-5.0, 5.0, 1001))

    def test_coarse_grid_rejected(self):
        with pytest.raises(ValueError, match="coarse"):
            moreau_oracle_1d(quad_1d, 0.0, 1.0, grid=(-5.0, 5.0, 100))


class TestSoftMoreau:
    @pytest.mark.parametrize("lam", [0.1, 0.5, 1.0])
    def test_quadratic_closed_form(self, lam):
        for x in (-2.0, 0.0, 1.3):
            expected = x * x / 4.0 - 0.5 * lam * np.log(np.pi * lam)
            assert soft_moreau_quadrature_1d(quad_1d, x, lam) == \
                pytest.approx(expected, abs=1e-8)

    def test_flat_function_is_x_independent(self):
        vals = [soft_moreau_quadrature_1d(lambda y: 0.0 * y, x, 0.3)
                for x in np.linspace(-5, 5, 9)]
        assert np.ptp(vals) < 1e-12

    def test_laplace_limit_matches_hard_min(self):
        # soft-min -> min as lam -> 0 (both are ~cos(0) = 1 at x = 0)
        soft = soft_moreau_quadrature_1d(np.cos, 0.0, 1e-3)
        hard = moreau_oracle_1d(np.cos, 0.0, 1e-3, grid=(-2.0, 2.0, 4001))
        assert soft == pytest.approx(hard, abs=5e-3)

    def test_agrees_with_trapezoid_route(self):
        for f in (cos_quad_1d, two_well_1d):
            for lam in (0.5, 1.0):
                for x in (-1.5, 0.0, 2.0):
                    a = soft_moreau_quadrature_1d(f, x, lam, n_nodes=320)
                    b = soft_moreau_trapezoid(f, x, lam)
                    assert a == pytest.approx(b, abs=1e-7), (f, lam, x)

    def test_node_floor(self):
        with pytest.raises(ValueError, match="64"):
            soft_moreau_quadrature_1d(quad_1d, 0.0, 1.0, n_nodes=32)


class TestEnergyQuadrature:
    def test_collapse_at_t_one_exact(self):
        s = canonical_schedule(eps=0.4)
        for x in (-2.0, 0.7):
            assert pgh_energy_quadrature_1d(np.cos, x, 1.0, s) == np.cos(x)

    @pytest.mark.parametrize("lam", [0.1, 0.5, 1.0])
    def test_quadratic_closed_form(self, lam):
        s = schedule_with_lambda(lam)
        _, beta, lam_s = schedule_eval(s, 0.0)
        for x in (-2.0, 0.0, 1.3):
            expected = (x * x * lam_s / (2.0 * (lam_s + beta ** 2))
                        + 0.5 * lam_s * np.log(1.0 + beta ** 2 / lam_s))
            assert pgh_energy_quadrature_1d(quad_1d, x, 0.0, s) == \
                pytest.approx(expected, abs=1e-8)


class TestEnvelopeEquivalence:
    """Energy minus soft envelope is x-independent under beta^2 = lambda."""

    @pytest.mark.parametrize("lam", [0.1, 0.5, 1.0])
    @pytest.mark.parametrize("fname", list(VERIFY_OBJECTIVES_1D))
    def test_difference_constant_in_x(self, fname, lam):
        f = VERIFY_OBJECTIVES_1D[fname]
        s = schedule_with_lambda(lam)
        _, _, lam_s = schedule_eval(s, 0.0)
        xs = np.linspace(-3.0, 3.0, 20)
        diffs = np.array([
            pgh_energy_quadrature_1d(f, float(x), 0.0, s)
            - soft_moreau_quadrature_1d(f, float(x), lam_s)
            for x in xs])
        assert np.var(diffs) < 1e-10

    def test_constant_matches_derivation(self):
        # C = (lam/2) log(2 pi lam), from the change of variables
        for lam in (0.25, 1.0):
            s = schedule_with_lambda(lam)
            _, _, lam_s = schedule_eval(s, 0.0)
            d = (pgh_energy_quadrature_1d(cos_quad_1d, 0.8, 0.0, s)
                 - soft_moreau_quadrature_1d(cos_quad_1d, 0.8, lam_s))
            assert d == pytest.approx(0.5 * lam_s * np.log(2 * np.pi * lam_s),
                                      abs=1e-9)

    def test_constancy_against_independent_route(self):
        # non-trivial variant: envelope from the trapezoid oracle, energy
        # from Gauss-Hermite; their difference must still be flat in x
        lam = 0.5
        s = schedule_with_lambda(lam)
        _, _, lam_s = schedule_eval(s, 0.0)
        xs = np.linspace(-2.0, 2.0, 9)
        diffs = np.array([
            pgh_energy_quadrature_1d(cos_quad_1d, float(x), 0.0, s, 160)
            - soft_moreau_trapezoid(cos_quad_1d, float(x), lam_s)
            for x in xs])
        assert np.ptp(diffs) < 1e-8


class TestPosteriorMean:
    def test_gaussian_conjugacy(self):
        # prior N(0,1), observation variance 1: E[y|x] = x/2
        assert posterior_mean_quadrature_1d(quad_1d, 2.0, 1.0) == \
            pytest.approx(1.0, abs=1e-9)

    @pytest.mark.parametrize("lam", [0.25, 1.0])
    def test_gaussian_general(self, lam):
        for x in (-2.0, -1.0, 0.0, 1.0, 2.0):
            assert posterior_mean_quadrature_1d(quad_1d, x, lam) == \
                pytest.approx(x / (1.0 + lam), abs=1e-9)

    def test_flat_prior_returns_x(self):
        for x in (-3.0, 0.0, 1.7):
            assert posterior_mean_quadrature_1d(lambda y: 0.0 * y, x, 0.5) \
                == pytest.approx(x, abs=1e-9)

    def test_symmetric_center(self):
        f = lambda y: 0.5 * (y - 3.0) ** 2
        assert posterior_mean_quadrature_1d(f, 3.0, 0.5) == \
            pytest.approx(3.0, abs=1e-9)


class TestPosteriorMeanIdentity:
    """E[y|x] = x - lam * d/dx(-log p_lam(x)), checked by central differences."""

    @pytest.mark.parametrize("fname", list(VERIFY_OBJECTIVES_1D))
    def test_identity(self, fname):
        f = VERIFY_OBJECTIVES_1D[fname]
        for lam in (0.25, 1.0):
            for x in (-2.0, -1.0, 0.0, 1.0, 2.0):
                pm = posterior_mean_quadrature_1d(f, x, lam)
                h = 1e-4 * max(1.0, abs(x))
                dlogp = (log_marginal_quadrature_1d(f, x + h, lam)
                         - log_marginal_quadrature_1d(f, x - h, lam)) / (2 * h)
                tweedie = x + lam * dlogp
                assert abs(pm - tweedie) < 1e-6, (fname, lam, x)
