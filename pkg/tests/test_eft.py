"""Interaction integrals, coupling extraction and 6-pt prediction.

Closed-form gaussian integrals, an independent general-purpose integrator
(scipy.integrate.quad) and a frozen seeded Monte-Carlo estimate serve as
oracles for the adaptive panel quadrature.
"""

import math

import numpy as np
import pytest
from scipy import integrate as sciint

from nnqft import builtin_grid, kernel_model
from nnqft.config import InputGrid
from nnqft.correlators import CorrelationTensor, gp_tensor
from nnqft.eft import (EftConfig, QuadratureSpec, delta6, extract_lambda_m,
                       g4_correction, g6_kappa_correction, integrate_box, lambda_bar,
                       predict_g4, predict_g6, predict_g6_tensor, quartic_integrals)
from nnqft.errors import ConfigurationError, QuadratureError
from nnqft.multisets import multisets
from nnqft.wick import gp_npt

from conftest import make_spec

# 1e7 uniform samples on [-6, 6], generator seed 987654321 (frozen oracle
# for the integral of the gauss weight-kernel fourth power at x = 0.002).
MC_ORACLE_KW4 = 1.2530700135547899

NEG_24_SQRT_HALF_PI = -30.0795392955720060289891834177


class TestIntegrateBox:
    def test_constant(self):
        val = integrate_box(lambda y: np.ones(y.shape[0]), 2.0, 1)
        assert val == pytest.approx(4.0, abs=1e-12)

    def test_gaussian_infinite(self):
        val = integrate_box(lambda y: np.exp(-y[:, 0] ** 2), math.inf, 1)
        assert val == pytest.approx(math.sqrt(math.pi), rel=1e-6)

    def test_vector_valued(self):
        def f(y):
            return np.stack([np.ones(y.shape[0]), y[:, 0] ** 2], axis=1)
        out = integrate_box(f, 1.0, 1)
        assert out[0] == pytest.approx(2.0, rel=1e-12)
        assert out[1] == pytest.approx(2.0 / 3.0, rel=1e-10)

    def test_two_dimensional(self):
        val = integrate_box(lambda y: np.exp(-(y**2).sum(axis=1)), 6.0, 2)
        assert val == pytest.approx(math.pi, rel=1e-6)

    def test_kw4_matches_frozen_mc_oracle(self):
        km = kernel_model(make_spec("gauss"))
        x = np.array([[0.002]])

        def f(y):
            return np.asarray(km.k_w(x, y)) ** 4

        val = integrate_box(f, math.inf, 1)
        assert abs(val - MC_ORACLE_KW4) / MC_ORACLE_KW4 < 1e-3

    def test_against_scipy_quad(self):
        km = kernel_model(make_spec("erf"))
        a, b = 0.004, 0.01

        def integrand(y):
            return float(km.k_w([a], [y]) * km.k_w([b], [y]))

        want, _err = sciint.quad(integrand, -50.0, 50.0, limit=200)
        got = integrate_box(lambda y: np.asarray(km.k_w(np.array([[a]]), y))
                            * np.asarray(km.k_w(np.array([[b]]), y)), 50.0, 1)
        assert got == pytest.approx(want, rel=1e-6)

    def test_nonconvergence_carries_estimate(self):
        # a square-root kink converges too slowly for this panel budget
        quad = QuadratureSpec(max_panels=4, tolerance=1e-14)

        def kink(y):
            return np.sqrt(np.abs(y[:, 0] - 0.123))

        with pytest.raises(QuadratureError) as err:
            integrate_box(kink, 1.0, 1, quad)
        assert err.value.estimate is not None
        assert err.value.residual > 0

    def test_coarse_points_rejected_for_1d(self):
        with pytest.raises(ConfigurationError):
            integrate_box(lambda y: np.ones(y.shape[0]), 1.0, 1,
                          QuadratureSpec(points_per_axis=8))

    def test_monte_carlo_agrees_in_2d(self):
        km = kernel_model(make_spec("relu", d_in=2))
        grid = builtin_grid("relu-d2")
        ref = quartic_integrals(km, grid, 3.0, subsets=((0, 1, 2, 3),))[0]
        mc = quartic_integrals(km, grid, 3.0, QuadratureSpec.monte_carlo(400_000, seed=5),
                               subsets=((0, 1, 2, 3),))[0]
        assert mc == pytest.approx(ref, rel=0.05)

    def test_monte_carlo_rejected_in_1d(self):
        with pytest.raises(ConfigurationError):
            integrate_box(lambda y: np.ones(y.shape[0]), 1.0, 1,
                          QuadratureSpec.monte_carlo())


class TestG4Correction:
    def test_zero_couplings(self):
        km = kernel_model(make_spec("gauss"))
        pts = builtin_grid("gauss-default").points[:4]
        assert g4_correction(km, pts, EftConfig()) == 0.0

    def test_closed_form_gaussian_integral(self):
        km = kernel_model(make_spec("gauss"))
        pts = np.zeros((4, 1))
        eft = EftConfig(lambda0=1.0)
        assert g4_correction(km, pts, eft) == pytest.approx(NEG_24_SQRT_HALF_PI, rel=1e-6)

    def test_linear_in_lambda0(self):
        km = kernel_model(make_spec("gauss"))
        pts = builtin_grid("gauss-default").points[:4]
        one = g4_correction(km, pts, EftConfig(lambda0=1.0))
        three = g4_correction(km, pts, EftConfig(lambda0=3.0))
        assert three == pytest.approx(3 * one, rel=1e-12)

    def test_quadratic_coupling_term(self):
        # lambda2 weighting with |y|^2 against an independent integrator
        km = kernel_model(make_spec("gauss"))
        pts = np.array([[0.0], [0.002], [0.006], [0.01]])

        def integrand(y):
            prod = y * y
            for p in pts[:, 0]:
                prod = prod * math.exp(-0.5 * (p - y) ** 2)
            return prod

        want, _ = sciint.quad(integrand, -30, 30, limit=200)
        got = g4_correction(km, pts, EftConfig(lambda2=1.0))
        assert got == pytest.approx(-24.0 * want, rel=1e-6)

    def test_kappa_tadpole_term(self):
        # for the gauss kernel K_W(z, z) is a constant, so the tadpole is
        # that constant times the plain vertex integral
        km = kernel_model(make_spec("gauss"))
        pts = builtin_grid("gauss-default").points[:4]
        base = quartic_integrals(km, InputGrid(points=pts), math.inf,
                                 subsets=((0, 1, 2, 3),))[0]
        got = g4_correction(km, pts, EftConfig(kappa=0.5))
        assert got == pytest.approx(-360.0 * 0.5 * km.spec.sigma_w_sq * base, rel=1e-9)


class TestPredictG4:
    def test_reduces_to_free_theory(self):
        km = kernel_model(make_spec("erf"))
        pts = builtin_grid("erf-default").points[:4]
        assert predict_g4(km, pts, EftConfig(cutoff=100.0)) == gp_npt(km, pts)

    def test_matches_hand_transcription(self):
        """Second, independent transcription: three pair products minus the
        vertex integral evaluated with scipy."""
        km = kernel_model(make_spec("gauss"))
        rng = np.random.default_rng(17)
        for _ in range(3):
            pts = rng.uniform(-0.5, 0.5, size=(4, 1))
            lam0 = rng.uniform(0.001, 0.1)

            def K(a, b):
                return float(km.k(pts[a], pts[b]))

            def integrand(y):
                prod = 1.0
                for p in pts[:, 0]:
                    prod *= math.exp(-0.5 * (p - y) ** 2)
                return prod

            vertex, _ = sciint.quad(integrand, -40, 40, limit=200)
            by_hand = (K(0, 1) * K(2, 3) + K(0, 2) * K(1, 3) + K(0, 3) * K(1, 2)
                       - 24.0 * lam0 * vertex)
            got = predict_g4(km, pts, EftConfig(lambda0=lam0))
            assert got == pytest.approx(by_hand, rel=1e-7)


def _tensor_from_values(grid, values, order=4):
    per = np.stack([values, values])
    return CorrelationTensor(order=order, grid=grid, per_experiment=per,
                             count_per_experiment=1)


class TestExtractLambda:
    def test_gp_input_gives_zero(self):
        km = kernel_model(make_spec("gauss"))
        grid = builtin_grid("gauss-default")
        emp4 = _tensor_from_values(grid, gp_tensor(km, grid, 4))
        lam = extract_lambda_m(emp4, km, math.inf)
        assert np.allclose(lam.values, 0.0, atol=1e-15)

    def test_round_trip_identity(self):
        """Per-element couplings survive synthesis -> extraction exactly
        (up to quadrature tolerance)."""
        km = kernel_model(make_spec("gauss"))
        grid = builtin_grid("gauss-default")
        rng = np.random.default_rng(23)
        planted = rng.uniform(0.001, 0.02, size=len(multisets(6, 4)))
        base = quartic_integrals(km, grid, math.inf)
        synthetic = gp_tensor(km, grid, 4) - 24.0 * planted * base
        lam = extract_lambda_m(_tensor_from_values(grid, synthetic), km, math.inf)
        np.testing.assert_allclose(lam.values, planted, rtol=1e-9)

    def test_cutoff_below_grid_rejected(self):
        km = kernel_model(make_spec("relu"))
        grid = builtin_grid("relu-default")
        emp4 = _tensor_from_values(grid, gp_tensor(km, grid, 4))
        with pytest.raises(ConfigurationError) as err:
            extract_lambda_m(emp4, km, 1.0)
        assert err.value.code == "cutoff-below-grid"

    def test_infinite_cutoff_needs_decay(self):
        km = kernel_model(make_spec("relu"))
        grid = builtin_grid("relu-default")
        emp4 = _tensor_from_values(grid, gp_tensor(km, grid, 4))
        with pytest.raises(ConfigurationError) as err:
            extract_lambda_m(emp4, km, math.inf)
        assert err.value.code == "cutoff-infinite-unsupported"

    def test_lambda_bar_mean_of_unique_elements(self):
        km = kernel_model(make_spec("gauss"))
        grid = builtin_grid("gauss-default")
        values = np.full(len(multisets(6, 4)), 0.37)
        lam = extract_lambda_m(_tensor_from_values(
            grid, gp_tensor(km, grid, 4) - 24.0 * values * quartic_integrals(km, grid, math.inf)),
            km, math.inf)
        assert lambda_bar(lam) == pytest.approx(0.37, rel=1e-10)
        assert lambda_bar(np.array([1.0, 3.0])) == 2.0


class TestPredictG6:
    def test_zero_coupling_reduces_to_free(self):
        km = kernel_model(make_spec("gauss"))
        pts = builtin_grid("gauss-default").points
        assert predict_g6(km, pts, 0.0, math.inf) == pytest.approx(gp_npt(km, pts), rel=1e-14)

    def test_affine_in_coupling(self):
        km = kernel_model(make_spec("gauss"))
        pts = builtin_grid("gauss-default").points
        f0 = predict_g6(km, pts, 0.0, math.inf)
        f1 = predict_g6(km, pts, 1e-3, math.inf)
        f2 = predict_g6(km, pts, 2e-3, math.inf)
        slope = (f1 - f0) / 1e-3
        slope2 = (f2 - f1) / 1e-3
        assert slope == pytest.approx(slope2, rel=1e-8)

    def test_slope_equals_sum_of_vertex_terms(self):
        km = kernel_model(make_spec("gauss"))
        grid = builtin_grid("gauss-default")
        pts = grid.points
        from nnqft.wick import pair_splits
        gram = km.gram(grid)
        integrals = quartic_integrals(km, grid, math.inf,
                                      subsets=tuple(r for _p, r in pair_splits(6)))
        expected = -24.0 * sum(integrals[j] * gram[a, b]
                               for j, ((a, b), _r) in enumerate(pair_splits(6)))
        f0 = predict_g6(km, pts, 0.0, math.inf)
        f1 = predict_g6(km, pts, 1e-3, math.inf)
        assert (f1 - f0) / 1e-3 == pytest.approx(expected, rel=1e-8)

    def test_tensor_agrees_with_pointwise(self):
        km = kernel_model(make_spec("erf"))
        grid = builtin_grid("erf-default")
        lam = 0.01
        tensor = predict_g6_tensor(km, grid, lam, 1e4)
        ms = multisets(6, 6)
        for pos in (0, 100, 300, len(ms) - 1):
            pts = grid.points[list(ms[pos])]
            assert tensor[pos] == pytest.approx(predict_g6(km, pts, lam, 1e4), rel=1e-9)

    def test_kappa_terms_linear_and_separate(self):
        km = kernel_model(make_spec("gauss"))
        pts = builtin_grid("gauss-default").points
        one = g6_kappa_correction(km, pts, 1e-4, math.inf)
        two = g6_kappa_correction(km, pts, 2e-4, math.inf)
        assert two == pytest.approx(2 * one, rel=1e-10)
        assert one < 0  # suppression for positive coupling


class TestDelta6:
    def test_perfect_prediction(self):
        vals, valid = delta6(np.array([1.0, 2.0]), np.array([1.0, 2.0]))
        assert np.all(vals[valid] == 0.0)

    def test_zero_empirical_flagged(self):
        vals, valid = delta6(np.array([0.0, 4.0]), np.array([1.0, 2.0]))
        assert not valid[0] and valid[1]
        assert vals[1] == pytest.approx(0.5)

    def test_sign_convention(self):
        vals, _ = delta6(np.array([2.0]), np.array([1.0]))
        assert vals[0] == pytest.approx(0.5)  # prediction short of measurement
