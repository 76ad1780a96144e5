"""Tests for the scalar numeric primitives.

Expected values were generated independently with mpmath at 30 significant
digits (binary entropy, Jacobi theta series for the flatness factor, normal
cdf for the closed-form variation distance) and are frozen as literals.
"""

import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from graywyner.numerics import (
    DiscreteGaussianSpec,
    FlatnessQuery,
    MassDeficitError,
    TruncationError,
    binary_convolve,
    binary_entropy,
    default_truncation_radius,
    discrete_gaussian_pmf,
    flatness_factor,
    tensor_grid_quadrature,
    variation_distance_2d,
)

# frozen with mpmath (dps=30)
H_011 = 0.499915958164527996
A1 = 0.0584119566836076573
H_A1 = 0.321108456074705212
EPS_S1_SIG02 = 0.994726269202310733
EPS_S1_SIG075 = 3.01249215391744201e-5
V_SHIFT_01 = 0.0797552233534898464
DG_13_04 = {0: 0.292690343841579345, 1: 0.275873825049065414,
            -1: 0.171841205149892533, 2: 0.143890994690620188}


class TestBinaryEntropy:
    def test_frozen_values(self):
        assert binary_entropy(0.11) == pytest.approx(H_011, abs=1e-14)
        assert binary_entropy(A1) == pytest.approx(H_A1, abs=1e-14)
        assert binary_entropy(0.5) == 1.0
        assert binary_entropy(0.0) == 0.0
        assert binary_entropy(1.0) == 0.0

    def test_matches_arbitrary_precision(self):
        mp.mp.dps = 30
        for p in np.linspace(0.001, 0.999, 41):
            ref = float(-mp.mpf(p) * mp.log(mp.mpf(p), 2)
                        - (1 - mp.mpf(p)) * mp.log(1 - mp.mpf(p), 2))
            assert binary_entropy(p) == pytest.approx(ref, abs=1e-12)

    def test_array_input(self):
        out = binary_entropy(np.array([0.0, 0.11, 0.5, 1.0]))
        assert out.shape == (4,)
        np.testing.assert_allclose(out, [0.0, H_011, 1.0, 0.0], atol=1e-14)

    def test_rejects_out_of_range(self):
        with pytest.raises(ValueError):
            binary_entropy(-0.01)
        with pytest.raises(ValueError):
            binary_entropy(np.array([0.2, 1.01]))

    @given(st.floats(min_value=0.0, max_value=1.0))
    def test_symmetry(self, p):
        assert binary_entropy(p) == pytest.approx(binary_entropy(1.0 - p), abs=1e-12)


class TestBinaryConvolve:
    def test_identities(self):
        assert binary_convolve(0.3, 0.0) == pytest.approx(0.3, abs=1e-15)
        assert binary_convolve(0.3, 1.0) == pytest.approx(0.7, abs=1e-15)
        assert binary_convolve(0.3, 0.5) == pytest.approx(0.5, abs=1e-15)

    def test_two_step_crossover_roundtrip(self):
        # two independent crossovers at A1 compose to a crossover at 0.11
        assert binary_convolve(A1, A1) == pytest.approx(0.11, abs=1e-14)

    @given(st.floats(min_value=0, max_value=1), st.floats(min_value=0, max_value=1))
    def test_commutative_and_in_range(self, a, b):
        x = binary_convolve(a, b)
        assert 0.0 <= x <= 1.0
        assert x == pytest.approx(binary_convolve(b, a), abs=1e-15)

    @given(st.floats(min_value=0, max_value=1), st.floats(min_value=0, max_value=1),
           st.floats(min_value=0, max_value=1))
    def test_associative(self, a, b, c):
        left = binary_convolve(binary_convolve(a, b), c)
        right = binary_convolve(a, binary_convolve(b, c))
        assert left == pytest.approx(right, abs=1e-12)

    @given(st.floats(min_value=0, max_value=0.5), st.floats(min_value=0, max_value=0.5))
    def test_entropy_never_decreases(self, a, b):
        h = binary_entropy(binary_convolve(a, b))
        assert h >= binary_entropy(a) - 1e-12
        assert h >= binary_entropy(b) - 1e-12


class TestDiscreteGaussian:
    def test_frozen_pmf_values(self):
        spec = DiscreteGaussianSpec(scale=1.0, sigma=1.3, center=0.4, truncation_radius=60)
        pts, pmf = discrete_gaussian_pmf(spec)
        assert pmf.sum() == pytest.approx(1.0, abs=1e-14)
        lookup = dict(zip(np.rint(pts).astype(int), pmf))
        for k, p in DG_13_04.items():
            assert lookup[k] == pytest.approx(p, abs=1e-12)

    def test_matches_brute_force(self):
        # wide brute-force window as the independent reference
        for s, sig, c in [(1.0, 0.7, 0.0), (0.5, 1.1, 0.17), (2.0, 3.0, -1.3)]:
            radius = default_truncation_radius(s, sig)
            pts, pmf = discrete_gaussian_pmf(
                DiscreteGaussianSpec(scale=s, sigma=sig, center=c, truncation_radius=radius))
            k0 = round(c / s)
            ks = np.arange(k0 - 400, k0 + 401)
            w = np.exp(-((ks * s - c) ** 2) / (2 * sig * sig))
            ref = dict(zip(ks, w / w.sum()))
            for pt, p in zip(pts, pmf):
                assert p == pytest.approx(ref[round(pt / s)], abs=1e-12)

    def test_truncation_error_when_window_too_small(self):
        spec = DiscreteGaussianSpec(scale=1.0, sigma=5.0, center=0.0, truncation_radius=3)
        with pytest.raises(TruncationError):
            discrete_gaussian_pmf(spec)

    def test_default_radius_is_sufficient_and_tight(self):
        for s, sig in [(1.0, 0.3), (1.0, 4.0), (0.2, 1.0)]:
            r = default_truncation_radius(s, sig)
            discrete_gaussian_pmf(
                DiscreteGaussianSpec(scale=s, sigma=sig, truncation_radius=r))
            assert r < 40 * sig / s + 10

    def test_validation(self):
        with pytest.raises(ValueError):
            DiscreteGaussianSpec(scale=0.0, sigma=1.0, truncation_radius=5)
        with pytest.raises(ValueError):
            DiscreteGaussianSpec(scale=1.0, sigma=-1.0, truncation_radius=5)
        with pytest.raises(ValueError):
            DiscreteGaussianSpec(scale=1.0, sigma=1.0, truncation_radius=0)


def theta_flatness(scale, sigma):
    """Independent flatness reference via the Jacobi theta-3 series.

    The aliased density satisfies scale * f(x) = theta3(pi x / scale, q)
    with q = exp(-2 pi^2 sigma^2 / scale^2); all series coefficients are
    positive, so the maximum deviation sits at x = 0.
    """
    mp.mp.dps = 30
    q = mp.exp(-2 * mp.pi ** 2 * mp.mpf(sigma) ** 2 / mp.mpf(scale) ** 2)
    return float(mp.jtheta(3, 0, q) - 1)


class TestFlatnessFactor:
    def test_frozen_values(self):
        assert flatness_factor(1.0, 0.2) == pytest.approx(EPS_S1_SIG02, abs=1e-9)
        assert flatness_factor(1.0, 0.75) == pytest.approx(EPS_S1_SIG075, abs=1e-12)

    def test_matches_theta_series(self):
        for s, sig in [(1.0, 0.25), (1.0, 0.5), (2.0, 1.3), (0.7, 0.45), (1.5, 0.4)]:
            assert flatness_factor(s, sig) == pytest.approx(theta_flatness(s, sig), abs=1e-9)

    def test_monotone_in_sigma(self):
        sigmas = np.linspace(0.3, 1.0, 25)
        values = [flatness_factor(1.0, s) for s in sigmas]
        for lo, hi in zip(values[1:], values[:-1]):
            assert lo <= hi + 1e-14

    def test_scale_invariance(self):
        base = flatness_factor(1.0, 0.4)
        for c in (0.37, 2.5, 10.0):
            assert flatness_factor(c, 0.4 * c) == pytest.approx(base, abs=1e-12)

    def test_query_object(self):
        q = FlatnessQuery(scale=1.0, sigma=0.5, grid_resolution=128)
        assert q.evaluate() == pytest.approx(flatness_factor(1.0, 0.5, 128), abs=0)
        with pytest.raises(ValueError):
            FlatnessQuery(scale=1.0, sigma=0.5, grid_resolution=8)

    def test_nonnegative_and_small_at_large_sigma(self):
        eps = flatness_factor(1.0, 2.0)
        assert 0.0 <= eps < 1e-12


class TestTensorQuadrature:
    def test_exact_for_cubics(self):
        xg = np.linspace(0.0, 1.0, 9)
        yg = np.linspace(0.0, 1.0, 5)
        X, Y = np.meshgrid(xg, yg, indexing="ij")
        val = tensor_grid_quadrature(X ** 3 + Y, (xg, yg))
        assert val == pytest.approx(0.75, abs=1e-14)

    def test_three_axes(self):
        g = np.linspace(0.0, 1.0, 5)
        X, Y, Z = np.meshgrid(g, g, g, indexing="ij")
        val = tensor_grid_quadrature(X * Y * Z, (g, g, g))
        assert val == pytest.approx(0.125, abs=1e-14)

    def test_rejects_even_point_count(self):
        g = np.linspace(0.0, 1.0, 4)
        with pytest.raises(ValueError):
            tensor_grid_quadrature(np.ones((4,)), (g,))


def _gauss2(mx, my):
    def dens(x, y):
        return np.exp(-0.5 * ((x - mx) ** 2 + (y - my) ** 2)) / (2 * math.pi)
    return dens


class TestVariationDistance2D:
    def test_closed_form_mean_shift(self):
        # L1 distance of unit-covariance normals at mean shift d is
        # 2 (2 Phi(d/2) - 1); frozen via mpmath for d = 0.1
        box = ((-8.0, 8.1), (-8.0, 8.0))
        val, err = variation_distance_2d(_gauss2(0, 0), _gauss2(0.1, 0), box, resolution=257)
        assert err < 1e-5
        assert val == pytest.approx(V_SHIFT_01, abs=max(5 * err, 1e-6))

    def test_identical_densities(self):
        box = ((-8.0, 8.0), (-8.0, 8.0))
        val, err = variation_distance_2d(_gauss2(0, 0), _gauss2(0, 0), box, resolution=129)
        assert val == pytest.approx(0.0, abs=1e-12)
        assert err == pytest.approx(0.0, abs=1e-12)

    def test_mass_deficit_raises(self):
        box = ((-1.0, 1.0), (-1.0, 1.0))
        with pytest.raises(MassDeficitError):
            variation_distance_2d(_gauss2(0, 0), _gauss2(0.1, 0), box, resolution=129)

    def test_error_estimate_shrinks_with_resolution(self):
        box = ((-8.0, 8.1), (-8.0, 8.0))
        _, err_lo = variation_distance_2d(_gauss2(0, 0), _gauss2(0.1, 0), box, resolution=65)
        _, err_hi = variation_distance_2d(_gauss2(0, 0), _gauss2(0.1, 0), box, resolution=257)
        assert err_hi < err_lo
