"""Tests for trigonometric polynomials and grid functions."""

import math

import numpy as np
import pytest

from src.algebra.trigpoly import (
    GridFunction,
    TrigPoly,
    derivative,
    evaluate,
    inner,
    integrate,
    interpolate,
    multiply,
    sample,
    sup_norm,
)
from src.exceptions import BandwidthExceeded, InsufficientNodes


def _random_poly(rng, bandwidth):
    return TrigPoly(rng.standard_normal(2 * bandwidth + 1))


class TestConstruction:
    """Coefficient layout and validation."""

    def test_from_harmonics_layout(self):
        p = TrigPoly.from_harmonics([[0, 1.0, 0.0], [2, 0.5, -0.25]])

        assert p.bandwidth == 2
        np.testing.assert_array_equal(p.coeffs, [1.0, 0.0, 0.0, 0.5, -0.25])

    def test_repeated_harmonics_are_summed(self):
        p = TrigPoly.from_harmonics([[1, 1.0, 0.0], [1, 0.5, 2.0]])
        assert p.harmonic(1) == (1.5, 2.0)

    def test_even_length_rejected(self):
        with pytest.raises(ValueError):
            TrigPoly([1.0, 2.0])

    def test_non_finite_rejected(self):
        with pytest.raises(ValueError):
            TrigPoly([1.0, math.nan, 0.0])

    @pytest.mark.parametrize("entry", [[1, 1.0], [-1, 1.0, 0.0], [1.5, 1.0, 0.0]])
    def test_bad_harmonic_entries(self, entry):
        with pytest.raises(ValueError):
            TrigPoly.from_harmonics([entry])

    def test_coefficients_are_read_only(self):
        p = TrigPoly.cos()
        with pytest.raises(ValueError):
            p.coeffs[0] = 1.0

    def test_harmonic_beyond_bandwidth(self):
        assert TrigPoly.cos(1).harmonic(5) == (0.0, 0.0)

    def test_trimmed_drops_trailing_zeros(self):
        p = TrigPoly([1.0, 0.5, 0.0, 0.0, 0.0])
        assert p.trimmed().bandwidth == 1


class TestArithmetic:
    def test_evaluate_scalar_and_array(self):
        p = TrigPoly.cos() + TrigPoly.sin(3, 2.0)
        x = np.array([0.0, 0.3, 2.0])

        assert evaluate(p, 0.3) == pytest.approx(math.cos(0.3) + 2.0 * math.sin(0.9), abs=1e-15)
        np.testing.assert_allclose(p(x), np.cos(x) + 2.0 * np.sin(3 * x), atol=1e-14)

    def test_scalar_operations(self):
        p = 2.0 * TrigPoly.cos() + 1
        assert p.coeffs.tolist() == [1.0, 2.0, 0.0]
        assert (p / 2.0).coeffs.tolist() == [0.5, 1.0, 0.0]
        assert (1 - p).coeffs.tolist() == [0.0, -2.0, 0.0]

    def test_numpy_scalar_multiplies(self):
        p = np.float64(2.0) * TrigPoly.cos()
        assert isinstance(p, TrigPoly)
        assert p.harmonic(1) == (2.0, 0.0)

    def test_derivative_rotation(self):
        assert derivative(TrigPoly.sin(2)).allclose(TrigPoly.cos(2, 2.0))
        assert derivative(TrigPoly.cos(), 4).allclose(TrigPoly.cos())
        assert derivative(TrigPoly.constant(3.0)).is_zero()

    def test_negative_derivative_order(self):
        with pytest.raises(ValueError):
            derivative(TrigPoly.cos(), -1)

    def test_product_identities(self):
        cos, sin = TrigPoly.cos(), TrigPoly.sin()

        assert multiply(cos, cos).allclose(TrigPoly([0.5, 0.0, 0.0, 0.5, 0.0]))
        assert multiply(sin, cos).allclose(TrigPoly.sin(2, 0.5))

    def test_product_matches_pointwise(self):
        rng = np.random.default_rng(7)
        p, q = _random_poly(rng, 4), _random_poly(rng, 6)
        x = np.linspace(0.0, 2.0 * math.pi, 37)

        np.testing.assert_allclose((p * q)(x), p(x) * q(x), atol=1e-12)

    def test_product_over_cap_raises(self):
        with pytest.raises(BandwidthExceeded):
            multiply(TrigPoly.cos(3), TrigPoly.cos(3), max_bandwidth=4)

    def test_negligible_tail_is_truncated(self):
        p = TrigPoly.cos(1) + TrigPoly.cos(3, 1e-15)
        product = multiply(p, TrigPoly.cos(3), max_bandwidth=4)

        assert product.bandwidth <= 4
        assert product.allclose(TrigPoly([0.0, 0.0, 0.0, 0.5, 0.0, 0.0, 0.0, 0.5, 0.0]))


class TestQuadrature:
    def test_integrate(self):
        assert integrate(TrigPoly.constant(1.0)) == pytest.approx(2.0 * math.pi)
        assert integrate(TrigPoly.cos()) == 0.0

    def test_inner_product(self):
        assert inner(TrigPoly.cos(), TrigPoly.cos()) == pytest.approx(math.pi, abs=1e-13)
        assert inner(TrigPoly.cos(), TrigPoly.sin()) == pytest.approx(0.0, abs=1e-13)

    def test_sup_norm(self):
        assert sup_norm(TrigPoly.cos(3, 2.0)) == pytest.approx(2.0)

    def test_sample_and_interpolate(self):
        p = TrigPoly.from_harmonics([[0, 0.2, 0.0], [1, 1.0, -0.5], [3, 0.25, 0.75]])
        g = sample(p, 17)

        assert isinstance(g, GridFunction)
        assert g.integral() == pytest.approx(2.0 * math.pi * 0.2)
        assert interpolate(g, 8).allclose(p, atol=1e-13)

    def test_sample_on_four_nodes(self):
        np.testing.assert_allclose(sample(TrigPoly.cos(), 4).values, [1.0, 0.0, -1.0, 0.0], atol=1e-15)

    def test_interpolate_needs_enough_nodes(self):
        g = sample(TrigPoly.cos(), 9)
        with pytest.raises(InsufficientNodes):
            interpolate(g, 5)

    def test_grid_function_rejects_empty(self):
        with pytest.raises(ValueError):
            GridFunction([])
