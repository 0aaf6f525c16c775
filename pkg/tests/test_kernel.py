"""Tests for the deterministic Euler transition kernel."""

import math

import numpy as np
import pytest

from src.algebra.trigpoly import TrigPoly
from src.exceptions import NoConvergence
from src.simulation.kernel import (
    decay_table,
    discrete_mixing_rate,
    finite_time_error_curve,
    gauss_hermite,
    iterate_law,
    kernel_expectation,
    numerical_invariant,
    one_step_expectation,
    required_quad_points,
    transition_matrix,
    weak_error_curve,
)
from src.spectral.measures import density_distance, modified_density


@pytest.fixture(scope="module")
def brownian_kernel(brownian):
    return transition_matrix(brownian, 0.1)


class TestQuadrature:
    def test_gauss_hermite_moments(self):
        z, w = gauss_hermite(40)

        assert np.sum(w) == pytest.approx(1.0, abs=1e-14)
        assert w @ z**2 == pytest.approx(1.0, abs=1e-12)
        assert w @ z**4 == pytest.approx(3.0, abs=1e-12)

    def test_brownian_one_step(self, brownian):
        x = np.array([0.0, 0.4, 2.0])
        values = one_step_expectation(brownian, TrigPoly.cos(), 0.1, x)

        np.testing.assert_allclose(values, math.exp(-0.1) * np.cos(x), atol=1e-13)
        assert isinstance(one_step_expectation(brownian, TrigPoly.cos(), 0.1, 0.4), float)

    def test_array_start_points_match_scalar_calls(self, langevin):
        x = np.array([0.0, 0.4, 2.0, 5.5])
        phi = TrigPoly.cos() + TrigPoly.sin(2, 0.3)
        values = one_step_expectation(langevin, phi, 0.1, x)

        assert values.shape == (4,)
        expected = [one_step_expectation(langevin, phi, 0.1, float(xi)) for xi in x]
        np.testing.assert_allclose(values, expected, atol=1e-14)

    def test_one_step_matches_transition_matrix(self, langevin):
        kernel = transition_matrix(langevin, 0.1)
        phi = TrigPoly.cos(3) + TrigPoly.sin(1, 0.5)

        np.testing.assert_allclose(
            kernel.P @ phi(kernel.nodes), one_step_expectation(langevin, phi, 0.1, kernel.nodes), atol=1e-10
        )

    def test_too_few_nodes(self, brownian):
        with pytest.raises(ValueError):
            one_step_expectation(brownian, TrigPoly.cos(), 0.1, 0.0, Q=10)

    def test_non_positive_step(self, brownian):
        with pytest.raises(ValueError):
            one_step_expectation(brownian, TrigPoly.cos(), 0.0, 0.0)


class TestTransitionMatrix:
    def test_rows_and_nodes(self, brownian_kernel):
        assert brownian_kernel.P.shape == (33, 33)
        np.testing.assert_allclose(brownian_kernel.P.sum(axis=1), 1.0, atol=1e-10)
        assert brownian_kernel.quad_points_used == required_quad_points(
            brownian_kernel.model, 0.1, 16
        )

    def test_cardinal_row(self, brownian_kernel):
        row = brownian_kernel.cardinal_row(0.3)

        assert row.sum() == pytest.approx(1.0, abs=1e-13)
        np.testing.assert_allclose(
            brownian_kernel.cardinal_row(float(brownian_kernel.nodes[4])), np.eye(33)[4], atol=1e-13
        )

    def test_brownian_iterates(self, brownian_kernel):
        mass = iterate_law(brownian_kernel, 5)
        value = kernel_expectation(brownian_kernel, TrigPoly.cos(), mass)

        assert value == pytest.approx(math.exp(-0.5), abs=1e-12)

    def test_grid_must_carry_bandwidth(self, brownian):
        with pytest.raises(ValueError):
            transition_matrix(brownian, 0.1, M=9, K_interp=5)

    def test_constant_model_invariant_is_uniform(self, constant_model):
        kernel = transition_matrix(constant_model, 0.2)
        invariant = numerical_invariant(kernel)

        np.testing.assert_allclose(invariant.values, 1.0 / (2.0 * math.pi), atol=1e-10)

    def test_power_iteration_limit(self, langevin):
        kernel = transition_matrix(langevin, 0.1)
        with pytest.raises(NoConvergence):
            numerical_invariant(kernel, max_iterations=1)

    def test_langevin_invariant_tracks_modified_density(self, langevin, langevin_measures):
        tau = 0.1
        invariant = numerical_invariant(transition_matrix(langevin, tau))

        to_rho = density_distance(invariant.values, langevin_measures.rho)
        to_first_order = density_distance(invariant.values, modified_density(langevin_measures, tau, 1))
        assert to_first_order < to_rho

    def test_discrete_mixing_rate(self, brownian_kernel):
        assert discrete_mixing_rate(brownian_kernel) == pytest.approx(1.0, rel=1e-8)

    def test_decay_table(self, brownian_kernel):
        rows = decay_table(brownian_kernel, TrigPoly.cos(), 10)

        assert len(rows) == 10
        assert rows[-1]["t"] == pytest.approx(1.0)
        assert rows[-1]["decay"] == pytest.approx(math.exp(-1.0), abs=1e-10)


class TestErrorCurves:
    def test_constant_model_is_exact(self, constant_model):
        curve = weak_error_curve(constant_model, TrigPoly.cos(), [0.2, 0.1], 1, horizon=60.0)

        assert curve.at_floor
        assert curve.slope is None
        assert len(curve.steps) == 2

    def test_langevin_first_order(self, langevin, langevin_measures):
        curve = weak_error_curve(
            langevin, TrigPoly.cos(), [0.2, 0.1, 0.05], 0, measures=langevin_measures
        )

        assert not curve.at_floor
        assert curve.slope >= 0.75

    def test_langevin_second_order_against_first_corrector(self, langevin, langevin_measures):
        first = weak_error_curve(
            langevin, TrigPoly.cos(), [0.2, 0.1, 0.05], 0, measures=langevin_measures
        )
        second = weak_error_curve(
            langevin, TrigPoly.cos(), [0.2, 0.1, 0.05], 1, measures=langevin_measures
        )

        assert second.order == 1
        assert second.slope >= 1.75
        assert second.errors[-1] < first.errors[-1]

    def test_brownian_finite_time(self, brownian):
        curve = finite_time_error_curve(brownian, TrigPoly.cos(), [0.2, 0.1], 1)

        assert max(curve.errors) < 1e-10
        assert curve.steps == [5, 10]
