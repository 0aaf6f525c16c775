"""Tests for the Galerkin Kolmogorov solvers."""

import math

import numpy as np
import pytest
from scipy.special import i0, i1

from src.algebra.diffop import adjoint, apply
from src.algebra.trigpoly import TrigPoly, grid_nodes, inner
from src.exceptions import FitFailed, NotSolvable
from src.expansion.operators import generator
from src.simulation.kernel import discrete_mixing_rate, transition_matrix
from src.spectral.kolmogorov import (
    HierarchyTrajectory,
    SpectralConfig,
    average,
    duhamel_corrector,
    fit_exponential_rate,
    gibbs_density,
    hierarchy,
    mixing_rate,
    modified_residual,
    propagate,
    semigroup_taylor_error,
    solve_poisson_adjoint,
    spectral_gap,
    stationary_density,
    v_truncated,
)


@pytest.fixture(scope="module")
def langevin_rho(langevin):
    return stationary_density(generator(langevin), SpectralConfig())


class TestStationaryDensity:
    def test_langevin_matches_closed_form(self, langevin_rho):
        x = grid_nodes(64)
        expected = np.exp(np.cos(x)) / (2.0 * math.pi * i0(1.0))

        np.testing.assert_allclose(langevin_rho(x), expected, atol=1e-10)

    def test_langevin_average(self, langevin_rho):
        assert average(TrigPoly.cos(), langevin_rho) == pytest.approx(i1(1.0) / i0(1.0), abs=1e-10)
        assert average(TrigPoly.constant(1.0), langevin_rho) == pytest.approx(1.0, abs=1e-12)

    def test_brownian_is_uniform(self, brownian, spectral_cfg):
        rho = stationary_density(generator(brownian), spectral_cfg)
        assert rho.allclose(TrigPoly.constant(1.0 / (2.0 * math.pi)), atol=1e-12)

    def test_gibbs_density_matches(self, langevin, langevin_rho):
        gibbs = gibbs_density(langevin)

        assert gibbs is not None
        np.testing.assert_allclose(gibbs.values, langevin_rho(gibbs.nodes), atol=1e-10)

    def test_gibbs_density_needs_a_potential(self, constant_model):
        assert gibbs_density(constant_model) is None


class TestPoissonAdjoint:
    def test_solution_and_pin(self, langevin, langevin_rho, spectral_cfg):
        L = generator(langevin)
        g = TrigPoly.cos() + TrigPoly.sin(2, 0.3)
        mu = solve_poisson_adjoint(L, g, langevin_rho, spectral_cfg)

        assert apply(adjoint(L), mu).distance(g) < 1e-9
        assert inner(mu, langevin_rho) == pytest.approx(0.0, abs=1e-10)

    def test_constant_rhs_is_not_solvable(self, langevin, langevin_rho, spectral_cfg):
        with pytest.raises(NotSolvable):
            solve_poisson_adjoint(generator(langevin), TrigPoly.constant(1.0), langevin_rho, spectral_cfg)


class TestSemigroup:
    def test_propagate_brownian_mode(self, brownian, spectral_cfg):
        L = generator(brownian)
        result = propagate(L, TrigPoly.cos(), 0.7, spectral_cfg)

        assert result.allclose(TrigPoly.cos(1, math.exp(-0.7)), atol=1e-12)
        assert propagate(L, TrigPoly.cos(), 0.0, spectral_cfg).allclose(TrigPoly.cos())

    def test_negative_time(self, brownian, spectral_cfg):
        with pytest.raises(ValueError):
            propagate(generator(brownian), TrigPoly.cos(), -1.0, spectral_cfg)

    def test_taylor_error(self, brownian, spectral_cfg):
        # e^-0.1 - (1 - 0.1 + 0.005)
        error = semigroup_taylor_error(generator(brownian), TrigPoly.cos(), 0.1, 2, spectral_cfg)
        assert error == pytest.approx(1.6258e-4, rel=1e-3)

    def test_spectral_gap(self, brownian, spectral_cfg):
        assert spectral_gap(generator(brownian), spectral_cfg) == pytest.approx(1.0, abs=1e-10)


class TestMixing:
    @pytest.mark.parametrize("k, rate", [(1, 1.0), (2, 4.0)])
    def test_brownian_rates(self, brownian, spectral_cfg, k, rate):
        L = generator(brownian)
        rho = stationary_density(L, spectral_cfg)
        estimate = mixing_rate(L, TrigPoly.cos(k), rho, 4.0, spectral_cfg)

        assert estimate.rate == pytest.approx(rate, rel=1e-6)
        assert estimate.prefactor == pytest.approx(1.0, rel=1e-6)
        assert len(estimate.times) == 32

    def test_fit_needs_points_above_floor(self):
        with pytest.raises(FitFailed):
            fit_exponential_rate([1.0, 2.0, 3.0, 4.0], [0.0, 0.0, 0.0, 0.0])

    def test_fit_rejects_growth(self):
        times = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0]
        with pytest.raises(FitFailed):
            fit_exponential_rate(times, [1.0, 0.5, 0.25, 0.5, 1.0, 2.0])

    def test_fit_uses_samples_above_floor(self):
        times = np.linspace(0.5, 16.0, 32)
        decay = np.where(np.exp(-4.0 * times) > 1e-16, 2.0 * np.exp(-4.0 * times), 0.0)
        rate, prefactor, used = fit_exponential_rate(times, decay)

        assert rate == pytest.approx(4.0, rel=1e-10)
        assert prefactor == pytest.approx(2.0, rel=1e-8)
        assert 3 <= used < 16

    def test_second_mode_at_long_horizon(self, brownian, spectral_cfg):
        L = generator(brownian)
        rho = stationary_density(L, spectral_cfg)
        estimate = mixing_rate(L, TrigPoly.cos(2), rho, 10.0, spectral_cfg)

        assert estimate.rate == pytest.approx(4.0, rel=1e-3)

    def test_langevin_rate_stable_on_doubled_window(self, langevin, spectral_cfg):
        L = generator(langevin)
        rho = stationary_density(L, spectral_cfg)
        short = mixing_rate(L, TrigPoly.cos(), rho, 10.0, spectral_cfg)
        long = mixing_rate(L, TrigPoly.cos(), rho, 20.0, spectral_cfg, samples=64)

        assert short.rate > 0
        assert abs(long.rate - short.rate) <= 0.1 * short.rate

    def test_langevin_kernel_eigenvalue_tracks_gap(self, langevin, spectral_cfg):
        tau = 0.05
        gap = spectral_gap(generator(langevin), spectral_cfg)
        second_modulus = math.exp(-discrete_mixing_rate(transition_matrix(langevin, tau)) * tau)

        assert 0 < second_modulus < 1
        assert abs(math.log(second_modulus) + gap * tau) <= 0.2 * gap * tau

    def test_horizon_must_be_positive(self, brownian, spectral_cfg):
        rho = TrigPoly.constant(1.0 / (2.0 * math.pi))
        with pytest.raises(ValueError):
            mixing_rate(generator(brownian), TrigPoly.cos(), rho, 0.0, spectral_cfg)


class TestHierarchy:
    def test_leading_corrector_is_the_semigroup(self, langevin_expansion, spectral_cfg):
        traj = hierarchy(langevin_expansion.L[:3], TrigPoly.cos(), [0.0, 0.5, 1.0], spectral_cfg)

        assert traj.depth == 2
        assert traj.v[0][0].allclose(TrigPoly.cos())
        assert traj.v[1][0].is_zero()
        expected = propagate(langevin_expansion.L[0], TrigPoly.cos(), 1.0, spectral_cfg)
        assert traj.v[0][2].distance(expected) < 1e-10

    def test_times_must_increase(self):
        with pytest.raises(ValueError):
            HierarchyTrajectory(times=[1.0, 0.5], v=[[TrigPoly.zero(), TrigPoly.zero()]], phi=TrigPoly.zero())

    def test_truncated_sum(self, langevin_expansion, small_cfg):
        traj = hierarchy(langevin_expansion.L[:3], TrigPoly.cos(), [0.5], small_cfg)
        combined = traj.v[0][0] + 0.1 * traj.v[1][0] + 0.01 * traj.v[2][0]

        assert v_truncated(traj, 0.1, 2, 0).distance(combined) < 1e-14
        with pytest.raises(ValueError):
            v_truncated(traj, 0.1, 3, 0)

    def test_duhamel_matches_block_exponential(self, langevin_expansion, small_cfg):
        Ls = langevin_expansion.L[:3]
        traj = hierarchy(Ls, TrigPoly.cos(), [0.0, 1.0], small_cfg)

        for n in (1, 2):
            corrector = duhamel_corrector(Ls, traj, n, 1, small_cfg)
            assert corrector.distance(traj.v[n][1]) < 1e-5
        assert duhamel_corrector(Ls, traj, 1, 0, small_cfg).is_zero()

    def test_duhamel_needs_even_substeps(self, langevin_expansion, small_cfg):
        traj = hierarchy(langevin_expansion.L[:2], TrigPoly.cos(), [1.0], small_cfg)
        with pytest.raises(ValueError):
            duhamel_corrector(langevin_expansion.L[:2], traj, 1, 0, small_cfg, substeps=7)

    def test_modified_residual_order(self, langevin_expansion, small_cfg):
        Ls = langevin_expansion.L[:2]
        traj = hierarchy(Ls, TrigPoly.cos(), [0.0, 0.5, 1.0], small_cfg)
        coarse = modified_residual(None, traj, Ls, 0.05, 1)
        fine = modified_residual(None, traj, Ls, 0.025, 1)

        assert coarse / fine == pytest.approx(4.0, rel=1e-10)

    def test_leading_corrector_against_longer_generator(self, langevin_expansion, small_cfg):
        Ls = langevin_expansion.L[:2]
        traj = hierarchy(Ls, TrigPoly.cos(), [0.0, 0.5, 1.0], small_cfg)

        assert modified_residual(None, traj, Ls, 0.05, 0) == 0.0
        coarse = modified_residual(None, traj, Ls, 0.05, 0, generator_order=1)
        fine = modified_residual(None, traj, Ls, 0.025, 0, generator_order=1)
        assert coarse / fine >= 2.0 ** 0.75

    def test_extra_operators_do_not_enter_the_residual(self, langevin_expansion, small_cfg):
        Ls = langevin_expansion.L[:4]
        traj = hierarchy(Ls[:2], TrigPoly.cos(), [0.0, 0.5, 1.0], small_cfg)

        assert modified_residual(None, traj, Ls, 0.05, 1) == modified_residual(None, traj, Ls[:2], 0.05, 1)
        with pytest.raises(ValueError):
            modified_residual(None, traj, Ls[:2], 0.05, 1, generator_order=2)
        with pytest.raises(ValueError):
            modified_residual(None, traj, Ls, 0.05, 2)

    def test_centered_residual_needs_generator(self, langevin_expansion, small_cfg):
        traj = hierarchy(langevin_expansion.L[:2], TrigPoly.cos(), [0.0, 0.5, 1.0], small_cfg)
        with pytest.raises(ValueError):
            modified_residual(None, traj, langevin_expansion.L[:2], 0.1, 1, method="centered")
