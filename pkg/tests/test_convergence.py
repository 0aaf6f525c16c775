"""Tests for slope fits and the step-size sweeps."""

import pytest

from src.algebra.trigpoly import TrigPoly
from src.analysis.convergence import (
    fit_slope,
    invariant_sweep,
    one_step_sweep,
    residual_sweep,
    sample_points,
    taylor_sweep,
)
from src.expansion.operators import build_expansion, generator
from src.spectral.kolmogorov import stationary_density
from src.spectral.measures import mu_hierarchy

TAUS = [0.1, 0.05, 0.025, 0.0125]


class TestFitSlope:
    def test_exact_power_law(self):
        fit = fit_slope(TAUS, [3.0 * t**2 for t in TAUS])

        assert fit.slope == pytest.approx(2.0)
        assert fit.points == 4
        assert fit.within(1.75, 2.6)
        assert not fit.at_least(2.5)
        assert fit.label() == "2.000"

    def test_floor(self):
        fit = fit_slope(TAUS, [1e-14, 0.0, 3e-13, 1e-12])

        assert fit.at_floor
        assert fit.slope is None
        assert fit.at_least(10.0)
        assert fit.label() == "floor"

    def test_single_point(self):
        with pytest.raises(ValueError):
            fit_slope([0.1], [1e-3])

    def test_sample_points_avoid_nodes(self):
        xs = sample_points(4)
        assert xs[0] == pytest.approx(0.25 * 3.141592653589793)


class TestSweeps:
    def test_one_step(self, langevin_expansion):
        sweep = one_step_sweep(langevin_expansion, TrigPoly.cos(), TAUS, [1, 2, 3])

        assert list(sweep.table.columns) == ["tau", "error_N1", "error_N2", "error_N3"]
        for N, fit in sweep.fits.items():
            assert fit.within(N + 0.75, N + 1.6), (N, fit.slope)
        assert len(sweep.point_fits[1]) == 8

    def test_one_step_needs_operators(self, langevin_expansion):
        with pytest.raises(ValueError):
            one_step_sweep(langevin_expansion, TrigPoly.cos(), TAUS, [5])

    def test_taylor(self, brownian, spectral_cfg):
        sweep = taylor_sweep(generator(brownian), TrigPoly.cos(), TAUS, [1, 2], spectral_cfg)

        for N, fit in sweep.fits.items():
            assert fit.slope == pytest.approx(N + 1, abs=0.1)

    def test_invariant_langevin(self, langevin_expansion, langevin_measures):
        long_time, density = invariant_sweep(
            langevin_expansion, langevin_measures, TrigPoly.cos(), [0.2, 0.1, 0.05, 0.025], [0, 1]
        )

        assert long_time.name == "long_time"
        assert density.name == "invariant_density"
        assert long_time.fits[0].at_least(0.75)
        assert long_time.fits[1].at_least(1.75)
        assert density.fits[0].at_least(0.75)

    def test_invariant_constant_model(self, constant_model, spectral_cfg):
        expansion = build_expansion(constant_model, 1)
        rho = stationary_density(expansion.L[0], spectral_cfg)
        measures = mu_hierarchy(expansion.L, rho, spectral_cfg)
        long_time, density = invariant_sweep(
            expansion, measures, TrigPoly.cos(), [0.2, 0.1], [0, 1], horizon=60.0
        )

        assert all(fit.at_floor for fit in long_time.fits.values())
        assert all(fit.at_floor for fit in density.fits.values())

    def test_residual(self, langevin_expansion, langevin_measures):
        sweep, means = residual_sweep(langevin_expansion, langevin_measures, [0.1, 0.05, 0.025], [1, 2])

        for N, fit in sweep.fits.items():
            assert fit.at_least(N + 0.75)
        assert max(abs(v) for values in means.values() for v in values) < 1e-9
