"""Tests for data models."""

import math

import pytest
from pydantic import ValidationError

from src.algebra.diffop import DiffOp
from src.algebra.trigpoly import TrigPoly
from src.expansion.models import OperatorExpansion, SdeModel


def test_langevin_model():
    """Test the Langevin preset and its derived coefficients."""
    model = SdeModel.langevin()

    assert model.name == "langevin"
    assert model.a.allclose(TrigPoly.constant(1.0))
    assert model.ellipticity_min == pytest.approx(1.0)
    assert model.sigma_max == pytest.approx(math.sqrt(2.0))
    assert not model.is_constant


def test_constant_model():
    model = SdeModel.constant(0.7, 1.1)

    assert model.is_constant
    assert model.a.mean == pytest.approx(0.605)


def test_harmonic_lists_are_coerced():
    """Test coefficient coercion from config-style input."""
    model = SdeModel(f=0.5, sigma=[[0, 1.0, 0.0], [1, 0.25, 0.0]])

    assert isinstance(model.f, TrigPoly)
    assert model.f.mean == 0.5
    assert model.sigma.harmonic(1) == (0.25, 0.0)
    assert model.name == "custom"


@pytest.mark.parametrize("sigma", [[], [[1, 1.0, 0.0]], [[0, 0.5, 0.0], [1, 1.0, 0.0]]])
def test_degenerate_diffusion_rejected(sigma):
    """Test that diffusions vanishing somewhere are rejected."""
    with pytest.raises(ValidationError):
        SdeModel(f=[], sigma=sigma)


def test_elliptic_check_bypass():
    model = SdeModel(f=[], sigma=[[1, 1.0, 0.0]], elliptic_check=False)
    assert model.ellipticity_min < 1e-8


def test_sign_change_between_nodes_is_degenerate():
    """sigma = 0.5 + cos x vanishes at 2 pi / 3, which is not a grid node."""
    model = SdeModel(f=[], sigma=[[0, 0.5, 0.0], [1, 1.0, 0.0]], elliptic_check=False)
    assert model.ellipticity_min == 0.0


def test_ellipticity_minimum_is_refined_off_grid():
    shift = 0.005
    sigma = [[0, 1.0001, 0.0], [1, math.cos(shift), -math.sin(shift)]]
    model = SdeModel(f=[], sigma=sigma, elliptic_check=False)

    assert model.ellipticity_min == pytest.approx(0.5e-8, rel=1e-3)
    with pytest.raises(ValidationError):
        SdeModel(f=[], sigma=sigma)


def test_bad_harmonics_rejected():
    with pytest.raises(ValidationError):
        SdeModel(f=[[1, 1.0]], sigma=1.0)


def test_operator_expansion_lengths():
    """Test that A and L lists must match the order."""
    model = SdeModel.brownian()
    with pytest.raises(ValidationError):
        OperatorExpansion(model=model, order=1, A=[DiffOp.identity()], L=[DiffOp.d(2)])


def test_operator_expansion_orders():
    model = SdeModel.brownian()
    with pytest.raises(ValidationError):
        OperatorExpansion(
            model=model,
            order=0,
            A=[DiffOp.identity(), DiffOp.d(3)],
            L=[DiffOp.d(2)],
        )
