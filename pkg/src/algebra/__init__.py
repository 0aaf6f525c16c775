"""Trigonometric polynomials and differential operators on the circle."""

from .diffop import DiffOp, adjoint, apply, compose, linear_combine, matrix
from .trigpoly import (
    GridFunction,
    TrigPoly,
    derivative,
    evaluate,
    integrate,
    inner,
    interpolate,
    multiply,
    sample,
    sup_norm,
)

__all__ = [
    "DiffOp",
    "GridFunction",
    "TrigPoly",
    "adjoint",
    "apply",
    "compose",
    "derivative",
    "evaluate",
    "inner",
    "integrate",
    "interpolate",
    "linear_combine",
    "matrix",
    "multiply",
    "sample",
    "sup_norm",
]
