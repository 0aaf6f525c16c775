"""Convergence sweeps and result export."""

from .convergence import SlopeFit, SweepResult, fit_slope
from .export_manager import ExportManager

__all__ = [
    "ExportManager",
    "SlopeFit",
    "SweepResult",
    "fit_slope",
]
