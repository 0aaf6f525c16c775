"""Command-line interface for the convergence studies."""

from .main import cli

__all__ = ["cli"]
