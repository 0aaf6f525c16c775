"""Error hierarchy for the modified Kolmogorov operator toolkit."""


class ModifiedKolmogorovError(Exception):
    """Base class for every error raised by the library."""


class BandwidthExceeded(ModifiedKolmogorovError, ValueError):
    """A product or operator application overflowed the bandwidth cap."""

    def __init__(self, requested: int, cap: int, tail: float, retained: float):
        self.requested = requested
        self.cap = cap
        self.tail = tail
        self.retained = retained
        super().__init__(
            f"bandwidth {requested} exceeds cap {cap}: discarded tail {tail:.3e} "
            f"vs retained max {retained:.3e}"
        )


class InsufficientNodes(ModifiedKolmogorovError, ValueError):
    """Too few grid nodes to resolve the requested bandwidth."""

    def __init__(self, nodes: int, bandwidth: int):
        self.nodes = nodes
        self.bandwidth = bandwidth
        super().__init__(
            f"{nodes} nodes cannot resolve bandwidth {bandwidth} (need >= {2 * bandwidth + 1})"
        )


class OutOfRange(ModifiedKolmogorovError, ValueError):
    """An index argument lies outside the supported range."""


class SolveFailed(ModifiedKolmogorovError, RuntimeError):
    """A linear solve left a residual above tolerance."""

    def __init__(self, what: str, residual: float, tolerance: float):
        self.residual = residual
        self.tolerance = tolerance
        super().__init__(f"{what}: residual {residual:.3e} exceeds tolerance {tolerance:.3e}")


class NotADensity(ModifiedKolmogorovError, RuntimeError):
    """A computed stationary density took clearly negative values."""


class NotSolvable(ModifiedKolmogorovError, ValueError):
    """A right-hand side violates the solvability condition of an adjoint problem."""


class FitFailed(ModifiedKolmogorovError, RuntimeError):
    """A decay or slope fit could not be carried out on the sampled data."""


class RowSumViolation(ModifiedKolmogorovError, RuntimeError):
    """A transition matrix does not preserve constants."""


class NoConvergence(ModifiedKolmogorovError, RuntimeError):
    """An iteration hit its iteration limit."""
