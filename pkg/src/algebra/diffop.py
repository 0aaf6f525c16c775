"""Variable-coefficient differential operators sum_k c_k(x) d^k on the circle."""

import logging
from math import comb
from types import MappingProxyType
from typing import Dict, Iterable, List, Mapping, Optional, Tuple

import numpy as np
from scipy.linalg import toeplitz

from .trigpoly import (
    DEFAULT_MAX_BANDWIDTH,
    TrigPoly,
    _complex_to_real,
    _real_to_complex,
    derivative,
    multiply,
)

logger = logging.getLogger(__name__)


class DiffOp:
    """Linear differential operator with trigonometric-polynomial coefficients.

    Terms are kept as a mapping from derivative order to coefficient; zero
    coefficients are dropped on construction so that equal operators have equal
    term sets.
    """

    __slots__ = ("_terms",)

    def __init__(self, terms: Optional[Mapping[int, TrigPoly]] = None):
        clean: Dict[int, TrigPoly] = {}
        for order, coeff in (terms or {}).items():
            if int(order) != order or order < 0:
                raise ValueError(f"derivative order must be a non-negative integer, got {order}")
            if coeff is None or coeff.is_zero():
                continue
            clean[int(order)] = coeff.trimmed()
        self._terms = MappingProxyType(dict(sorted(clean.items())))

    @classmethod
    def zero(cls) -> "DiffOp":
        return cls()

    @classmethod
    def identity(cls) -> "DiffOp":
        return cls({0: TrigPoly.constant(1.0)})

    @classmethod
    def d(cls, order: int = 1, coeff: Optional[TrigPoly] = None) -> "DiffOp":
        """Single term coeff * d^order (coefficient 1 when omitted)."""
        return cls({order: coeff if coeff is not None else TrigPoly.constant(1.0)})

    @classmethod
    def multiplication(cls, coeff: TrigPoly) -> "DiffOp":
        return cls({0: coeff})

    @property
    def terms(self) -> Mapping[int, TrigPoly]:
        return self._terms

    @property
    def max_order(self) -> int:
        """Highest derivative order present (0 for the zero operator)."""
        return max(self._terms, default=0)

    @property
    def coefficient_bandwidth(self) -> int:
        return max((c.bandwidth for c in self._terms.values()), default=0)

    def coefficient(self, order: int) -> TrigPoly:
        return self._terms.get(order, TrigPoly.zero())

    def is_zero(self) -> bool:
        return not self._terms

    def max_coefficient(self) -> float:
        """Largest coefficient magnitude over all terms."""
        return max((c.max_abs for c in self._terms.values()), default=0.0)

    def distance(self, other: "DiffOp") -> float:
        """Largest coefficient-wise difference between two operators."""
        orders = set(self._terms) | set(other._terms)
        return max(
            (self.coefficient(k).distance(other.coefficient(k)) for k in orders),
            default=0.0,
        )

    def __call__(self, p: TrigPoly) -> TrigPoly:
        return apply(self, p)

    def __add__(self, other: "DiffOp") -> "DiffOp":
        return linear_combine([(1.0, self), (1.0, other)])

    def __sub__(self, other: "DiffOp") -> "DiffOp":
        return linear_combine([(1.0, self), (-1.0, other)])

    def __neg__(self) -> "DiffOp":
        return linear_combine([(-1.0, self)])

    def __mul__(self, scalar: float) -> "DiffOp":
        return linear_combine([(float(scalar), self)])

    __rmul__ = __mul__

    def __matmul__(self, other: "DiffOp") -> "DiffOp":
        return compose(self, other)

    def __repr__(self) -> str:
        body = ", ".join(f"d^{k}: {c!r}" for k, c in self._terms.items())
        return f"DiffOp({body})"


def _accumulate(acc: Dict[int, TrigPoly], order: int, term: TrigPoly) -> None:
    if term.is_zero():
        return
    acc[order] = acc[order] + term if order in acc else term


def apply(D: DiffOp, p: TrigPoly, max_bandwidth: int = DEFAULT_MAX_BANDWIDTH) -> TrigPoly:
    """Apply D to p: sum_k c_k * (d^k p).

    Raises:
        BandwidthExceeded: Propagated from coefficient products.
    """
    result = TrigPoly.zero()
    for order, coeff in D.terms.items():
        dp = derivative(p, order)
        if dp.is_zero():
            continue
        result = result + multiply(coeff, dp, max_bandwidth=max_bandwidth)
    return result


def compose(A: DiffOp, B: DiffOp, max_bandwidth: int = DEFAULT_MAX_BANDWIDTH) -> DiffOp:
    """Operator product A o B in standard form.

    (c d^a) o (e d^b) = c * sum_j binom(a, j) (d^(a-j) e) d^(j+b), summed over all
    pairs of terms.
    """
    acc: Dict[int, TrigPoly] = {}
    for a, c in A.terms.items():
        for b, e in B.terms.items():
            for j in range(a + 1):
                de = derivative(e, a - j)
                if de.is_zero():
                    continue
                product = multiply(c, de, max_bandwidth=max_bandwidth)
                _accumulate(acc, j + b, comb(a, j) * product)
    return DiffOp(acc)


def adjoint(D: DiffOp, max_bandwidth: int = DEFAULT_MAX_BANDWIDTH) -> DiffOp:
    """L2 adjoint: sum_k (-1)^k d^k(c_k .), expanded by Leibniz.

    ``max_bandwidth`` is accepted for symmetry with the other operations; the
    adjoint never enlarges coefficient bandwidths.
    """
    acc: Dict[int, TrigPoly] = {}
    for k, c in D.terms.items():
        sign = -1.0 if k % 2 else 1.0
        for j in range(k + 1):
            dc = derivative(c, k - j)
            _accumulate(acc, j, (sign * comb(k, j)) * dc)
    return DiffOp(acc)


def linear_combine(ops: Iterable[Tuple[float, DiffOp]]) -> DiffOp:
    """Term-wise weighted sum of operators."""
    acc: Dict[int, TrigPoly] = {}
    for weight, op in ops:
        if weight == 0.0:
            continue
        for order, coeff in op.terms.items():
            _accumulate(acc, order, float(weight) * coeff)
    return DiffOp(acc)


def matrix(D: DiffOp, K: int) -> np.ndarray:
    """Dense Fourier-Galerkin matrix of D on bandwidth K.

    Column j holds the coefficients of D applied to the j-th basis function of
    {1, cos x, sin x, ..., cos Kx, sin Kx}, truncated to bandwidth K.
    """
    size = 2 * K + 1
    modes = np.arange(-K, K + 1)
    Z = np.zeros((size, size), dtype=complex)
    for order, coeff in D.terms.items():
        zc = coeff.to_complex()
        Kc = coeff.bandwidth
        column = np.zeros(size, dtype=complex)
        row = np.zeros(size, dtype=complex)
        reach = min(Kc, size - 1)
        column[: reach + 1] = zc[Kc: Kc + reach + 1]
        row[: reach + 1] = zc[Kc - reach: Kc + 1][::-1]
        Z += toeplitz(column, row) * ((1j * modes) ** order)[np.newaxis, :]
    basis = _real_to_complex(np.eye(size))
    return _complex_to_real(Z @ basis)


def operator_rows(name: str, D: DiffOp) -> List[Dict[str, float]]:
    """Flatten an operator into table rows (operator, order, harmonic, cos, sin)."""
    rows: List[Dict[str, float]] = []
    for order, coeff in D.terms.items():
        for k in range(coeff.bandwidth + 1):
            a, b = coeff.harmonic(k)
            if a == 0.0 and b == 0.0:
                continue
            rows.append({"operator": name, "order": order, "k": k, "cos": a, "sin": b})
    return rows
