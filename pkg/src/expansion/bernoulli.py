"""Exact Bernoulli numbers for the series-inversion weights."""

from fractions import Fraction
from functools import lru_cache
from math import comb, factorial
from typing import Tuple

from ..exceptions import OutOfRange

MAX_BERNOULLI_INDEX = 32


@lru_cache(maxsize=1)
def _table() -> Tuple[Fraction, ...]:
    # sum_{k=0..m} binom(m+1, k) B_k = 0 for m >= 1, which gives B_1 = -1/2
    values = [Fraction(1)]
    for m in range(1, MAX_BERNOULLI_INDEX + 1):
        s = sum((Fraction(comb(m + 1, k)) * values[k] for k in range(m)), Fraction(0))
        values.append(-s / (m + 1))
    return tuple(values)


def bernoulli(index: int) -> Fraction:
    """Bernoulli number B_index in the x/(e^x - 1) convention.

    Args:
        index: Non-negative index, at most 32.

    Returns:
        Fraction: The exact rational value.

    Raises:
        OutOfRange: If the index is negative or above 32.
    """
    if index < 0 or index > MAX_BERNOULLI_INDEX:
        raise OutOfRange(f"Bernoulli index {index} outside [0, {MAX_BERNOULLI_INDEX}]")
    return _table()[index]


def bernoulli_weight(index: int) -> Fraction:
    """B_index / index!, the coefficient of x^index in x/(e^x - 1)."""
    return bernoulli(index) / factorial(index)
