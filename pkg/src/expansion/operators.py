"""Construction of the one-step operators A_n and the modified generator terms L_n."""

import logging
from fractions import Fraction
from math import factorial
from typing import Dict, List, Optional, Tuple

from ..algebra.diffop import DiffOp, apply, compose, linear_combine
from ..algebra.trigpoly import DEFAULT_MAX_BANDWIDTH, TrigPoly, multiply
from ..exceptions import OutOfRange
from .bernoulli import bernoulli_weight
from .models import OperatorExpansion, SdeModel

logger = logging.getLogger(__name__)

MAX_EXPANSION_ORDER = 6


def generator(model: SdeModel) -> DiffOp:
    """Kolmogorov generator L = f d + a d^2."""
    return DiffOp({1: model.f, 2: model.a})


def _frozen_iterates(model: SdeModel, count: int, max_bandwidth: int) -> List[DiffOp]:
    """A_0..A_count from the frozen-coefficient iteration, each divided by n!."""
    iterates = [DiffOp.identity()]
    for _ in range(count):
        acc: Dict[int, TrigPoly] = {}
        for order, c in iterates[-1].terms.items():
            for shift, frozen in ((1, model.f), (2, model.a)):
                if frozen.is_zero():
                    continue
                term = multiply(c, frozen, max_bandwidth=max_bandwidth)
                acc[order + shift] = acc[order + shift] + term if order + shift in acc else term
        iterates.append(DiffOp(acc))
    return [op * (1.0 / factorial(n)) for n, op in enumerate(iterates)]


def a_operators(
    model: SdeModel,
    N: int,
    max_bandwidth: int = DEFAULT_MAX_BANDWIDTH,
    max_order: int = MAX_EXPANSION_ORDER,
) -> List[DiffOp]:
    """One-step expansion operators A_0..A_N.

    Each term c d^j of the running iterate contributes c f d^(j+1) + c a d^(j+2);
    f and a are never differentiated. The n-th iterate is divided by n! so that
    E phi(X_1) = sum_n tau^n A_n phi + O(tau^(N+1)).

    Args:
        model: The SDE.
        N: Highest index returned.
        max_bandwidth: Bandwidth cap for coefficient products.
        max_order: Largest N accepted.

    Returns:
        List[DiffOp]: A_0 (identity) through A_N.

    Raises:
        OutOfRange: If N is negative or above ``max_order``.
    """
    if N < 0 or N > max_order:
        raise OutOfRange(f"expansion order {N} outside [0, {max_order}]")
    return _frozen_iterates(model, N, max_bandwidth)


def power(p: TrigPoly, exponent: int, max_bandwidth: int = DEFAULT_MAX_BANDWIDTH) -> TrigPoly:
    result = TrigPoly.constant(1.0)
    for _ in range(exponent):
        result = multiply(result, p, max_bandwidth=max_bandwidth)
    return result


def closed_form_a_operator(
    model: SdeModel, n: int, max_bandwidth: int = DEFAULT_MAX_BANDWIDTH
) -> DiffOp:
    """Gaussian-moment form A_n = sum_j f^j a^(n-j) / (j! (n-j)!) d^(2n-j)."""
    terms: Dict[int, TrigPoly] = {}
    for j in range(n + 1):
        coeff = multiply(
            power(model.f, j, max_bandwidth),
            power(model.a, n - j, max_bandwidth),
            max_bandwidth=max_bandwidth,
        )
        terms[2 * n - j] = coeff / (factorial(j) * factorial(n - j))
    return DiffOp(terms)


class _CompositionPowers:
    """Sums of ordered products P_l(m) = sum_{n_1+..+n_l=m} L_{n_1} o .. o L_{n_l}.

    Products are taken left to right; P_0(0) is the identity.
    """

    def __init__(self, L: List[DiffOp], max_bandwidth: int):
        self._L = L
        self._max_bandwidth = max_bandwidth
        self._cache: Dict[Tuple[int, int], DiffOp] = {}

    def __call__(self, length: int, total: int) -> DiffOp:
        if length == 0:
            return DiffOp.identity() if total == 0 else DiffOp.zero()
        key = (length, total)
        if key not in self._cache:
            if total >= len(self._L):
                raise OutOfRange(f"L_{total} is not available yet")
            acc = DiffOp.zero()
            for first in range(total + 1):
                rest = self(length - 1, total - first)
                if rest.is_zero() or self._L[first].is_zero():
                    continue
                acc = acc + compose(self._L[first], rest, self._max_bandwidth)
            self._cache[key] = acc
        return self._cache[key]


def l_operators(
    model: SdeModel,
    N: int,
    A: Optional[List[DiffOp]] = None,
    max_bandwidth: int = DEFAULT_MAX_BANDWIDTH,
    max_order: int = MAX_EXPANSION_ORDER,
) -> List[DiffOp]:
    """Modified-generator terms L_0..L_N.

    L_n = A_(n+1) + sum_{l=1..n} (B_l / l!) sum_{n_1+..+n_(l+1) = n-l}
    L_(n_1) o .. o L_(n_l) o A_(n_(l+1)+1), with B_1 = -1/2.

    Args:
        model: The SDE.
        N: Highest index returned.
        A: Precomputed A_0..A_(N+1); built when omitted.
        max_bandwidth: Bandwidth cap for coefficient products.
        max_order: Largest N accepted.

    Returns:
        List[DiffOp]: L_0 = generator(model) through L_N.
    """
    if N < 0 or N > max_order:
        raise OutOfRange(f"expansion order {N} outside [0, {max_order}]")
    if A is None:
        A = _frozen_iterates(model, N + 1, max_bandwidth)
    if len(A) < N + 2:
        raise OutOfRange(f"L_{N} needs A_0..A_{N + 1}, got {len(A)} operators")

    L: List[DiffOp] = []
    powers = _CompositionPowers(L, max_bandwidth)
    for n in range(N + 1):
        weighted: List[Tuple[float, DiffOp]] = [(1.0, A[n + 1])]
        for length in range(1, n + 1):
            weight: Fraction = bernoulli_weight(length)
            if weight == 0:
                continue
            acc = DiffOp.zero()
            for last in range(n - length + 1):
                prefix = powers(length, n - length - last)
                if prefix.is_zero():
                    continue
                acc = acc + compose(prefix, A[last + 1], max_bandwidth)
            weighted.append((float(weight), acc))
        L.append(linear_combine(weighted))
        logger.debug(f"L_{n} built: order {L[-1].max_order}, bandwidth {L[-1].coefficient_bandwidth}")
    return L


def build_expansion(
    model: SdeModel,
    N: int,
    max_bandwidth: int = DEFAULT_MAX_BANDWIDTH,
    max_order: int = MAX_EXPANSION_ORDER,
) -> OperatorExpansion:
    """Build A_0..A_(N+1) and L_0..L_N for a model in one call."""
    if N < 0 or N > max_order:
        raise OutOfRange(f"expansion order {N} outside [0, {max_order}]")
    A = _frozen_iterates(model, N + 1, max_bandwidth)
    L = l_operators(model, N, A=A, max_bandwidth=max_bandwidth, max_order=max_order)
    expansion = OperatorExpansion(model=model, order=N, A=A, L=L)
    logger.info(f"✅ Built operator expansion of order {N} for model '{model.name}'")
    return expansion


def reconstruct_a_operators(
    expansion: OperatorExpansion, max_bandwidth: int = DEFAULT_MAX_BANDWIDTH
) -> List[DiffOp]:
    """A_1..A_(N+1) rebuilt from the L's: A_n = sum_l (1/l!) P_l(n - l)."""
    powers = _CompositionPowers(expansion.L, max_bandwidth)
    rebuilt = []
    for n in range(1, expansion.order + 2):
        rebuilt.append(
            linear_combine(
                (1.0 / factorial(length), powers(length, n - length))
                for length in range(1, n + 1)
            )
        )
    return rebuilt


def verify_inverse_relation(
    expansion: OperatorExpansion, max_bandwidth: int = DEFAULT_MAX_BANDWIDTH
) -> Dict[int, float]:
    """Largest coefficient discrepancy between each A_n and its reconstruction.

    Returns:
        Dict[int, float]: Residual per n = 1..N+1.
    """
    rebuilt = reconstruct_a_operators(expansion, max_bandwidth)
    residuals = {n: expansion.A[n].distance(op) for n, op in enumerate(rebuilt, start=1)}
    logger.debug(f"Inverse relation residuals: {residuals}")
    return residuals


def annihilation_residuals(expansion: OperatorExpansion) -> Dict[int, float]:
    """max |L_n 1| for every n; zero-order terms are the only contributors."""
    one = TrigPoly.constant(1.0)
    return {n: apply(op, one).max_abs for n, op in enumerate(expansion.L)}


def modified_generator(expansion: OperatorExpansion, tau: float, N: int) -> DiffOp:
    """L^(N) = L + sum_{n=1..N} tau^n L_n."""
    if N < 0 or N > expansion.order:
        raise OutOfRange(f"order {N} outside [0, {expansion.order}]")
    if tau < 0:
        raise ValueError(f"step size must be non-negative, got {tau}")
    return linear_combine((tau**n, expansion.L[n]) for n in range(N + 1))
