"""Real trigonometric polynomials and grid functions on the circle."""

import logging
import math
from typing import Iterable, Optional, Sequence, Tuple, Union

import numpy as np

from ..exceptions import BandwidthExceeded, InsufficientNodes

logger = logging.getLogger(__name__)

DEFAULT_MAX_BANDWIDTH = 256
TRIM_TOLERANCE = 1e-14
TAIL_TOLERANCE = 1e-12

ArrayLike = Union[float, np.ndarray, Sequence[float]]


def _real_to_complex(coeffs: np.ndarray) -> np.ndarray:
    """Map real [c0, a1, b1, ..., aK, bK] vectors (along axis 0) to exponentials -K..K."""
    coeffs = np.asarray(coeffs, dtype=float)
    K = (coeffs.shape[0] - 1) // 2
    z = np.zeros((2 * K + 1,) + coeffs.shape[1:], dtype=complex)
    z[K] = coeffs[0]
    if K:
        a = coeffs[1::2]
        b = coeffs[2::2]
        z[K + 1:] = 0.5 * (a - 1j * b)
        z[K - 1::-1] = 0.5 * (a + 1j * b)
    return z


def _complex_to_real(z: np.ndarray) -> np.ndarray:
    """Inverse of ``_real_to_complex``; the imaginary residue of the mean is dropped."""
    K = (z.shape[0] - 1) // 2
    coeffs = np.zeros(z.shape, dtype=float)
    coeffs[0] = z[K].real
    if K:
        plus = z[K + 1:]
        minus = z[K - 1::-1]
        coeffs[1::2] = (plus + minus).real
        coeffs[2::2] = (minus - plus).imag
    return coeffs


def grid_nodes(size: int) -> np.ndarray:
    """Uniform nodes x_i = 2*pi*i/M on [0, 2*pi)."""
    return 2.0 * math.pi * np.arange(size) / size


class TrigPoly:
    """Real trigonometric polynomial c0 + sum a_k cos(kx) + b_k sin(kx).

    Coefficients are stored interleaved as [c0, a1, b1, ..., aK, bK] in a read-only
    array; instances are immutable.
    """

    __slots__ = ("_coeffs",)
    # numpy scalars defer to our reflected operators
    __array_ufunc__ = None

    def __init__(self, coeffs: Iterable[float]):
        arr = np.array(list(coeffs) if not isinstance(coeffs, np.ndarray) else coeffs,
                       dtype=float)
        if arr.ndim != 1 or arr.size % 2 == 0:
            raise ValueError(f"expected an odd-length coefficient vector, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("trigonometric polynomial coefficients must be finite")
        arr.setflags(write=False)
        self._coeffs = arr

    # Construction helpers

    @classmethod
    def zero(cls) -> "TrigPoly":
        return cls([0.0])

    @classmethod
    def constant(cls, value: float) -> "TrigPoly":
        return cls([float(value)])

    @classmethod
    def cos(cls, k: int = 1, amplitude: float = 1.0) -> "TrigPoly":
        return cls.from_harmonics([(k, amplitude, 0.0)])

    @classmethod
    def sin(cls, k: int = 1, amplitude: float = 1.0) -> "TrigPoly":
        return cls.from_harmonics([(k, 0.0, amplitude)])

    @classmethod
    def from_harmonics(cls, harmonics: Iterable[Sequence[float]]) -> "TrigPoly":
        """Build from (k, cos_coeff, sin_coeff) triples; k = 0 is the constant term.

        Args:
            harmonics: Iterable of triples. Repeated harmonics are summed.

        Returns:
            TrigPoly: The assembled polynomial.
        """
        triples = [tuple(h) for h in harmonics]
        for triple in triples:
            if len(triple) != 3:
                raise ValueError(f"harmonic entries must be [k, a_k, b_k], got {list(triple)}")
            if int(triple[0]) != triple[0] or triple[0] < 0:
                raise ValueError(f"harmonic index must be a non-negative integer, got {triple[0]}")
        K = max((int(t[0]) for t in triples), default=0)
        coeffs = np.zeros(2 * K + 1)
        for k, a, b in triples:
            k = int(k)
            if k == 0:
                coeffs[0] += a
            else:
                coeffs[2 * k - 1] += a
                coeffs[2 * k] += b
        return cls(coeffs)

    @classmethod
    def from_complex(cls, z: np.ndarray) -> "TrigPoly":
        return cls(_complex_to_real(np.asarray(z)))

    # Accessors

    @property
    def coeffs(self) -> np.ndarray:
        return self._coeffs

    @property
    def bandwidth(self) -> int:
        return (self._coeffs.size - 1) // 2

    @property
    def mean(self) -> float:
        """Average over the period, i.e. the constant coefficient."""
        return float(self._coeffs[0])

    @property
    def max_abs(self) -> float:
        """Largest coefficient magnitude."""
        return float(np.max(np.abs(self._coeffs)))

    def harmonic(self, k: int) -> Tuple[float, float]:
        """Return (a_k, b_k); (c0, 0) for k = 0 and zeros beyond the bandwidth."""
        if k == 0:
            return float(self._coeffs[0]), 0.0
        if k > self.bandwidth:
            return 0.0, 0.0
        return float(self._coeffs[2 * k - 1]), float(self._coeffs[2 * k])

    def padded(self, bandwidth: int) -> "TrigPoly":
        """Zero-pad or truncate to exactly the given bandwidth."""
        size = 2 * bandwidth + 1
        if size == self._coeffs.size:
            return self
        out = np.zeros(size)
        n = min(size, self._coeffs.size)
        out[:n] = self._coeffs[:n]
        return TrigPoly(out)

    def vector(self, bandwidth: int) -> np.ndarray:
        """Writable coefficient vector of the given bandwidth."""
        return np.array(self.padded(bandwidth).coeffs)

    def trimmed(self, tolerance: float = 0.0) -> "TrigPoly":
        """Zero coefficients below ``tolerance`` relative to the largest and drop trailing zero harmonics."""
        coeffs = np.array(self._coeffs)
        scale = np.max(np.abs(coeffs))
        if scale == 0.0:
            return TrigPoly.zero()
        if tolerance > 0.0:
            coeffs[np.abs(coeffs) < tolerance * scale] = 0.0
        K = self.bandwidth
        while K > 0 and coeffs[2 * K - 1] == 0.0 and coeffs[2 * K] == 0.0:
            K -= 1
        return TrigPoly(coeffs[: 2 * K + 1])

    def to_complex(self, bandwidth: Optional[int] = None) -> np.ndarray:
        coeffs = self._coeffs if bandwidth is None else self.padded(bandwidth).coeffs
        return _real_to_complex(coeffs)

    def is_zero(self) -> bool:
        return not np.any(self._coeffs)

    def allclose(self, other: "TrigPoly", atol: float = 1e-12) -> bool:
        K = max(self.bandwidth, other.bandwidth)
        return bool(np.allclose(self.vector(K), other.vector(K), rtol=0.0, atol=atol))

    def distance(self, other: "TrigPoly") -> float:
        """Largest coefficient-wise difference."""
        K = max(self.bandwidth, other.bandwidth)
        return float(np.max(np.abs(self.vector(K) - other.vector(K))))

    # Evaluation

    def __call__(self, x: ArrayLike) -> Union[float, np.ndarray]:
        return evaluate(self, x)

    # Arithmetic (linear operations only; products go through ``multiply``)

    def __add__(self, other: object) -> "TrigPoly":
        if isinstance(other, (int, float)):
            other = TrigPoly.constant(other)
        if not isinstance(other, TrigPoly):
            return NotImplemented
        K = max(self.bandwidth, other.bandwidth)
        return TrigPoly(self.vector(K) + other.vector(K))

    __radd__ = __add__

    def __neg__(self) -> "TrigPoly":
        return TrigPoly(-self._coeffs)

    def __sub__(self, other: object) -> "TrigPoly":
        if isinstance(other, (int, float)):
            other = TrigPoly.constant(other)
        if not isinstance(other, TrigPoly):
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other: object) -> "TrigPoly":
        return (-self) + other

    def __mul__(self, other: object) -> "TrigPoly":
        if isinstance(other, TrigPoly):
            return multiply(self, other)
        if isinstance(other, (int, float, np.floating)):
            return TrigPoly(float(other) * self._coeffs)
        return NotImplemented

    __rmul__ = __mul__

    def __truediv__(self, other: float) -> "TrigPoly":
        return TrigPoly(self._coeffs / float(other))

    def __repr__(self) -> str:
        terms = [f"{self._coeffs[0]:.6g}"]
        for k in range(1, self.bandwidth + 1):
            a, b = self.harmonic(k)
            if a:
                terms.append(f"{a:+.6g}cos({k}x)")
            if b:
                terms.append(f"{b:+.6g}sin({k}x)")
        return f"TrigPoly({' '.join(terms)})"


def evaluate(p: TrigPoly, x: ArrayLike) -> Union[float, np.ndarray]:
    """Evaluate c0 + sum a_k cos(kx) + b_k sin(kx) at scalar or array ``x``."""
    xs = np.asarray(x, dtype=float)
    K = p.bandwidth
    value = np.full(xs.shape, p.coeffs[0])
    if K:
        k = np.arange(1, K + 1)
        phase = np.multiply.outer(xs, k)
        value = value + np.cos(phase) @ p.coeffs[1::2] + np.sin(phase) @ p.coeffs[2::2]
    if value.ndim == 0:
        return float(value)
    return value


def derivative(p: TrigPoly, k: int = 1) -> TrigPoly:
    """Exact k-th derivative; the bandwidth is unchanged."""
    if k < 0:
        raise ValueError(f"derivative order must be non-negative, got {k}")
    if k == 0:
        return p
    K = p.bandwidth
    if K == 0:
        return TrigPoly.zero()
    a = p.coeffs[1::2]
    b = p.coeffs[2::2]
    # d/dx maps (a, b) -> (k b, -k a); four steps bring it back.
    for _ in range(k % 4):
        a, b = b, -a
    scale = np.arange(1, K + 1, dtype=float) ** k
    coeffs = np.zeros(2 * K + 1)
    coeffs[1::2] = scale * a
    coeffs[2::2] = scale * b
    return TrigPoly(coeffs)


def multiply(
    p: TrigPoly,
    q: TrigPoly,
    max_bandwidth: int = DEFAULT_MAX_BANDWIDTH,
    trim_tolerance: float = TRIM_TOLERANCE,
    tail_tolerance: float = TAIL_TOLERANCE,
) -> TrigPoly:
    """Exact product by convolution of the exponential coefficients.

    Args:
        p: Left factor.
        q: Right factor.
        max_bandwidth: Cap K_max on the product bandwidth.
        trim_tolerance: Relative threshold below which product coefficients are zeroed.
        tail_tolerance: Relative size of a discarded tail that is still acceptable.

    Returns:
        TrigPoly: The product, trimmed.

    Raises:
        BandwidthExceeded: If the product exceeds the cap and the discarded tail is significant.
    """
    if p.is_zero() or q.is_zero():
        return TrigPoly.zero()
    coeffs = _complex_to_real(np.convolve(p.to_complex(), q.to_complex()))
    K = p.bandwidth + q.bandwidth
    if K > max_bandwidth:
        retained = coeffs[: 2 * max_bandwidth + 1]
        tail = float(np.max(np.abs(coeffs[2 * max_bandwidth + 1:])))
        retained_max = float(np.max(np.abs(retained)))
        if tail > tail_tolerance * retained_max:
            raise BandwidthExceeded(K, max_bandwidth, tail, retained_max)
        logger.debug(f"Product bandwidth {K} truncated to {max_bandwidth} (tail {tail:.2e})")
        coeffs = retained
    return TrigPoly(coeffs).trimmed(trim_tolerance)


def integrate(p: TrigPoly) -> float:
    """Integral over one period [0, 2*pi)."""
    return 2.0 * math.pi * p.mean


def quadrature_nodes(*polys: TrigPoly) -> int:
    """Node count 4x the largest bandwidth in play (at least 8)."""
    return max(8, 4 * max((p.bandwidth for p in polys), default=0))


def inner(p: TrigPoly, q: TrigPoly, nodes: Optional[int] = None) -> float:
    """Integral of p*q over the circle by the uniform trapezoid rule.

    The rule is exact once ``nodes`` exceeds the sum of the bandwidths.
    """
    M = nodes or quadrature_nodes(p, q)
    x = grid_nodes(M)
    return float(2.0 * math.pi / M * np.sum(evaluate(p, x) * evaluate(q, x)))


def sup_norm(p: TrigPoly, nodes: Optional[int] = None) -> float:
    """Maximum modulus sampled on a uniform grid (default 8K + 64 nodes)."""
    M = nodes or 8 * p.bandwidth + 64
    return float(np.max(np.abs(evaluate(p, grid_nodes(M)))))


class GridFunction:
    """Values of a periodic function at the nodes x_i = 2*pi*i/M."""

    __slots__ = ("_values",)

    def __init__(self, values: Iterable[float]):
        arr = np.array(values, dtype=float)
        if arr.ndim != 1 or arr.size == 0:
            raise ValueError("grid function values must be a non-empty 1-D array")
        arr.setflags(write=False)
        self._values = arr

    @property
    def values(self) -> np.ndarray:
        return self._values

    @property
    def size(self) -> int:
        return int(self._values.size)

    @property
    def nodes(self) -> np.ndarray:
        return grid_nodes(self.size)

    def integral(self) -> float:
        """Trapezoid integral over the period."""
        return float(2.0 * math.pi / self.size * np.sum(self._values))

    def __repr__(self) -> str:
        return f"GridFunction(size={self.size})"


def sample(p: TrigPoly, size: int) -> GridFunction:
    """Sample ``p`` at ``size`` uniform nodes."""
    if size < 1:
        raise ValueError(f"grid size must be positive, got {size}")
    return GridFunction(np.atleast_1d(evaluate(p, grid_nodes(size))))


def interpolate(g: GridFunction, bandwidth: int) -> TrigPoly:
    """Trigonometric interpolant of bandwidth K by discrete Fourier analysis.

    Raises:
        InsufficientNodes: If the grid has fewer than 2K+1 nodes.
    """
    if g.size < 2 * bandwidth + 1:
        raise InsufficientNodes(g.size, bandwidth)
    spectrum = np.fft.rfft(g.values) / g.size
    coeffs = np.zeros(2 * bandwidth + 1)
    coeffs[0] = spectrum[0].real
    coeffs[1::2] = 2.0 * spectrum[1: bandwidth + 1].real
    coeffs[2::2] = -2.0 * spectrum[1: bandwidth + 1].imag
    return TrigPoly(coeffs)
