"""Code geometry, message vectors, bit/position mapping, and the complex AWGN channel.

A sparse regression codeword is x = A @ beta where beta consists of L sections
of M entries each, with exactly one nonzero entry per section.  The nonzero of
section l sits at a position in 1..M determined by a chunk of log2(M) source
bits, and carries the value sqrt(n * P_l) for the active power allocation.
"""

import math
import warnings
from dataclasses import dataclass

import numpy as np

__all__ = [
    "SparcParams",
    "MessageVector",
    "position_map",
    "position_unmap",
    "bits_to_positions",
    "positions_to_bits",
    "build_message",
    "message_to_bits",
    "awgn_channel",
]


def is_power_of_two(x):
    return x > 0 and (x & (x - 1)) == 0


@dataclass(frozen=True)
class SparcParams:
    """Code geometry: L sections of M columns each, block length n (complex
    channel uses), average codeword power P and channel noise variance sigma2.

    The rate is always the exact ratio L*log2(M)/n of the stored integers.
    Use :meth:`from_rate` to derive n from a requested rate.
    """

    L: int
    M: int
    n: int
    P: float
    sigma2: float

    def __post_init__(self):
        if self.L < 1:
            raise ValueError(f"need L >= 1, got {self.L}")
        if self.M < 2 or not is_power_of_two(self.M):
            raise ValueError(f"M must be a power of two >= 2, got {self.M}")
        if self.n < 1:
            raise ValueError(f"need n >= 1, got {self.n}")
        if not self.P > 0:
            raise ValueError(f"need P > 0, got {self.P}")
        if not self.sigma2 > 0:
            raise ValueError(f"need sigma2 > 0, got {self.sigma2}")

    @classmethod
    def from_rate(cls, L, M, R, P, sigma2, n_multiple_of=None):
        """Construct params for a requested rate R (bits per channel use).

        n is chosen as ceil(L*log2(M)/R); the effective rate, recomputed from
        the integer n, is reported by :attr:`R` and is <= the request.  If
        ``n_multiple_of`` is given (the circulant family needs M | n), n is
        rounded further up to the next multiple, with a warning when this
        changes the block length.
        """
        if R <= 0:
            raise ValueError(f"need R > 0, got {R}")
        n = math.ceil(L * round(math.log2(M)) / R)
        if n_multiple_of is not None:
            n_adj = n_multiple_of * math.ceil(n / n_multiple_of)
            if n_adj != n:
                warnings.warn(
                    f"block length rounded up from {n} to {n_adj} "
                    f"(multiple of {n_multiple_of}); effective rate drops",
                    stacklevel=2,
                )
            n = n_adj
        return cls(L=L, M=M, n=n, P=P, sigma2=sigma2)

    @property
    def log2M(self):
        return round(math.log2(self.M))

    @property
    def bits(self):
        """Number of source bits carried by one codeword."""
        return self.L * self.log2M

    @property
    def R(self):
        """Exact rate L*log2(M)/n in bits per (complex) channel use."""
        return self.bits / self.n

    @property
    def snr(self):
        return self.P / self.sigma2

    @property
    def snr_b(self):
        """Signal-to-noise ratio per bit, (P/sigma2)/R."""
        return self.snr / self.R

    @property
    def capacity(self):
        """Channel capacity log2(1 + P/sigma2) in bits per channel use."""
        return math.log2(1.0 + self.snr)


@dataclass(frozen=True, eq=False)
class MessageVector:
    """Sparse message vector: one (position, value) pair per section.

    ``positions`` holds 1-based column positions in 1..M; ``values`` the
    nonzero magnitudes (sqrt(n*P_l) for a power-allocated code, 1.0 for the
    spatially coupled construction where power lives in the design matrix).
    """

    positions: np.ndarray
    values: np.ndarray
    M: int

    def __post_init__(self):
        object.__setattr__(self, "positions", np.asarray(self.positions, dtype=np.int64))
        object.__setattr__(self, "values", np.asarray(self.values, dtype=np.float64))
        if self.positions.shape != self.values.shape or self.positions.ndim != 1:
            raise ValueError("positions and values must be 1-D arrays of equal length")
        if self.positions.size == 0:
            raise ValueError("message needs at least one section")
        if self.positions.min() < 1 or self.positions.max() > self.M:
            raise ValueError(f"positions must lie in 1..{self.M}")
        if np.any(self.values < 0):
            raise ValueError("section values must be nonnegative")

    @property
    def L(self):
        return self.positions.size

    def dense(self):
        """Dense length-M*L expansion with exactly L nonzeros (test oracles;
        the sparse form is the working representation)."""
        beta = np.zeros(self.L * self.M)
        beta[np.arange(self.L) * self.M + self.positions - 1] = self.values
        return beta

    def __eq__(self, other):
        if not isinstance(other, MessageVector):
            return NotImplemented
        return (
            self.M == other.M
            and np.array_equal(self.positions, other.positions)
            and np.array_equal(self.values, other.values)
        )


def position_map(chunk):
    """Map one chunk of log2(M) bits to a 1-based column position.

    Bit k of the chunk (k = 1..log2(M), i.e. index k-1 here) carries weight
    2**(k-1): the first chunk bit is least significant.
    """
    chunk = np.asarray(chunk)
    weights = 1 << np.arange(chunk.size)
    return 1 + int(chunk.astype(np.int64) @ weights)


def position_unmap(position, log2M):
    """Inverse of :func:`position_map`: 1-based position -> bit chunk."""
    if not 1 <= position <= (1 << log2M):
        raise ValueError(f"position {position} out of range 1..{1 << log2M}")
    return (position - 1) >> np.arange(log2M) & 1


def bits_to_positions(bits, M):
    """Split a bitstream into log2(M)-bit chunks and map each to a position.

    Returns an array of 1-based positions, one per chunk.
    """
    bits = np.asarray(bits, dtype=np.int64)
    log2M = round(math.log2(M))
    if bits.size % log2M != 0:
        raise ValueError(f"bitstream length {bits.size} is not a multiple of log2(M)={log2M}")
    chunks = bits.reshape(-1, log2M)
    weights = 1 << np.arange(log2M)
    return 1 + chunks @ weights


def positions_to_bits(positions, M):
    """Inverse of :func:`bits_to_positions`."""
    positions = np.asarray(positions, dtype=np.int64)
    log2M = round(math.log2(M))
    return ((positions - 1)[:, None] >> np.arange(log2M) & 1).ravel()


def build_message(bits, alloc, params):
    """Build the sparse message vector for a source bitstream.

    bits  : array of params.L * log2(M) bits
    alloc : PowerAllocation over params.L sections
    params: SparcParams

    Section l holds value sqrt(n * P_l) at the position encoded by chunk l.
    """
    bits = np.asarray(bits)
    if bits.size != params.bits:
        raise ValueError(f"expected {params.bits} bits, got {bits.size}")
    if alloc.p.size != params.L:
        raise ValueError(f"allocation covers {alloc.p.size} sections, code has {params.L}")
    positions = bits_to_positions(bits, params.M)
    values = np.sqrt(params.n * alloc.p)
    return MessageVector(positions=positions, values=values, M=params.M)


def message_to_bits(message):
    """Recover the source bitstream from a message vector (exact inverse of
    :func:`build_message` for any values)."""
    return positions_to_bits(message.positions, message.M)


def awgn_channel(x, sigma2, rng):
    """Transmit x over a complex AWGN channel.

    Adds circularly-symmetric complex Gaussian noise of total variance sigma2
    (real and imaginary parts each carry sigma2/2).  ``rng`` may be a seed or
    a numpy Generator; a fixed seed gives a deterministic output.
    """
    if sigma2 < 0:
        raise ValueError(f"need sigma2 >= 0, got {sigma2}")
    x = np.asarray(x)
    if sigma2 == 0:
        return x.astype(complex, copy=True)
    rng = np.random.default_rng(rng)
    scale = math.sqrt(sigma2 / 2.0)
    noise = rng.normal(scale=scale, size=x.shape) + 1j * rng.normal(scale=scale, size=x.shape)
    return x + noise
