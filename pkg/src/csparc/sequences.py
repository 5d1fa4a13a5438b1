"""Perfect polyphase sequences (Frank, Milewski) for circulant design matrices.

A unit-modulus sequence is "perfect" when all of its nontrivial periodic
autocorrelations vanish; the circulant matrix built from such a sequence has
exactly orthogonal rows and columns, which is what the circulant design-matrix
family relies on.
"""

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "PerfectSequence",
    "UnsupportedLengthError",
    "frank_sequence",
    "milewski_sequence",
    "periodic_autocorrelation",
    "autocorrelation_profile",
    "sequence_for_length",
]

# Absolute tolerance per unit length for the vanishing-autocorrelation check.
PERFECTION_TOL = 1e-9


class UnsupportedLengthError(ValueError):
    """Requested length admits neither a Frank nor a Milewski factorization."""


@dataclass(frozen=True, eq=False)
class PerfectSequence:
    """A unit-modulus sequence with vanishing nontrivial autocorrelations.

    ``family`` records the construction, ("frank", d) or ("milewski", d, h),
    so an operator built from the sequence can be reproduced from a config.
    """

    entries: np.ndarray
    family: tuple

    def __post_init__(self):
        entries = np.asarray(self.entries, dtype=complex)
        object.__setattr__(self, "entries", entries)
        if np.abs(np.abs(entries) - 1.0).max() > 1e-12:
            raise ValueError("sequence entries must have unit modulus")
        # Perfection <=> flat power spectrum (|DFT|^2 == N everywhere); this is
        # an O(N log N) check, cheaper than testing every lag directly.
        spectrum = np.abs(np.fft.fft(entries)) ** 2
        if np.abs(spectrum - entries.size).max() > PERFECTION_TOL * entries.size:
            raise ValueError("sequence is not perfect: nontrivial autocorrelation != 0")

    def __len__(self):
        return self.entries.size


def frank_sequence(d):
    """Frank sequence of length d**2.

    The entry at (0-based) index j + k*d is exp(2*pi*i*j*k/d) for
    0 <= j, k < d.
    """
    if d < 1:
        raise ValueError(f"need d >= 1, got {d}")
    j, k = np.meshgrid(np.arange(d), np.arange(d), indexing="ij")
    # index = j + k*d, so j varies fastest along axis 0 of the flattened array
    theta = np.exp(2j * np.pi * (j * k) / d)
    return PerfectSequence(entries=theta.T.ravel(), family=("frank", int(d)))


def milewski_sequence(d, h):
    """Milewski sequence of length d**(2h+1).

    With 0 <= j < d**h and 0 <= k < d**(h+1), the entry at index j + k*d**h is
    exp(pi*i*k*(2j + k*d**h) / d**(h+1)) for even d and
    exp(pi*i*k*(2j + (k+1)*d**h) / d**(h+1)) for odd d.
    """
    if d < 1:
        raise ValueError(f"need d >= 1, got {d}")
    if h < 0:
        raise ValueError(f"need h >= 0, got {h}")
    dh = d**h
    j = np.arange(dh)
    k = np.arange(d ** (h + 1))
    jj, kk = np.meshgrid(j, k, indexing="ij")  # index = j + k*d**h
    if d % 2 == 0:
        phase = kk * (2 * jj + kk * dh)
    else:
        phase = kk * (2 * jj + (kk + 1) * dh)
    theta = np.exp(1j * np.pi * phase / (d ** (h + 1)))
    return PerfectSequence(entries=theta.T.ravel(), family=("milewski", int(d), int(h)))


def periodic_autocorrelation(seq, shift):
    """Cyclic correlation sum_i theta_i * conj(theta_{(i+shift) mod N}).

    ``seq`` may be a PerfectSequence or a plain complex vector.  The zero-lag
    value equals the sequence energy N for unit-modulus sequences.
    """
    theta = seq.entries if isinstance(seq, PerfectSequence) else np.asarray(seq, dtype=complex)
    if not 0 <= shift < theta.size:
        raise ValueError(f"shift {shift} out of range 0..{theta.size - 1}")
    return complex(theta @ np.conj(np.roll(theta, -shift)))


def autocorrelation_profile(seq):
    """All periodic autocorrelations at lags 0..N-1 in one pass.

    Uses the spectral identity (correlation at all lags = inverse transform of
    the power spectrum), which matches :func:`periodic_autocorrelation` lag by
    lag up to rounding.
    """
    theta = seq.entries if isinstance(seq, PerfectSequence) else np.asarray(seq, dtype=complex)
    f = np.fft.fft(theta)
    # ifft of the power spectrum gives sum_j theta_{j+s} conj(theta_j); the
    # conjugate flips it to the convention used by periodic_autocorrelation.
    return np.conj(np.fft.ifft(np.abs(f) ** 2))


def milewski_factorizations(M):
    """All (d, h) with d >= 2, h >= 1 and d**(2h+1) == M, smallest d first."""
    out = []
    d = 2
    while d ** 3 <= M:
        height = round(math.log(M, d))
        if height >= 3 and height % 2 == 1 and d**height == M:
            out.append((d, (height - 1) // 2))
        d += 1
    return out


def sequence_for_length(M):
    """Pick a perfect sequence of length M with a fixed, documented preference.

    Frank wins when M is a perfect square; otherwise the Milewski sequence
    with the smallest d such that M = d**(2h+1) for some h >= 1.  Lengths with
    neither factorization are rejected.
    """
    d = math.isqrt(M)
    if d * d == M:
        return frank_sequence(d)
    milewski = milewski_factorizations(M)
    if milewski:
        return milewski_sequence(*milewski[0])
    raise UnsupportedLengthError(
        f"length {M} is neither a perfect square d**2 (Frank) nor an odd power "
        f"d**(2h+1) with d >= 2, h >= 1 (Milewski)"
    )
