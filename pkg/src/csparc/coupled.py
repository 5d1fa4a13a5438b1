"""Spatially coupled construction: banded base matrix and block-aware AMP.

The base matrix is a power template: each nonzero (r, c) entry sets the
variance of an M_R x M_C Gaussian block of the design matrix.  Power is
carried by the matrix, so message vectors for coupled codes use unit values.
The decoder tracks a residual variance per row block and an effective noise
variance per column block; with coupling width 1 the blocks never interact
and the decode reduces to independent per-block runs.
"""

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .amp import AmpTrace, DivergenceError, AmpConfig, denoise_sections, _pinned_arrays, TAU2_FLOOR
from .params import MessageVector, bits_to_positions

__all__ = [
    "BaseMatrix",
    "ScParams",
    "base_matrix",
    "sc_build_message",
    "sc_decode",
]


@dataclass(frozen=True, eq=False)
class BaseMatrix:
    """Banded (w, Lambda) power template with Lambda+w-1 rows, Lambda columns.

    Nonzero entries equal P*(Lambda+w-1)/w on the band c <= r <= c+w-1
    (1-based), exactly w per column; the mean over all entries is exactly P.
    """

    w: int
    Lambda: int
    P: float
    weights: np.ndarray

    @property
    def L_R(self):
        return self.Lambda + self.w - 1

    @property
    def L_C(self):
        return self.Lambda


def base_matrix(w, Lambda, P):
    """Construct the (w, Lambda) base matrix for average power P."""
    if w < 1:
        raise ValueError(f"need coupling width w >= 1, got {w}")
    if Lambda < 1:
        raise ValueError(f"need coupling length >= 1, got {Lambda}")
    L_R = Lambda + w - 1
    value = P * L_R / w
    weights = np.zeros((L_R, Lambda))
    for c in range(Lambda):
        weights[c : c + w, c] = value
    return BaseMatrix(w=w, Lambda=Lambda, P=P, weights=weights)


@dataclass(frozen=True)
class ScParams:
    """Geometry of a spatially coupled code: base template plus block sizes.

    n = M_R * L_R channel uses; M_C * L_C columns split into sections of M.
    Sections must not straddle column blocks (M | M_C).
    """

    base: BaseMatrix
    M_R: int
    M_C: int
    M: int

    def __post_init__(self):
        if self.M_C % self.M != 0:
            raise ValueError(f"M_C = {self.M_C} must be a multiple of M = {self.M}")

    @property
    def n(self):
        return self.M_R * self.base.L_R

    @property
    def ml(self):
        return self.M_C * self.base.L_C

    @property
    def L(self):
        return self.ml // self.M

    @property
    def sections_per_block(self):
        return self.M_C // self.M

    @classmethod
    def for_code(cls, base, L, M, n):
        """Fit block sizes to L sections of size M and a target length n.

        The section count must split evenly over the column blocks; n is
        rounded to the nearest multiple of L_R (with a warning if it moves).
        """
        if L % base.L_C != 0:
            raise ValueError(f"L = {L} sections do not split over {base.L_C} column blocks")
        M_C = (L // base.L_C) * M
        M_R = max(1, round(n / base.L_R))
        if M_R * base.L_R != n:
            warnings.warn(
                f"block length adjusted from {n} to {M_R * base.L_R} "
                f"(multiple of {base.L_R} row blocks)",
                stacklevel=2,
            )
        return cls(base=base, M_R=M_R, M_C=M_C, M=M)


def sc_build_message(bits, L, M):
    """Message vector for a coupled code: positions from the bitstream, unit
    values (the base matrix carries the power)."""
    bits = np.asarray(bits)
    log2M = round(math.log2(M))
    if bits.size != L * log2M:
        raise ValueError(f"expected {L * log2M} bits, got {bits.size}")
    return MessageVector(positions=bits_to_positions(bits, M), values=np.ones(L), M=M)


def sc_decode(y, sc_params, operator, sigma2, config=None):
    """Block-aware AMP decode of a spatially coupled code.

    y        : channel output, length n
    sc_params: ScParams the operator was built from
    operator : CoupledOperator
    sigma2   : channel noise variance (recorded only; estimates are online)
    config   : AmpConfig; tau_mode must be "online"

    Residual variances are tracked per row block (phi_r = ||z_r||^2 / M_R) and
    combined through the base-matrix weights into a per-column-block effective
    noise variance for the denoiser.  The Onsager term scales each row block
    by its own interference-to-residual ratio.  Halts when the largest
    relative change across the per-block variances drops below halt_tol.
    """
    config = config or AmpConfig()
    if config.tau_mode != "online":
        raise ValueError("coupled decoding supports only the online tau estimate")
    base = sc_params.base
    if (operator.M_R, operator.M_C) != (sc_params.M_R, sc_params.M_C) or (
        operator.n != sc_params.n
    ):
        raise ValueError("operator geometry does not match sc_params")
    L_R, L_C = base.L_R, base.L_C
    M_R = sc_params.M_R
    M = sc_params.M
    L = sc_params.L

    variances = base.weights / L  # per-entry variance of each block
    sec_per_block = sc_params.sections_per_block
    col_of_section = np.repeat(np.arange(L_C), sec_per_block)
    amplitudes = np.ones(L)

    pin_mask, pin_pos = _pinned_arrays(config.pinned, L, M)
    free = ~pin_mask

    beta = np.zeros((L, M))
    if pin_mask.any():
        idx = np.flatnonzero(pin_mask)
        beta[idx, pin_pos[idx] - 1] = 1.0

    trace = AmpTrace(beta_history=[] if config.record_beta else None)
    z = None
    phi = None
    tau_prev = None
    for t in range(config.t_max):
        flat = beta.ravel()
        if z is None:
            z = y - operator.forward(flat)
        else:
            undecoded = sec_per_block - (beta**2).sum(axis=1).reshape(L_C, -1).sum(axis=1)
            gamma = variances @ undecoded  # (L_R,)
            z = y - operator.forward(flat) + np.repeat(gamma / phi, M_R) * z
        zb = z.reshape(L_R, M_R)
        phi = np.maximum(
            (zb.real**2 + zb.imag**2).sum(axis=1) / M_R, TAU2_FLOOR
        )
        tau_c = 1.0 / (M_R * (variances.T @ (1.0 / phi)))  # (L_C,)
        if not (np.isfinite(phi).all() and np.isfinite(tau_c).all()):
            raise DivergenceError(t)

        tau_sec = tau_c[col_of_section]
        s = flat + np.repeat(tau_sec, M) * operator.adjoint(z / np.repeat(phi, M_R))
        if free.any():
            beta[free] = denoise_sections(
                s.reshape(L, M)[free], amplitudes[free], tau_sec[free]
            )
        if not np.isfinite(beta).all():
            raise DivergenceError(t)

        trace.tau2.append(tau_c.copy())
        trace.decisions.append(1 + np.argmax(beta, axis=1))
        if config.record_beta:
            trace.beta_history.append(beta.copy().ravel())
        trace.iterations = t + 1
        if t >= 1 and np.max(np.abs(tau_c - tau_prev) / tau_c) < config.halt_tol:
            trace.converged = True
            tau_prev = tau_c
            break
        tau_prev = tau_c

    trace.beta = beta.ravel()
    return trace
