"""Approximate message passing decoder for the complex AWGN channel.

One iteration forms the residual with an Onsager correction, then applies the
Bayes-optimal section-wise denoiser to the effective observation
s = beta + A*z, whose real parts behave like the true section plus white
Gaussian noise of variance tau^2.  tau^2 is tracked online as ||z||^2 / n by
default, or follows a precomputed state-evolution schedule.
"""

from dataclasses import dataclass, field

import numpy as np

from .params import MessageVector

__all__ = [
    "AmpConfig",
    "AmpTrace",
    "DivergenceError",
    "denoise_section",
    "denoise_sections",
    "amp_step",
    "amp_decode",
    "hard_decision",
]

# Online tau^2 is floored here so a perfectly explained residual (possible at
# sigma2 = 0) cannot divide the denoiser exponents by zero.
TAU2_FLOOR = 1e-30


class DivergenceError(RuntimeError):
    """AMP produced non-finite values; carries the failing iteration index."""

    def __init__(self, iteration):
        super().__init__(f"AMP diverged (non-finite values) at iteration {iteration}")
        self.iteration = iteration


@dataclass
class AmpConfig:
    """Decoder knobs.

    t_max        : maximum number of iterations
    halt_tol     : stop once |tau2_t - tau2_{t-1}| / tau2_t falls below this
    tau_mode     : "online" (tau2 = ||z||^2/n) or "se" (precomputed schedule)
    tau2_schedule: required for tau_mode="se"; reuses its last entry when the
                   iteration count exceeds the schedule length
    pinned       : optional iterable of (section, position) pairs fixed during
                   decoding; sections are 0-based, positions 1-based
    record_beta  : keep a per-iteration snapshot of beta (debug only)
    """

    t_max: int = 100
    halt_tol: float = 1e-5
    tau_mode: str = "online"
    tau2_schedule: np.ndarray = None
    pinned: tuple = None
    record_beta: bool = False

    def __post_init__(self):
        if self.t_max < 1:
            raise ValueError(f"need t_max >= 1, got {self.t_max}")
        if not self.halt_tol > 0:
            raise ValueError(f"need halt_tol > 0, got {self.halt_tol}")
        if self.tau_mode not in ("online", "se"):
            raise ValueError(f"tau_mode must be 'online' or 'se', got {self.tau_mode!r}")
        if self.tau_mode == "se" and self.tau2_schedule is None:
            raise ValueError("tau_mode='se' needs a tau2_schedule")


@dataclass
class AmpTrace:
    """Record of one decode run."""

    tau2: list = field(default_factory=list)
    decisions: list = field(default_factory=list)  # 1-based positions per iteration
    beta: np.ndarray = None  # final dense estimate, length M*L
    iterations: int = 0
    converged: bool = False
    beta_history: list = None


def denoise_sections(s, amplitudes, tau2):
    """Posterior-mean denoiser applied to all sections at once.

    s          : (L, M) complex effective observations
    amplitudes : (L,) nonzero values of each section
    tau2       : effective noise variance, scalar or per-section (L,)

    Row l is amplitudes[l] * softmax(2*Re(s)*amplitudes[l]/tau2), the
    conditional mean of the section given s; each row sums to amplitudes[l].
    Exponents are shifted by the row maximum before exponentiation, so
    arbitrarily large inputs stay finite.
    """
    amplitudes = np.asarray(amplitudes, dtype=float)
    coeff = 2.0 * amplitudes / tau2  # (L,) whether tau2 is scalar or per-section
    expo = s.real * coeff[:, None]
    expo -= expo.max(axis=1, keepdims=True)
    w = np.exp(expo)
    w *= (amplitudes / w.sum(axis=1))[:, None]
    return w


def denoise_section(s, P_l, n, tau2):
    """Single-section denoiser: posterior mean of a section with nonzero value
    sqrt(n*P_l) observed in complex Gaussian noise of variance tau2."""
    if not tau2 > 0:
        raise ValueError(f"need tau2 > 0, got {tau2}")
    s = np.asarray(s, dtype=complex)
    c = np.sqrt(n * P_l)
    return denoise_sections(s[None, :], np.array([c]), tau2)[0]


def _pinned_arrays(pinned, L, M):
    """Split (section, position) pins into a boolean mask and a position map."""
    mask = np.zeros(L, dtype=bool)
    positions = np.zeros(L, dtype=np.int64)
    if pinned:
        for section, position in pinned:
            if not 0 <= section < L:
                raise ValueError(f"pinned section {section} out of range 0..{L - 1}")
            if not 1 <= position <= M:
                raise ValueError(f"pinned position {position} out of range 1..{M}")
            mask[section] = True
            positions[section] = position
    return mask, positions


def amp_step(state, y, operator, alloc, tau2_t=None):
    """One AMP iteration.

    state  : (beta, z_prev, tau2_prev); z_prev/tau2_prev are None at t = 0,
             where the Onsager term is defined to vanish
    tau2_t : denoiser noise variance; None selects the online ||z||^2/n

    Returns (beta_next, z, tau2_used).
    """
    beta, z_prev, tau2_prev = state
    M = operator.M
    L = operator.ml // M
    n = operator.n
    if z_prev is None:
        z = y - operator.forward(beta)
    else:
        onsager = (alloc.P - (beta @ beta) / n) / tau2_prev
        z = y - operator.forward(beta) + onsager * z_prev
    if tau2_t is None:
        tau2_t = max((z.real @ z.real + z.imag @ z.imag) / n, TAU2_FLOOR)
    s = beta + operator.adjoint(z)
    amplitudes = np.sqrt(n * alloc.p)
    beta_next = denoise_sections(s.reshape(L, M), amplitudes, tau2_t).ravel()
    return beta_next, z, tau2_t


def amp_decode(y, operator, alloc, sigma2, config=None):
    """Run AMP to convergence or t_max iterations.

    y       : channel output, length n
    operator: design operator (forward/adjoint)
    alloc   : PowerAllocation over the transmitted sections
    sigma2  : channel noise variance (recorded; the online iteration does not
              consume it, a state-evolution schedule computed from it does)
    config  : AmpConfig

    Pinned sections keep a one-hot beta at their pinned position: they feed
    the residual like decoded-and-trusted sections but are never re-estimated.
    """
    config = config or AmpConfig()
    M = operator.M
    L = operator.ml // M
    n = operator.n
    if alloc.p.size != L:
        raise ValueError(f"allocation covers {alloc.p.size} sections, operator has {L}")
    amplitudes = np.sqrt(n * alloc.p)

    schedule = None
    if config.tau_mode == "se":
        schedule = np.asarray(config.tau2_schedule, dtype=float)

    pin_mask, pin_pos = _pinned_arrays(config.pinned, L, M)
    free = ~pin_mask

    beta = np.zeros((L, M))
    if pin_mask.any():
        idx = np.flatnonzero(pin_mask)
        beta[idx, pin_pos[idx] - 1] = amplitudes[idx]

    trace = AmpTrace(beta_history=[] if config.record_beta else None)
    z = None
    tau2_prev = None
    for t in range(config.t_max):
        flat = beta.ravel()
        if z is None:
            z = y - operator.forward(flat)
        else:
            onsager = (alloc.P - (flat @ flat) / n) / tau2_prev
            z = y - operator.forward(flat) + onsager * z
        if config.tau_mode == "online":
            tau2 = max((z.real @ z.real + z.imag @ z.imag) / n, TAU2_FLOOR)
        else:
            tau2 = schedule[min(t, schedule.size - 1)]
        if not np.isfinite(tau2):
            raise DivergenceError(t)

        s = flat + operator.adjoint(z)
        if free.any():
            beta[free] = denoise_sections(
                s.reshape(L, M)[free], amplitudes[free], tau2
            )
        if not np.isfinite(beta).all():
            raise DivergenceError(t)

        trace.tau2.append(tau2)
        trace.decisions.append(1 + np.argmax(beta, axis=1))
        if config.record_beta:
            trace.beta_history.append(beta.copy().ravel())
        trace.iterations = t + 1
        if t >= 1 and abs(tau2 - tau2_prev) / tau2 < config.halt_tol:
            trace.converged = True
            tau2_prev = tau2
            break
        tau2_prev = tau2

    trace.beta = beta.ravel()
    return trace


def hard_decision(beta, M, values=None):
    """Per-section argmax of a dense beta estimate, ties toward the smaller
    position.  ``values`` fills the MessageVector magnitudes (defaults to 1)."""
    beta = np.asarray(beta)
    if beta.size % M != 0:
        raise ValueError(f"beta length {beta.size} is not a multiple of M = {M}")
    L = beta.size // M
    positions = 1 + np.argmax(beta.reshape(L, M), axis=1)
    if values is None:
        values = np.ones(L)
    return MessageVector(positions=positions, values=values, M=M)
