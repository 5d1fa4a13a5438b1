"""Power allocation across sections and the asymptotic decodability fraction.

The iterative block scheme walks the sections in blocks, giving each block the
minimum per-section power needed for its sections to decode in the current
iteration (threshold R_PA * tau^2 * ln2 / L), until the remaining budget per
section exceeds that minimum, at which point the remainder is spread evenly.
R_PA = 0 therefore yields a flat allocation.
"""

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "PowerAllocation",
    "InfeasibleAllocationError",
    "flat_allocation",
    "iterative_allocation",
    "asymptotic_x",
    "nu",
]

LN2 = math.log(2.0)

# Relative slack on the decodability threshold: sections placed exactly on the
# threshold by the iterative scheme must count as decodable despite rounding.
THRESHOLD_SLACK = 1e-9


class InfeasibleAllocationError(ValueError):
    """R_PA too large for (P, sigma2): the budget runs out before termination."""


@dataclass(frozen=True, eq=False)
class PowerAllocation:
    """Per-section powers P_l, summing to the average power P, non-increasing."""

    p: np.ndarray
    P: float
    B: int
    R_PA: float

    def __post_init__(self):
        p = np.asarray(self.p, dtype=np.float64)
        object.__setattr__(self, "p", p)
        if p.ndim != 1 or p.size == 0:
            raise ValueError("allocation must be a nonempty 1-D vector")
        if np.any(p <= 0):
            raise ValueError("section powers must be positive")
        if abs(p.sum() - self.P) > 1e-12 * self.P:
            raise ValueError(f"section powers sum to {p.sum()!r}, expected {self.P!r}")
        if np.any(np.diff(p) > 1e-15 * self.P):
            raise ValueError("section powers must be non-increasing")

    @property
    def L(self):
        return self.p.size


def flat_allocation(L, P):
    """Equal power P/L in every section."""
    return PowerAllocation(p=np.full(L, P / L), P=P, B=1, R_PA=0.0)


def iterative_allocation(L, B, P, sigma2, R_PA):
    """Iterative block power allocation.

    L     : number of sections
    B     : number of blocks (sections split into B blocks of L//B, with any
            remainder forming a final short block)
    P     : average codeword power to allocate fully
    sigma2: channel noise variance
    R_PA  : tuning rate inside the per-block threshold; 0 gives a flat split

    Walks blocks in order.  If the average remaining power per section is at
    least the minimum required power R_PA*tau^2*ln2/L, spreads the remainder
    evenly over all remaining sections and stops; otherwise assigns the
    minimum to this block and lowers tau^2 = sigma2 + (P - allocated so far).
    """
    if L < 1 or B < 1 or B > L:
        raise ValueError(f"need 1 <= B <= L, got L={L}, B={B}")
    if R_PA < 0:
        raise ValueError(f"need R_PA >= 0, got {R_PA}")

    sizes = [L // B] * B
    if L % B:
        sizes.append(L % B)

    p = np.empty(L)
    allocated = 0.0
    start = 0
    for b, size in enumerate(sizes):
        remaining_sections = L - start
        remaining_power = P - allocated
        tau2 = sigma2 + remaining_power
        p_min = R_PA * tau2 * LN2 / L
        p_avg = remaining_power / remaining_sections
        if p_avg >= p_min:
            p[start:] = p_avg
            break
        if p_min * size > remaining_power:
            raise InfeasibleAllocationError(
                f"block {b + 1}: minimum power {p_min:.6g} x {size} sections "
                f"exceeds remaining budget {remaining_power:.6g}; lower R_PA"
            )
        p[start : start + size] = p_min
        allocated += p_min * size
        start += size

    if allocated > 0:
        # absorb float residue so the budget is met to machine precision;
        # an immediate flat spread is already exact and stays bit-flat
        p *= P / p.sum()
    return PowerAllocation(p=p, P=P, B=B, R_PA=R_PA)


def asymptotic_x(alloc, tau2, R):
    """Large-M limit of the decoded-power fraction x(tau).

    Power-weighted fraction of sections whose L*P_l clears the threshold
    R*tau^2*ln2.  Sections within THRESHOLD_SLACK (relative) of the threshold
    count as clearing it, so allocations designed to sit exactly on the
    threshold are classified as decodable.
    """
    if tau2 <= 0:
        raise ValueError(f"need tau2 > 0, got {tau2}")
    p = alloc.p
    threshold = R * tau2 * LN2
    decodable = p.size * p >= threshold * (1.0 - THRESHOLD_SLACK)
    return float(p[decodable].sum() / alloc.P)


def nu(alloc, ell, tau2, R):
    """Per-section decodability margin 2*L*P_l / (R*tau^2*ln2) for the 1-based
    section index ell; values above 2 mark sections counted by asymptotic_x."""
    if tau2 <= 0:
        raise ValueError(f"need tau2 > 0, got {tau2}")
    if not 1 <= ell <= alloc.L:
        raise ValueError(f"section index {ell} out of range 1..{alloc.L}")
    return 2.0 * alloc.L * alloc.p[ell - 1] / (R * tau2 * LN2)
