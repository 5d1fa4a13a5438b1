"""Deterministic prediction of AMP progress.

The effective noise variance follows the recursion
tau2_0 = sigma2 + P, tau2_{t+1} = sigma2 + P * (1 - x(tau_t)), where x(tau)
is the expected power-weighted fraction of sections decoded at variance
tau^2.  x is estimated by Monte Carlo at finite M; the large-M limit replaces
it with a per-section power threshold and gives a fast decodability check.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .power import asymptotic_x

__all__ = ["SeSchedule", "se_x", "se_trajectory", "predict_decodable"]

LN2 = math.log(2.0)

# Chunk Monte-Carlo sampling so large M never materializes samples x M at
# once; chunks are drawn in a fixed order, so results are seed-deterministic.
MC_CHUNK = 1 << 18


@dataclass
class SeSchedule:
    """One state-evolution trajectory."""

    tau2: np.ndarray
    x: np.ndarray
    fixed_point: bool
    mc_samples: int


def _x_expectation(a, M, mc_samples, rng):
    """Monte-Carlo mean of the decoded fraction for one section.

    a = sqrt(n*P_l)/tau.  Each sample draws the real parts of M unit complex
    Gaussians (variance 1/2 each); the sample value is
    1 / (1 + sum_{j>=2} exp(2a*(Re U_j - Re U_1) - 2a^2)), accumulated in a
    log-domain-safe form.  Returns (mean, standard error).
    """
    if M == 1:
        return 1.0, 0.0
    total = 0.0
    total_sq = 0.0
    done = 0
    scale = math.sqrt(0.5)
    while done < mc_samples:
        count = min(mc_samples - done, max(1, MC_CHUNK // M))
        u = rng.normal(scale=scale, size=(count, M))
        # log of each competitor term relative to the signal term
        rel = 2.0 * a * (u[:, 1:] - u[:, :1]) - 2.0 * a * a
        np.clip(rel, -745.0, 709.0, out=rel)  # exp() under/overflow guards
        ratio = 1.0 / (1.0 + np.exp(rel).sum(axis=1))
        total += ratio.sum()
        total_sq += (ratio * ratio).sum()
        done += count
    mean = total / mc_samples
    var = max(total_sq / mc_samples - mean * mean, 0.0)
    return mean, math.sqrt(var / mc_samples)


def se_x(alloc, tau, M, n, L, mc_samples=10_000, seed=0):
    """Monte-Carlo estimate of the decoded-power fraction x(tau).

    Returns (x, standard_error).  Sections sharing the same power share one
    expectation (a flat allocation costs a single estimate); estimates are
    deterministic under the seed.
    """
    if not tau > 0:
        raise ValueError(f"need tau > 0, got {tau}")
    if mc_samples < 1:
        raise ValueError(f"need mc_samples >= 1, got {mc_samples}")
    powers, counts = np.unique(alloc.p, return_counts=True)
    means = np.empty(powers.size)
    errs = np.empty(powers.size)
    for i, p_l in enumerate(powers):
        rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(i,)))
        a = math.sqrt(n * p_l) / tau
        means[i], errs[i] = _x_expectation(a, M, mc_samples, rng)
    weight = powers * counts / alloc.P  # power-weighted, grouped by value
    x = float(weight @ means)
    stderr = float(math.sqrt((weight * errs) @ (weight * errs)))
    return x, stderr


def se_trajectory(
    alloc, sigma2, P, M, n, L,
    max_iters=100, mc_samples=10_000, seed=0, tol=1e-6,
):
    """Iterate the variance recursion to a fixed point or max_iters.

    Starts at tau2 = sigma2 + P and applies
    tau2 <- sigma2 + P*(1 - x(tau)); flags a fixed point when the relative
    change drops below tol.
    """
    tau2 = [sigma2 + P]
    xs = []
    fixed = False
    for _ in range(max_iters):
        x, _ = se_x(alloc, math.sqrt(tau2[-1]), M, n, L, mc_samples, seed)
        xs.append(x)
        nxt = sigma2 + P * (1.0 - x)
        if abs(nxt - tau2[-1]) / nxt < tol:
            tau2.append(nxt)
            fixed = True
            break
        tau2.append(nxt)
    return SeSchedule(
        tau2=np.array(tau2), x=np.array(xs), fixed_point=fixed, mc_samples=mc_samples
    )


def predict_decodable(alloc, sigma2, P, R, max_iters=1000, tol=1e-9):
    """Fast large-M decodability check for a power allocation.

    Runs the variance recursion with the asymptotic threshold fraction in
    place of the Monte-Carlo expectation; decodable means the fraction reaches
    1, driving the effective variance down to sigma2.  Returns
    (decodable, final_x).
    """
    tau2 = sigma2 + P
    x = 0.0
    for _ in range(max_iters):
        x = asymptotic_x(alloc, tau2, R)
        nxt = sigma2 + P * (1.0 - x)
        if x >= 1.0 - 1e-12:
            return True, x
        if abs(nxt - tau2) / nxt < tol:
            break
        tau2 = nxt
    return False, x
