"""Config-driven Monte-Carlo experiment runner.

Each (SNR point, trial) pair gets its own deterministically derived seed, so a
result is reproducible from the config alone and independent of the level of
parallelism.  Early stopping truncates the trial sequence at the first index
where the accumulated error events reach the target, evaluated in trial order,
which keeps the truncation deterministic as well.
"""

import hashlib
import json
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, asdict

import numpy as np
from scipy.stats import beta as beta_dist

from . import __version__
from .amp import AmpConfig, amp_decode, hard_decision
from .coupled import ScParams, base_matrix, sc_build_message, sc_decode
from .operators import (
    circulant_operator,
    dft_block_operator,
    gaussian_operator,
    sc_operator,
)
from .outercode import (
    CrcSpec,
    GroupingLayout,
    ListConfig,
    crc_group_encode,
    decode_pipeline,
    error_metrics,
)
from .params import SparcParams, awgn_channel, build_message, positions_to_bits
from .power import flat_allocation, iterative_allocation

__all__ = [
    "ExperimentConfig",
    "SimPoint",
    "SimResult",
    "snr_to_sigma2",
    "sigma2_to_snr_db",
    "binomial_ci",
    "run_experiment",
    "write_csv",
    "CSV_HEADER",
]

THREADS_ENV = "CSPARC_THREADS"

CSV_HEADER = (
    "snr_b_db,trials,bit_errors,ber,ci_low,ci_high,sec_errors,secer,"
    "detected,undetected,mean_iters,seconds"
)


def snr_to_sigma2(snr_b_db, P, R):
    """Noise variance for a per-bit SNR in dB: sigma2 = P / (R * 10^(dB/10))."""
    if P <= 0 or R <= 0:
        raise ValueError(f"need P, R > 0, got P={P}, R={R}")
    return P / (R * 10.0 ** (snr_b_db / 10.0))


def sigma2_to_snr_db(sigma2, P, R):
    """Inverse of :func:`snr_to_sigma2`."""
    return 10.0 * math.log10(P / (sigma2 * R))


def binomial_ci(errors, total, confidence=0.95):
    """Clopper-Pearson interval for an error count.

    Zero-error points get a one-sided interval (lower bound 0, upper bound at
    the full confidence level) since they only witness an upper bound.
    """
    if total == 0:
        return 0.0, 1.0
    if errors == 0:
        return 0.0, float(1.0 - (1.0 - confidence) ** (1.0 / total))
    alpha = 1.0 - confidence
    low = float(beta_dist.ppf(alpha / 2.0, errors, total - errors + 1))
    if errors == total:
        high = 1.0
    else:
        high = float(beta_dist.ppf(1.0 - alpha / 2.0, errors + 1, total - errors))
    return low, high


_ALLOWED_KEYS = {
    "L", "M", "R", "n", "P", "allocation", "matrix", "snr_b_db", "outer",
    "amp_again", "sc", "trials", "target_errors", "base_seed", "amp",
}
_ALLOWED_ALLOC = {"type", "B", "R_PA"}
_ALLOWED_MATRIX = {"family", "seed"}
_ALLOWED_OUTER = {"K", "koopman", "S", "placement"}
_ALLOWED_SC = {"w", "Lambda"}
_ALLOWED_AMP = {"t_max", "halt_tol"}


def _reject_unknown(mapping, allowed, where):
    unknown = set(mapping) - allowed
    if unknown:
        raise ValueError(f"unknown {where} keys: {sorted(unknown)}")


@dataclass
class ExperimentConfig:
    """One experiment: a code, a channel sweep, and a trial budget.

    R is the information rate (information bits per complex channel use);
    with an outer code the transmitted sparse code runs at the higher inner
    rate, and SNR_b conversion always uses the information rate.  ``n`` may be
    given instead of R to pin the block length directly.
    """

    L: int
    M: int
    snr_b_db: tuple
    R: float = None
    n: int = None
    P: float = 1.0
    allocation: dict = field(default_factory=lambda: {"type": "flat"})
    matrix: dict = field(default_factory=lambda: {"family": "dft", "seed": 0})
    outer: dict = None
    amp_again: bool = False
    sc: dict = None
    trials: int = 100
    target_errors: int = 100
    base_seed: int = 0
    amp: dict = field(default_factory=dict)

    def __post_init__(self):
        if (self.R is None) == (self.n is None):
            raise ValueError("give exactly one of R or n")
        if self.trials < 1:
            raise ValueError(f"need trials >= 1, got {self.trials}")
        self.snr_b_db = tuple(float(v) for v in self.snr_b_db)
        _reject_unknown(self.allocation, _ALLOWED_ALLOC, "allocation")
        _reject_unknown(self.matrix, _ALLOWED_MATRIX, "matrix")
        _reject_unknown(self.amp, _ALLOWED_AMP, "amp")
        if self.outer is not None:
            _reject_unknown(self.outer, _ALLOWED_OUTER, "outer")
        if self.sc is not None:
            _reject_unknown(self.sc, _ALLOWED_SC, "sc")
            if self.matrix.get("family", "sc") != "sc":
                raise ValueError("spatially coupled runs use the 'sc' matrix family")

    @classmethod
    def from_dict(cls, d):
        _reject_unknown(d, _ALLOWED_KEYS, "config")
        return cls(**d)

    @classmethod
    def from_json(cls, path):
        with open(path) as f:
            return cls.from_dict(json.load(f))

    def to_dict(self):
        d = asdict(self)
        d["snr_b_db"] = list(self.snr_b_db)
        return d


@dataclass
class SimPoint:
    snr_b_db: float
    trials: int
    bit_errors: int
    ber: float
    ci_low: float
    ci_high: float
    sec_errors: int
    secer: float
    detected: int
    undetected: int
    mean_iters: float
    seconds: float


@dataclass
class SimResult:
    points: list
    config: dict
    config_hash: str
    base_seed: int
    version: str
    inner_rate: float
    info_rate: float

    def to_csv(self):
        lines = [CSV_HEADER]
        for p in self.points:
            lines.append(
                f"{p.snr_b_db:g},{p.trials},{p.bit_errors},{p.ber:.6g},"
                f"{p.ci_low:.6g},{p.ci_high:.6g},{p.sec_errors},{p.secer:.6g},"
                f"{p.detected},{p.undetected},{p.mean_iters:.4g},{p.seconds:.3f}"
            )
        return "\n".join(lines) + "\n"


def write_csv(result, path):
    with open(path, "w") as f:
        f.write(result.to_csv())


def _thread_count():
    env = os.environ.get(THREADS_ENV)
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


@dataclass
class _Setup:
    """Everything that is fixed across SNR points."""

    config: ExperimentConfig
    layout: GroupingLayout
    crc: CrcSpec
    list_config: ListConfig
    operator: object
    sc_params: ScParams
    n: int
    L_tx: int
    amp_kwargs: dict

    @property
    def info_rate(self):
        return self.config.L * round(math.log2(self.config.M)) / self.n

    @property
    def inner_rate(self):
        return self.L_tx * round(math.log2(self.config.M)) / self.n


def _build_setup(config):
    L, M, P = config.L, config.M, config.P
    log2M = round(math.log2(M))

    layout = crc = list_config = None
    L_tx = L
    if config.outer is not None:
        koopman = config.outer["koopman"]
        if isinstance(koopman, str):
            koopman = int(koopman, 16)
        crc = CrcSpec(koopman=koopman, K=config.outer["K"])
        layout = GroupingLayout(
            L=L, K=crc.K, r=crc.r, log2M=log2M,
            placement=config.outer.get("placement", "middle" if config.sc else "end"),
        )
        list_config = ListConfig(S=config.outer.get("S", 64))
        L_tx = layout.L_total

    n = config.n if config.n is not None else math.ceil(L * log2M / config.R)

    family = config.matrix.get("family", "dft")
    seed = config.matrix.get("seed", 0)
    sc_params = None
    if config.sc is not None:
        base = base_matrix(config.sc["w"], config.sc["Lambda"], P)
        sc_params = ScParams.for_code(base, L_tx, M, n)
        n = sc_params.n
        operator = sc_operator(base, sc_params.M_R, sc_params.M_C, seed, M=M)
    else:
        if family == "circulant":
            n = M * math.ceil(n / M)
        params = SparcParams(L=L_tx, M=M, n=n, P=P, sigma2=1.0)
        if family == "gaussian":
            operator = gaussian_operator(params, seed)
        elif family == "dft":
            operator = dft_block_operator(params, seed)
        elif family == "circulant":
            operator = circulant_operator(params, seed)
        else:
            raise ValueError(f"unknown matrix family {family!r}")

    return _Setup(
        config=config, layout=layout, crc=crc, list_config=list_config,
        operator=operator, sc_params=sc_params, n=n, L_tx=L_tx,
        amp_kwargs=dict(config.amp),
    )


def _allocation(config, L_tx, sigma2):
    alloc_cfg = config.allocation
    kind = alloc_cfg.get("type", "flat")
    if kind == "flat":
        return flat_allocation(L_tx, config.P)
    if kind == "iterative":
        return iterative_allocation(
            L_tx, alloc_cfg["B"], config.P, sigma2, alloc_cfg["R_PA"]
        )
    raise ValueError(f"unknown allocation type {kind!r}")


def _run_trial(setup, alloc, sigma2, snr_idx, trial):
    """One encode/transmit/decode trial; returns per-trial counts."""
    config = setup.config
    L, M = config.L, config.M
    log2M = round(math.log2(M))
    rng = np.random.default_rng(
        np.random.SeedSequence(entropy=config.base_seed, spawn_key=(snr_idx, trial))
    )
    bits = rng.integers(0, 2, size=L * log2M)

    if setup.layout is not None:
        stream = crc_group_encode(bits, setup.layout, setup.crc)
    else:
        stream = bits

    if setup.sc_params is not None:
        message = sc_build_message(stream, setup.L_tx, M)
    else:
        message = build_message(
            stream, alloc,
            SparcParams(L=setup.L_tx, M=M, n=setup.n, P=config.P, sigma2=sigma2),
        )
    y = awgn_channel(setup.operator.forward(message.dense()), sigma2, rng)

    amp_config = AmpConfig(**setup.amp_kwargs)
    if setup.layout is not None:
        res = decode_pipeline(
            y, setup.operator, alloc, sigma2, setup.layout, setup.crc,
            list_config=setup.list_config, amp_config=amp_config,
            amp_again=config.amp_again,
        )
        m = error_metrics(res.bits, bits, setup.layout, res.statuses)
        iters = sum(t.iterations for t in res.traces)
        return {
            "bit_errors": m.bit_errors, "sec_errors": m.sec_errors,
            "detected": m.detected, "undetected": m.undetected, "iters": iters,
        }

    if setup.sc_params is not None:
        trace = sc_decode(y, setup.sc_params, setup.operator, sigma2, amp_config)
    else:
        trace = amp_decode(y, setup.operator, alloc, sigma2, amp_config)
    decoded = positions_to_bits(hard_decision(trace.beta, M).positions, M)
    diff = decoded != np.asarray(stream)
    return {
        "bit_errors": int(diff.sum()),
        "sec_errors": int(diff.reshape(setup.L_tx, log2M).any(axis=1).sum()),
        "detected": 0, "undetected": 0, "iters": trace.iterations,
    }


def run_experiment(config):
    """Run the full sweep described by an ExperimentConfig.

    Trials are embarrassingly parallel (thread count from the CSPARC_THREADS
    environment variable); aggregation and early stopping depend only on the
    per-trial results ordered by trial index, so the outcome is identical at
    any parallelism level.
    """
    setup = _build_setup(config)
    threads = _thread_count()
    points = []
    for snr_idx, db in enumerate(config.snr_b_db):
        started = time.perf_counter()
        sigma2 = snr_to_sigma2(db, config.P, setup.info_rate)
        alloc = None
        if setup.sc_params is None:
            alloc = _allocation(config, setup.L_tx, sigma2)

        results = {}
        stop_at = config.trials

        def run(t):
            return t, _run_trial(setup, alloc, sigma2, snr_idx, t)

        next_trial = 0
        while next_trial < stop_at:
            wave = range(next_trial, min(next_trial + max(threads, 1), stop_at))
            if threads > 1:
                with ThreadPoolExecutor(max_workers=threads) as pool:
                    for t, out in pool.map(run, wave):
                        results[t] = out
            else:
                for t in wave:
                    results[t] = run(t)[1]
            next_trial = wave.stop
            if config.target_errors is not None:
                cum = 0
                for t in range(next_trial):
                    cum += results[t]["bit_errors"]
                    if cum >= config.target_errors:
                        stop_at = min(stop_at, t + 1)
                        break

        included = [results[t] for t in range(stop_at)]
        trials = len(included)
        bit_errors = sum(r["bit_errors"] for r in included)
        sec_errors = sum(r["sec_errors"] for r in included)
        detected = sum(r["detected"] for r in included)
        undetected = sum(r["undetected"] for r in included)
        iters = sum(r["iters"] for r in included)
        total_bits = trials * config.L * round(math.log2(config.M))
        total_secs = trials * config.L
        ci_low, ci_high = binomial_ci(bit_errors, total_bits)
        points.append(
            SimPoint(
                snr_b_db=db, trials=trials, bit_errors=bit_errors,
                ber=bit_errors / total_bits, ci_low=ci_low, ci_high=ci_high,
                sec_errors=sec_errors, secer=sec_errors / total_secs,
                detected=detected, undetected=undetected,
                mean_iters=iters / trials,
                seconds=time.perf_counter() - started,
            )
        )

    config_dict = config.to_dict()
    config_hash = hashlib.sha256(
        json.dumps(config_dict, sort_keys=True).encode()
    ).hexdigest()
    return SimResult(
        points=points, config=config_dict, config_hash=config_hash,
        base_seed=config.base_seed, version=__version__,
        inner_rate=setup.inner_rate, info_rate=setup.info_rate,
    )
