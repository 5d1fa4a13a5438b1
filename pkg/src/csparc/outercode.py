"""CRC concatenation and list decoding.

Source sections are organized into interleaved groups; within a group, the
bits sharing one intra-chunk index (a "bit lane") across the K member sections
form one CRC codeword, producing r check sections per group.  After AMP, each
section's normalized estimate is converted to per-lane bit posteriors, each
codeword is beam-searched with CRC validation, and optionally AMP runs again
with the fully validated sections pinned before the failed codewords are
re-decoded.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .amp import AmpConfig, amp_decode
from .coupled import ScParams, sc_decode
from .operators import CoupledOperator

__all__ = [
    "CrcSpec",
    "GroupingLayout",
    "ListConfig",
    "ListDecodeResult",
    "PipelineResult",
    "ErrorMetrics",
    "crc_compute",
    "crc_remainder",
    "crc_check",
    "crc_group_encode",
    "strip_check_sections",
    "section_to_bit_posteriors",
    "bit_posteriors",
    "list_decode_codeword",
    "decode_pipeline",
    "error_metrics",
]

VALID = "valid"
DETECTED = "detected-error"

# Bit posteriors are floored here before taking logs in the path metric.
PROB_FLOOR = 1e-12


@dataclass(frozen=True)
class CrcSpec:
    """CRC generator in Koopman form plus the per-codeword info length K.

    Koopman notation encodes the generator with the implicit +1 constant term
    dropped: the full polynomial is (koopman << 1) | 1 and its degree r equals
    the bit length of the Koopman value (0x97 gives the degree-8 generator
    x^8+x^5+x^3+x^2+x+1).
    """

    koopman: int
    K: int

    def __post_init__(self):
        if self.koopman < 1:
            raise ValueError(f"need a nonzero Koopman polynomial, got {self.koopman}")
        if self.K < 1:
            raise ValueError(f"need K >= 1, got {self.K}")

    @property
    def r(self):
        return self.koopman.bit_length()

    @property
    def poly(self):
        """Full generator polynomial as an (r+1)-bit integer, MSB = x^r."""
        return (self.koopman << 1) | 1

    @property
    def poly_bits(self):
        """Binary coefficient vector of the generator, highest order first."""
        return np.array([(self.poly >> (self.r - i)) & 1 for i in range(self.r + 1)])


def crc_remainder(bits, spec):
    """Remainder of the bit string (highest-order coefficient first) modulo
    the generator, as an r-bit integer."""
    top = 1 << spec.r
    poly = spec.poly
    reg = 0
    for b in bits:
        reg = (reg << 1) | int(b)
        if reg & top:
            reg ^= poly
    return reg


def crc_compute(bits, spec):
    """Systematic check bits for a message: the remainder of message * x^r,
    returned highest order first.  Appending them yields a codeword divisible
    by the generator."""
    reg = crc_remainder(bits, spec)
    top = 1 << spec.r
    poly = spec.poly
    for _ in range(spec.r):
        reg <<= 1
        if reg & top:
            reg ^= poly
    return np.array([(reg >> (spec.r - 1 - i)) & 1 for i in range(spec.r)], dtype=np.int64)


def crc_check(bits, spec):
    """True when the bit string is divisible by the generator."""
    return crc_remainder(bits, spec) == 0


@dataclass(frozen=True, eq=False)
class GroupingLayout:
    """Assignment of sections to CRC groups and of check sections to slots.

    Info sections are interleaved over the groups (section j, 0-based, sits in
    group j mod n_main for the evenly covered prefix), so consecutive section
    errors land in different codewords; a remainder of L mod K sections forms
    its own trailing group.  Check sections either follow the message
    ("end" placement) or sit as one run at its midpoint ("middle", used for
    spatially coupled codes whose decoding wave reaches the middle last).
    """

    L: int
    K: int
    r: int
    log2M: int
    placement: str
    groups: tuple = field(init=False)        # per group: logical info ids
    check_ids: tuple = field(init=False)     # per group: logical check ids
    info_physical: np.ndarray = field(init=False)
    check_physical: np.ndarray = field(init=False)

    def __post_init__(self):
        if self.placement not in ("end", "middle"):
            raise ValueError(f"placement must be 'end' or 'middle', got {self.placement!r}")
        if not 1 <= self.K <= self.L:
            raise ValueError(f"need 1 <= K <= L, got K={self.K}, L={self.L}")
        n_main = self.L // self.K
        rem = self.L % self.K
        covered = n_main * self.K
        groups = [np.arange(j, covered, n_main) for j in range(n_main)]
        check_ids = [j + n_main * np.arange(self.r) for j in range(n_main)]
        if rem:
            groups.append(np.arange(covered, self.L))
            check_ids.append(n_main * self.r + np.arange(self.r))
        object.__setattr__(self, "groups", tuple(groups))
        object.__setattr__(self, "check_ids", tuple(check_ids))

        checks = self.n_checks
        if self.placement == "end":
            info_physical = np.arange(self.L)
            check_physical = self.L + np.arange(checks)
        else:
            half = self.L // 2
            info_physical = np.concatenate([np.arange(half), half + checks + np.arange(self.L - half)])
            check_physical = half + np.arange(checks)
        object.__setattr__(self, "info_physical", info_physical)
        object.__setattr__(self, "check_physical", check_physical)

    @property
    def n_groups(self):
        return len(self.groups)

    @property
    def n_checks(self):
        return self.r * self.n_groups

    @property
    def L_total(self):
        return self.L + self.n_checks

    @property
    def n_codewords(self):
        return self.n_groups * self.log2M

    def codeword_index(self, group, lane):
        return group * self.log2M + lane


@dataclass(frozen=True)
class ListConfig:
    """Beam width for list decoding.  The path metric is the sum of log bit
    posteriors; metric ties break lexicographically (bit 0 preferred)."""

    S: int = 64

    def __post_init__(self):
        if self.S < 1:
            raise ValueError(f"need S >= 1, got {self.S}")


@dataclass
class ListDecodeResult:
    bits: np.ndarray
    status: str
    rank: int        # position of the accepted candidate in the metric order
    metric: float


def crc_group_encode(bits, layout, spec):
    """Encode a source bitstream into the stream of L_total sections.

    For each group and each bit lane, the member sections' same-lane bits (in
    group order, first section = highest polynomial order) are CRC-encoded and
    the r check bits distributed to the group's check sections on that lane.
    """
    bits = np.asarray(bits, dtype=np.int64)
    if bits.size != layout.L * layout.log2M:
        raise ValueError(f"expected {layout.L * layout.log2M} bits, got {bits.size}")
    if spec.r != layout.r:
        raise ValueError(f"layout expects degree-{layout.r} CRC, spec has degree {spec.r}")
    chunks = bits.reshape(layout.L, layout.log2M)
    check_chunks = np.zeros((layout.n_checks, layout.log2M), dtype=np.int64)
    for members, checks in zip(layout.groups, layout.check_ids):
        for lane in range(layout.log2M):
            check_chunks[checks, lane] = crc_compute(chunks[members, lane], spec)
    stream = np.empty((layout.L_total, layout.log2M), dtype=np.int64)
    stream[layout.info_physical] = chunks
    stream[layout.check_physical] = check_chunks
    return stream.ravel()


def strip_check_sections(stream_bits, layout):
    """Drop the check sections from an encoded stream, recovering the
    L * log2M information bits."""
    stream_bits = np.asarray(stream_bits)
    if stream_bits.size != layout.L_total * layout.log2M:
        raise ValueError(
            f"expected {layout.L_total * layout.log2M} bits, got {stream_bits.size}"
        )
    chunks = stream_bits.reshape(layout.L_total, layout.log2M)
    return chunks[layout.info_physical].ravel()


def _zero_bit_masks(log2M):
    """masks[k, p] = 1 when position p+1 carries a 0 in the weight-2^k bit."""
    M = 1 << log2M
    pos0 = np.arange(M)
    return np.array([(pos0 >> k) & 1 == 0 for k in range(log2M)], dtype=float)


def section_to_bit_posteriors(beta_sec):
    """Convert one section's normalized posterior over positions into the
    per-lane probabilities that each chunk bit equals 0.

    The entries must sum to 1 (within 1e-9); lane k aggregates the positions
    whose 0-based index has a 0 in bit k.
    """
    beta_sec = np.asarray(beta_sec, dtype=float)
    if abs(beta_sec.sum() - 1.0) > 1e-9:
        raise ValueError(f"section posterior sums to {beta_sec.sum()!r}, expected 1")
    log2M = round(math.log2(beta_sec.size))
    if 1 << log2M != beta_sec.size:
        raise ValueError(f"section length {beta_sec.size} is not a power of two")
    return _zero_bit_masks(log2M) @ beta_sec


def bit_posteriors(beta, M):
    """Bit posteriors for every section of a dense nonnegative beta estimate;
    sections are normalized by their own sums.  Returns (L, log2M)."""
    beta = np.asarray(beta, dtype=float)
    sections = beta.reshape(-1, M)
    sums = sections.sum(axis=1, keepdims=True)
    if np.any(sums <= 0):
        raise ValueError("every section needs positive mass to normalize")
    log2M = round(math.log2(M))
    return (sections / sums) @ _zero_bit_masks(log2M).T


def list_decode_codeword(posteriors, spec, config=None):
    """Beam search over the codeword bits, validated by the CRC.

    posteriors: probabilities of bit = 0, info bits first, check bits last
    config    : ListConfig (beam width S)

    Keeps the S best prefixes per layer under the summed-log-posterior metric
    (ties: lexicographically smaller bits win).  The final candidates are CRC
    checked in metric order; the first divisible one is returned as "valid",
    otherwise the top candidate with status "detected-error".
    """
    config = config or ListConfig()
    posteriors = np.asarray(posteriors, dtype=float)
    n_bits = posteriors.size
    log_p0 = np.log(np.clip(posteriors, PROB_FLOOR, None))
    log_p1 = np.log(np.clip(1.0 - posteriors, PROB_FLOOR, None))

    # candidates as (metric, bits-as-int); MSB-first packing makes integer
    # order coincide with lexicographic bit order
    cands = [(0.0, 0)]
    for t in range(n_bits):
        grown = [(m + log_p0[t], b << 1) for m, b in cands]
        grown += [(m + log_p1[t], (b << 1) | 1) for m, b in cands]
        grown.sort(key=lambda mb: (-mb[0], mb[1]))
        cands = grown[: config.S]

    def unpack(b):
        return np.array([(b >> (n_bits - 1 - i)) & 1 for i in range(n_bits)], dtype=np.int64)

    for rank, (metric, b) in enumerate(cands, start=1):
        bits = unpack(b)
        if crc_check(bits, spec):
            return ListDecodeResult(bits=bits, status=VALID, rank=rank, metric=metric)
    metric, b = cands[0]
    return ListDecodeResult(bits=unpack(b), status=DETECTED, rank=1, metric=metric)


@dataclass
class PipelineResult:
    bits: np.ndarray          # decoded information bits, length L * log2M
    statuses: np.ndarray      # per codeword: "valid" / "detected-error"
    ranks: np.ndarray         # accepted candidate ranks per codeword
    traces: list              # AMP traces, one per round
    rounds: int
    pinned_sections: int      # sections pinned before the second round


def _codeword_posteriors(post, layout, group, lane):
    members = layout.info_physical[layout.groups[group]]
    checks = layout.check_physical[layout.check_ids[group]]
    return np.concatenate([post[members, lane], post[checks, lane]])


def _positions_from_results(results, layout, group):
    """Chunk positions (1-based) of every section of a fully decoded group."""
    k_g = layout.groups[group].size
    lanes = layout.log2M
    info_bits = np.stack([results[group][lane].bits[:k_g] for lane in range(lanes)], axis=1)
    check_bits = np.stack([results[group][lane].bits[k_g:] for lane in range(lanes)], axis=1)
    weights = 1 << np.arange(lanes)
    return 1 + info_bits @ weights, 1 + check_bits @ weights


def _run_amp(y, operator, alloc, sigma2, config):
    if isinstance(operator, CoupledOperator):
        sc = ScParams(base=operator.base, M_R=operator.M_R, M_C=operator.M_C, M=operator.M)
        return sc_decode(y, sc, operator, sigma2, config)
    return amp_decode(y, operator, alloc, sigma2, config)


def decode_pipeline(
    y, operator, alloc, sigma2, layout, spec,
    list_config=None, amp_config=None, amp_again=False,
):
    """Full concatenated decode: AMP, bit posteriors, per-codeword list
    decoding, and optionally a pinned second AMP round for failed codewords.

    For a second round, a section is pinned only when every one of its bit
    lanes belongs to a CRC-valid codeword (all lanes of a section live in the
    same group, so pinning acts on fully validated groups); list decoding then
    repeats on the detected-error codewords alone.  ``alloc`` is ignored for
    coupled operators, whose power sits in the design matrix.
    """
    list_config = list_config or ListConfig()
    amp_config = amp_config or AmpConfig()
    lanes = layout.log2M
    if operator.ml != layout.L_total * (1 << lanes):
        raise ValueError(
            f"operator has {operator.ml} columns, layout needs "
            f"{layout.L_total * (1 << lanes)}"
        )

    trace = _run_amp(y, operator, alloc, sigma2, amp_config)
    traces = [trace]
    post = bit_posteriors(trace.beta, operator.M)

    results = [
        [
            list_decode_codeword(_codeword_posteriors(post, layout, g, lane), spec, list_config)
            for lane in range(lanes)
        ]
        for g in range(layout.n_groups)
    ]

    rounds = 1
    pinned_sections = 0
    any_detected = any(r.status == DETECTED for row in results for r in row)
    if amp_again and any_detected:
        pinned = []
        for g in range(layout.n_groups):
            if all(results[g][lane].status == VALID for lane in range(lanes)):
                info_pos, check_pos = _positions_from_results(results, layout, g)
                members = layout.info_physical[layout.groups[g]]
                checks = layout.check_physical[layout.check_ids[g]]
                pinned += list(zip(members.tolist(), info_pos.tolist()))
                pinned += list(zip(checks.tolist(), check_pos.tolist()))
        pinned_sections = len(pinned)
        if pinned:
            cfg2 = AmpConfig(
                t_max=amp_config.t_max,
                halt_tol=amp_config.halt_tol,
                tau_mode=amp_config.tau_mode,
                tau2_schedule=amp_config.tau2_schedule,
                pinned=tuple(pinned),
                record_beta=amp_config.record_beta,
            )
            trace2 = _run_amp(y, operator, alloc, sigma2, cfg2)
            traces.append(trace2)
            post2 = bit_posteriors(trace2.beta, operator.M)
            for g in range(layout.n_groups):
                for lane in range(lanes):
                    if results[g][lane].status == DETECTED:
                        results[g][lane] = list_decode_codeword(
                            _codeword_posteriors(post2, layout, g, lane), spec, list_config
                        )
            rounds = 2

    # assemble information bits from the per-codeword decisions
    chunks = np.empty((layout.L, lanes), dtype=np.int64)
    for g, members in enumerate(layout.groups):
        k_g = members.size
        for lane in range(lanes):
            chunks[members, lane] = results[g][lane].bits[:k_g]

    statuses = np.array([r.status for row in results for r in row])
    ranks = np.array([r.rank for row in results for r in row])
    return PipelineResult(
        bits=chunks.ravel(),
        statuses=statuses,
        ranks=ranks,
        traces=traces,
        rounds=rounds,
        pinned_sections=pinned_sections,
    )


@dataclass
class ErrorMetrics:
    bit_errors: int
    ber: float
    sec_errors: int
    secer: float
    detected: int
    undetected: int


def error_metrics(decoded_bits, truth_bits, layout, statuses=None):
    """Bit and section error rates over the information part.

    ``statuses`` (from the pipeline, codeword order group-major) enables the
    codeword-level counts: "detected-error" entries are counted directly, and
    a CRC-valid codeword whose information bits differ from the truth counts
    as undetected.
    """
    decoded_bits = np.asarray(decoded_bits)
    truth_bits = np.asarray(truth_bits)
    if decoded_bits.shape != truth_bits.shape:
        raise ValueError("decoded/truth length mismatch")
    if decoded_bits.size != layout.L * layout.log2M:
        raise ValueError(f"expected {layout.L * layout.log2M} information bits")
    diff = decoded_bits != truth_bits
    bit_errors = int(diff.sum())
    sec_errors = int(diff.reshape(layout.L, layout.log2M).any(axis=1).sum())
    detected = undetected = 0
    if statuses is not None:
        d = decoded_bits.reshape(layout.L, layout.log2M)
        t = truth_bits.reshape(layout.L, layout.log2M)
        statuses = np.asarray(statuses)
        for g, members in enumerate(layout.groups):
            for lane in range(layout.log2M):
                status = statuses[layout.codeword_index(g, lane)]
                if status == DETECTED:
                    detected += 1
                elif np.any(d[members, lane] != t[members, lane]):
                    undetected += 1
    return ErrorMetrics(
        bit_errors=bit_errors,
        ber=bit_errors / decoded_bits.size,
        sec_errors=sec_errors,
        secer=sec_errors / layout.L,
        detected=detected,
        undetected=undetected,
    )
