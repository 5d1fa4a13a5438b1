"""Acceptance suite: every gated criterion at its stated tolerance.

Each test prints one `ACCEPTANCE n (...): PASS` (or FAIL) line, visible with
`pytest -s`.  The full-scale waterfall reproduction is long-running and only
executes when CSPARC_PAPER_SCALE=1 is set; everything else runs by default.
"""

import math
import os
import time
from contextlib import contextmanager
from fractions import Fraction

import numpy as np
import pytest

import csparc as cs
from csparc.operators import CoupledOperator
from oracles import (
    circulant_oracle_matrix,
    coupled_oracle_matrix,
    dft_oracle_matrix,
    exhaustive_candidates,
    exhaustive_ml,
    posterior_mean_oracle_rows,
)

LN2 = math.log(2.0)


@contextmanager
def criterion(number, name):
    try:
        yield
    except Exception:
        print(f"\nACCEPTANCE {number} ({name}): FAIL")
        raise
    print(f"\nACCEPTANCE {number} ({name}): PASS")


def test_01_perfect_sequences():
    with criterion(1, "perfect sequences: all nontrivial autocorrelations vanish"):
        started = time.perf_counter()
        sequences = [cs.frank_sequence(d) for d in range(1, 17)]
        for d in range(1, 17):
            h = 0
            while d ** (2 * h + 1) <= 4096:
                sequences.append(cs.milewski_sequence(d, h))
                h += 1
                if d == 1:
                    break
        for seq in sequences:
            profile = np.abs(cs.autocorrelation_profile(seq))
            if len(seq) > 1:
                assert profile[1:].max() < 1e-9, seq.family
        elapsed = time.perf_counter() - started
        assert elapsed < 10.0, f"took {elapsed:.1f}s"


def test_02_operator_correctness():
    with criterion(2, "operators: dense-oracle match, adjoint identity, circulant sums"):
        p = cs.SparcParams(L=8, M=32, n=256, P=1.0, sigma2=1.0)
        base = cs.base_matrix(3, 4, 1.0)
        cases = [
            (cs.gaussian_operator(p, 3), None),
            (cs.dft_block_operator(p, 3), dft_oracle_matrix),
            (cs.circulant_operator(p, 3), circulant_oracle_matrix),
            (cs.sc_operator(base, 42, 64, 3, M=32), coupled_oracle_matrix),
        ]
        rng = np.random.default_rng(0)
        for op, oracle in cases:
            assert op.n <= 256
            dense = op.matrix if oracle is None else oracle(op)
            for _ in range(5):
                beta = rng.normal(size=op.ml) + 1j * rng.normal(size=op.ml)
                z = rng.normal(size=op.n) + 1j * rng.normal(size=op.n)
                assert np.abs(op.forward(beta) - dense @ beta).max() < 1e-9
                assert np.abs(op.adjoint(z) - dense.conj().T @ z).max() < 1e-9
            for _ in range(100):
                beta = rng.normal(size=op.ml) + 1j * rng.normal(size=op.ml)
                z = rng.normal(size=op.n) + 1j * rng.normal(size=op.n)
                lhs = np.vdot(op.forward(beta), z)
                rhs = np.vdot(beta, op.adjoint(z))
                assert abs(lhs - rhs) / abs(lhs) < 1e-10

        circ = cs.circulant_operator(p, 7)
        dense = circulant_oracle_matrix(circ)
        assert np.abs(dense.sum(axis=1)).max() < 1e-9
        assert np.abs(dense.sum(axis=0)).max() < 1e-9
        alloc = cs.flat_allocation(p.L, p.P)
        for trial in range(100):
            bits = np.random.default_rng(trial).integers(0, 2, p.bits)
            x = circ.forward(cs.build_message(bits, alloc, p).dense())
            assert abs(x.sum()) < 1e-8 * math.sqrt(p.n)


def test_03_denoiser_matches_posterior_oracle():
    with criterion(3, "denoiser equals brute-force posterior mean, 1e-12 relative"):
        started = time.perf_counter()
        rng = np.random.default_rng(1)
        total = 0
        M = 32
        while total < 10_000:
            count = 2500
            tau2 = 10.0 ** rng.uniform(-2, 2, count)
            nP = rng.uniform(0.5, 2.0, count)
            c = np.sqrt(nP)
            signal = c[:, None] * (rng.random((count, M)) < 0.2)
            noise = np.sqrt(tau2 / 2)[:, None] * (
                rng.normal(size=(count, M)) + 1j * rng.normal(size=(count, M))
            )
            s = signal + noise
            ours = cs.denoise_sections(s, c, tau2)
            oracle = posterior_mean_oracle_rows(s, c, tau2)
            scale = np.maximum(np.abs(oracle), 1e-250 * c[:, None])
            assert (np.abs(ours - oracle) / scale).max() < 1e-12
            total += count
        elapsed = time.perf_counter() - started
        assert elapsed < 30.0, f"took {elapsed:.1f}s"


def test_04_state_evolution_concentration():
    with criterion(4, "state evolution: mean online tau2 within 10% for t <= 10"):
        L, M, R, P = 256, 64, 0.8, 1.0
        n = math.ceil(L * 6 / R)
        sigma2 = cs.snr_to_sigma2(6.0, P, L * 6 / n)
        p = cs.SparcParams(L=L, M=M, n=n, P=P, sigma2=sigma2)
        alloc = cs.flat_allocation(L, P)
        sched = cs.se_trajectory(
            alloc, sigma2, P, M, n, L, max_iters=11, mc_samples=20_000, seed=0
        )
        op = cs.dft_block_operator(p, 9)
        cfg = cs.AmpConfig(t_max=11, halt_tol=1e-300)
        runs = []
        for trial in range(50):
            rng = np.random.default_rng(trial)
            bits = rng.integers(0, 2, p.bits)
            y = cs.awgn_channel(
                op.forward(cs.build_message(bits, alloc, p).dense()), sigma2, rng
            )
            runs.append(np.asarray(cs.amp_decode(y, op, alloc, sigma2, cfg).tau2))
        T = min(11, sched.tau2.size, min(r.size for r in runs))
        mean_tau = np.mean([r[:T] for r in runs], axis=0)
        rel = np.abs(mean_tau - sched.tau2[:T]) / sched.tau2[:T]
        assert np.all(rel < 0.10), rel


def test_05_power_allocation():
    with criterion(5, "power allocation: flat at R_PA=0, hand-traced block values"):
        flat = cs.iterative_allocation(8, 4, 1.0, 0.7, 0.0)
        assert np.array_equal(flat.p, cs.flat_allocation(8, 1.0).p)

        alloc = cs.iterative_allocation(4, 2, 2.0, 1.0, 1.0)
        assert np.abs(alloc.p - [0.519860, 0.519860, 0.480140, 0.480140]).max() < 1e-6

        rng = np.random.default_rng(2)
        for _ in range(300):
            L = int(rng.integers(2, 64))
            B = int(rng.integers(1, L + 1))
            P = float(rng.uniform(0.5, 10.0))
            sigma2 = float(rng.uniform(0.1, 4.0))
            R_PA = float(rng.uniform(0.0, 1.5))
            try:
                a = cs.iterative_allocation(L, B, P, sigma2, R_PA)
            except cs.InfeasibleAllocationError:
                continue
            assert abs(a.p.sum() - P) <= 1e-12 * P
            assert np.all(np.diff(a.p) <= 1e-15 * P)


def test_06_exhaustive_ml_agreement():
    with criterion(6, "AMP agrees with exhaustive ML at L=2, M=4, 8 dB"):
        R = 0.5  # 4 bits over 8 channel uses
        p = cs.SparcParams(L=2, M=4, n=8, P=2.0, sigma2=cs.snr_to_sigma2(8.0, 2.0, R))
        alloc = cs.flat_allocation(p.L, p.P)
        op = cs.gaussian_operator(p, 15)
        amplitudes = np.sqrt(p.n * alloc.p)
        sigma = math.sqrt(p.sigma2)
        agree = 0
        margin_total = margin_agree = 0
        trials = 500
        for trial in range(trials):
            rng = np.random.default_rng(trial)
            bits = rng.integers(0, 2, p.bits)
            msg = cs.build_message(bits, alloc, p)
            y = cs.awgn_channel(op.forward(msg.dense()), p.sigma2, rng)
            trace = cs.amp_decode(y, op, alloc, p.sigma2)
            amp_pos = cs.hard_decision(trace.beta, p.M).positions
            ml_pos, best, runner = exhaustive_ml(y, op, amplitudes, p.L, p.M)
            same = np.array_equal(amp_pos, ml_pos)
            agree += same
            # high-confidence subset: ML correct with distance margin >= 3 sigma
            if np.array_equal(ml_pos, msg.positions) and runner - best >= 3 * sigma:
                margin_total += 1
                margin_agree += same
        assert agree >= 0.95 * trials, f"agreement {agree}/{trials}"
        assert margin_total > 0
        assert margin_agree == margin_total, (margin_agree, margin_total)


def test_07_list_decoding_collapse_and_gain():
    with criterion(7, "list decoding: S=1 collapse, rank-2 recovery, beam = top-S"):
        # S=1 output is exactly the per-bit hard decision
        spec = cs.CrcSpec(koopman=0x97, K=4)
        rng = np.random.default_rng(3)
        for _ in range(50):
            post = rng.random(12)
            res = cs.list_decode_codeword(post, spec, cs.ListConfig(S=1))
            assert np.array_equal(res.bits, (post < 0.5).astype(int))

        # constructed rank-2 instance: S=1 misses, S=2 recovers exactly
        spec4 = cs.CrcSpec(koopman=0x9, K=8)
        msg = np.array([1, 0, 0, 1, 1, 0, 1, 0])
        cw = np.concatenate([msg, cs.crc_compute(msg, spec4)])
        post = np.where(cw == 0, 0.9, 0.1).astype(float)
        post[3] = 0.4 if cw[3] == 0 else 0.6
        res1 = cs.list_decode_codeword(post, spec4, cs.ListConfig(S=1))
        assert res1.status == "detected-error"
        assert not np.array_equal(res1.bits, cw)
        res2 = cs.list_decode_codeword(post, spec4, cs.ListConfig(S=2))
        assert res2.status == "valid" and res2.rank == 2
        assert np.array_equal(res2.bits, cw)

        # beam survivors equal the exhaustive top-S ranking at K+r = 12
        for S in (1, 2, 4, 16, 4096):
            for seed in range(5):
                post = np.random.default_rng(seed).random(12)
                oracle = exhaustive_candidates(post, S)
                res = cs.list_decode_codeword(post, spec4, cs.ListConfig(S=S))
                accepted = next(
                    (
                        (rank, np.array(bits))
                        for rank, (_, bits) in enumerate(oracle, start=1)
                        if cs.crc_check(np.array(bits), spec4)
                    ),
                    None,
                )
                if accepted is None:
                    assert res.status == "detected-error"
                    assert np.array_equal(res.bits, np.array(oracle[0][1]))
                else:
                    assert res.status == "valid"
                    assert res.rank == accepted[0]
                    assert np.array_equal(res.bits, accepted[1])


def test_08_desk_scale_waterfall():
    with criterion(8, "desk-scale waterfall: list decoding beats plain AMP"):
        spec = cs.CrcSpec(koopman=0x97, K=32)
        layout = cs.GroupingLayout(L=128, K=32, r=8, log2M=6, placement="end")
        n = math.ceil(128 * 6 / 0.8)
        R_info = 128 * 6 / n
        p = cs.SparcParams(L=layout.L_total, M=64, n=n, P=1.0, sigma2=1.0)
        op = cs.dft_block_operator(p, 5)
        alloc = cs.flat_allocation(p.L, p.P)
        list_cfg = cs.ListConfig(S=16)
        trials = 200
        total_bits = trials * 128 * 6
        list_ber = []
        plain_ber = []
        for snr_idx, db in enumerate((3.0, 4.0, 5.0)):
            sigma2 = cs.snr_to_sigma2(db, 1.0, R_info)
            lerr = perr = 0
            for trial in range(trials):
                rng = np.random.default_rng((snr_idx, trial))
                bits = rng.integers(0, 2, 128 * 6)
                stream = cs.crc_group_encode(bits, layout, spec)
                y = cs.awgn_channel(
                    op.forward(cs.build_message(stream, alloc, p).dense()),
                    sigma2, rng,
                )
                res = cs.decode_pipeline(
                    y, op, alloc, sigma2, layout, spec, list_cfg
                )
                lerr += int((res.bits != bits).sum())
                # paired plain-AMP arm: hard decision of the same AMP run on
                # the same received signal, stripped of check sections
                plain_stream = cs.positions_to_bits(
                    cs.hard_decision(res.traces[0].beta, 64).positions, 64
                )
                perr += int(
                    (cs.strip_check_sections(plain_stream, layout) != bits).sum()
                )
            list_ber.append(lerr / total_bits)
            plain_ber.append(perr / total_bits)
        print(f"\n  list BER  : {list_ber}")
        print(f"  plain BER : {plain_ber}")
        for l, pl in zip(list_ber, plain_ber):
            assert l <= pl, (list_ber, plain_ber)
        assert any(l < pl for l, pl in zip(list_ber, plain_ber))
        assert list_ber[0] > list_ber[1] > list_ber[2], list_ber


@pytest.mark.skipif(
    os.environ.get("CSPARC_PAPER_SCALE") != "1",
    reason="full-scale waterfall takes hours; set CSPARC_PAPER_SCALE=1",
)
def test_09_paper_scale_waterfall():
    with criterion(9, "full-scale waterfall onset near 3.5 dB"):
        snrs = [3.0, 3.5, 4.0]
        common = {
            "L": 1000, "M": 512, "R": 0.8, "P": 1.0,
            "allocation": {"type": "flat"},
            "matrix": {"family": "dft", "seed": 1},
            "snr_b_db": snrs,
            "trials": 1000,
            "target_errors": 100,
            "base_seed": 2026,
        }
        concat = cs.run_experiment(
            cs.ExperimentConfig.from_dict(
                {**common,
                 "outer": {"K": 100, "koopman": "0x97", "S": 64,
                           "placement": "end"}}
            )
        )
        plain = cs.run_experiment(cs.ExperimentConfig.from_dict(common))
        for cc, pp in zip(concat.points, plain.points):
            print(f"  {cc.snr_b_db} dB: concat {cc.ber:.3e}  plain {pp.ber:.3e}")
            assert cc.ber <= pp.ber
        # onset: the first grid point where the concatenated curve has
        # collapsed; must lie within +-0.5 dB of 3.5
        onset = next(
            (pt.snr_b_db for pt in concat.points if pt.ber < 1e-4), None
        )
        assert onset is not None and 3.0 <= onset <= 4.0


def test_10_sc_construction():
    with criterion(10, "coupled codes: base-matrix identity, w=1 reduction"):
        # mean of entries equals P: exact as rationals for every (w, Lambda),
        # and within 4 ulp in float64 (non-dyadic entries round)
        P = 1.0
        for w in range(1, 7):
            for lam in range(1, 41):
                value = Fraction(P) * (lam + w - 1) / w
                assert value * (w * lam) / ((lam + w - 1) * lam) == Fraction(P)
                b = cs.base_matrix(w, lam, P)
                assert np.all(np.count_nonzero(b.weights, axis=0) == w)
                assert abs(b.weights.mean() - P) <= 4 * np.finfo(float).eps * P

        # w=1: decoding the full chain equals decoding each diagonal block on
        # its own, bit for bit (blocks shared, early halting disabled)
        Lam, M, spb = 4, 8, 2
        L = Lam * spb
        base = cs.base_matrix(1, Lam, 1.0)
        sp = cs.ScParams(base=base, M_R=24, M_C=spb * M, M=M)
        op = cs.sc_operator(base, sp.M_R, sp.M_C, 77, M=M)
        rng = np.random.default_rng(4)
        bits = rng.integers(0, 2, L * 3)
        msg = cs.sc_build_message(bits, L, M)
        y = cs.awgn_channel(op.forward(msg.dense()), 0.15, rng)
        cfg = cs.AmpConfig(t_max=12, halt_tol=1e-300)
        full = cs.sc_decode(y, sp, op, 0.15, cfg)
        V = base.weights[0, 0] / L
        sub_P = V * spb
        full_beta = full.beta.reshape(L, M)
        for c in range(Lam):
            sub_base = cs.base_matrix(1, 1, sub_P)
            sub_op = CoupledOperator(
                sub_base, sp.M_R, sp.M_C, seed=0, M=M,
                blocks={(0, 0): op.block(c, c)},
            )
            assert sub_base.weights[0, 0] / spb == V
            sub_sp = cs.ScParams(base=sub_base, M_R=sp.M_R, M_C=sp.M_C, M=M)
            sub = cs.sc_decode(y[c * sp.M_R : (c + 1) * sp.M_R], sub_sp, sub_op, 0.15, cfg)
            assert sub.iterations == full.iterations
            assert np.array_equal(sub.beta, full_beta[c * spb : (c + 1) * spb].ravel())
            for t in range(full.iterations):
                assert sub.tau2[t][0] == full.tau2[t][c]


def test_11_crc_detection():
    with criterion(11, "CRC: all single flips and bursts <= 8 detected"):
        spec = cs.CrcSpec(koopman=0x97, K=100)
        width = spec.K + spec.r  # 108-bit frames
        # detection is linear: crc(c xor e) = crc(e), so a pattern is caught
        # for every codeword exactly when its own remainder is nonzero;
        # enumerate all single flips and all bursts of length <= 8 per offset
        patterns = []
        for start in range(width):
            patterns.append([start])
        for length in range(2, 9):
            for start in range(width - length + 1):
                for interior in range(1 << (length - 2)):
                    idxs = [start, start + length - 1]
                    for b in range(length - 2):
                        if (interior >> b) & 1:
                            idxs.append(start + 1 + b)
                    patterns.append(idxs)
        frame = np.zeros(width, dtype=np.int64)
        for idxs in patterns:
            frame[:] = 0
            frame[idxs] = 1
            assert cs.crc_remainder(frame, spec) != 0

        # end-to-end spot check without assuming linearity: 10^4 random
        # codewords each hit by a random burst
        rng = np.random.default_rng(5)
        for _ in range(10_000):
            msg = rng.integers(0, 2, spec.K)
            cw = np.concatenate([msg, cs.crc_compute(msg, spec)])
            assert cs.crc_check(cw, spec)
            length = int(rng.integers(1, 9))
            start = int(rng.integers(0, width - length + 1))
            burst = np.zeros(width, dtype=np.int64)
            burst[start] = 1
            burst[start + length - 1] = 1
            if length > 2:
                burst[start + 1 : start + length - 1] = rng.integers(0, 2, length - 2)
            assert not cs.crc_check(cw ^ burst, spec)
