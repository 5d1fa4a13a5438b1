"""Command-line front end: simulation sweeps and small CSV/report utilities."""

import argparse
import math
import sys

import numpy as np

from .operators import circulant_operator, dft_block_operator, gaussian_operator
from .params import SparcParams
from .power import flat_allocation, iterative_allocation
from .sequences import (
    autocorrelation_profile,
    frank_sequence,
    milewski_sequence,
    sequence_for_length,
)
from .sim import ExperimentConfig, run_experiment, write_csv
from .state_evolution import se_trajectory


def _write(path, text):
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w") as f:
            f.write(text)


def _cmd_simulate(args):
    config = ExperimentConfig.from_json(args.config)
    result = run_experiment(config)
    if args.out:
        write_csv(result, args.out)
        print(f"wrote {args.out}  (config {result.config_hash[:12]}, "
              f"info rate {result.info_rate:.4f}, inner rate {result.inner_rate:.4f})")
    else:
        sys.stdout.write(result.to_csv())
    return 0


def _cmd_se_predict(args):
    alloc = _alloc_from_args(args, args.L, args.sigma2)
    sched = se_trajectory(
        alloc, args.sigma2, args.P, args.M, args.n, args.L,
        max_iters=args.max_iters, mc_samples=args.mc_samples, seed=args.seed,
    )
    lines = ["t,tau2,x"]
    for t, tau2 in enumerate(sched.tau2):
        x = sched.x[t] if t < sched.x.size else ""
        lines.append(f"{t},{float(tau2)!r},{float(x)!r}" if x != "" else f"{t},{float(tau2)!r},")
    _write(args.out, "\n".join(lines) + "\n")
    return 0


def _alloc_from_args(args, L, sigma2):
    if args.R_PA == 0:
        return flat_allocation(L, args.P)
    return iterative_allocation(L, args.B, args.P, sigma2, args.R_PA)


def _cmd_power_alloc(args):
    alloc = iterative_allocation(args.L, args.B, args.P, args.sigma2, args.R_PA)
    lines = ["section,power"]
    for i, p in enumerate(alloc.p, start=1):
        lines.append(f"{i},{float(p)!r}")
    _write(args.out, "\n".join(lines) + "\n")
    return 0


def _cmd_matrix_check(args):
    n = args.n if args.n else math.ceil(args.L * round(math.log2(args.M)) / args.R)
    if args.family == "circulant":
        n = args.M * math.ceil(n / args.M)
    params = SparcParams(L=args.L, M=args.M, n=n, P=1.0, sigma2=1.0)
    builders = {
        "gaussian": gaussian_operator,
        "dft": dft_block_operator,
        "circulant": circulant_operator,
    }
    op = builders[args.family](params, args.seed)
    rng = np.random.default_rng(args.seed)
    print(f"family={args.family} n={op.n} ML={op.ml} seed={args.seed}")

    worst = 0.0
    for _ in range(args.pairs):
        b = rng.normal(size=op.ml) + 1j * rng.normal(size=op.ml)
        z = rng.normal(size=op.n) + 1j * rng.normal(size=op.n)
        lhs = np.vdot(op.forward(b), z)
        rhs = np.vdot(b, op.adjoint(z))
        worst = max(worst, abs(lhs - rhs) / max(abs(lhs), 1e-300))
    ok = worst < 1e-10
    print(f"adjoint identity over {args.pairs} pairs: max rel err {worst:.3e} "
          f"[{'PASS' if ok else 'FAIL'}]")

    status = 0 if ok else 1
    if op.n * op.ml <= (1 << 22):
        dense = op.dense()
        err = 0.0
        for _ in range(5):
            b = rng.normal(size=op.ml) + 1j * rng.normal(size=op.ml)
            err = max(err, np.abs(op.forward(b) - dense @ b).max())
        ok = err < 1e-9
        print(f"fast path vs dense reconstruction: max abs err {err:.3e} "
              f"[{'PASS' if ok else 'FAIL'}]")
        status |= 0 if ok else 1
        if args.family == "circulant":
            rs = np.abs(dense.sum(axis=1)).max()
            cs = np.abs(dense.sum(axis=0)).max()
            ok = rs < 1e-9 and cs < 1e-9
            print(f"row sums <= {rs:.3e}, column sums <= {cs:.3e} "
                  f"[{'PASS' if ok else 'FAIL'}]")
            status |= 0 if ok else 1
    else:
        print("dense reconstruction skipped (size over cap)")
    return status


def _cmd_seq(args):
    if args.family == "auto":
        seq = sequence_for_length(args.length)
    elif args.family == "frank":
        seq = frank_sequence(args.d)
    else:
        seq = milewski_sequence(args.d, args.h)
    lines = ["index,re,im"]
    for i, v in enumerate(seq.entries, start=1):
        lines.append(f"{i},{float(v.real)!r},{float(v.imag)!r}")
    _write(args.out, "\n".join(lines) + "\n")
    prof = np.abs(autocorrelation_profile(seq))
    lines = ["lag,abs_corr"]
    for lag, c in enumerate(prof):
        lines.append(f"{lag},{float(c)!r}")
    _write(args.acf_out, "\n".join(lines) + "\n")
    return 0


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="csparc",
        description="Sparse regression codes over complex AWGN channels",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run a Monte-Carlo sweep from a JSON config")
    p.add_argument("--config", required=True)
    p.add_argument("--out", help="CSV output path (stdout if omitted)")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("se-predict", help="state-evolution trajectory as CSV")
    p.add_argument("--L", type=int, required=True)
    p.add_argument("--M", type=int, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--P", type=float, default=1.0)
    p.add_argument("--sigma2", type=float, required=True)
    p.add_argument("--B", type=int, default=1)
    p.add_argument("--R-PA", dest="R_PA", type=float, default=0.0)
    p.add_argument("--mc-samples", type=int, default=10_000)
    p.add_argument("--max-iters", type=int, default=50)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_se_predict)

    p = sub.add_parser("power-alloc", help="iterative power allocation as CSV")
    p.add_argument("--L", type=int, required=True)
    p.add_argument("--B", type=int, required=True)
    p.add_argument("--P", type=float, default=1.0)
    p.add_argument("--sigma2", type=float, required=True)
    p.add_argument("--R-PA", dest="R_PA", type=float, required=True)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_power_alloc)

    p = sub.add_parser("matrix-check", help="operator invariant report")
    p.add_argument("--family", choices=["gaussian", "dft", "circulant"], required=True)
    p.add_argument("--L", type=int, required=True)
    p.add_argument("--M", type=int, required=True)
    p.add_argument("--R", type=float)
    p.add_argument("--n", type=int)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--pairs", type=int, default=100)
    p.set_defaults(func=_cmd_matrix_check)

    p = sub.add_parser("seq", help="emit a perfect sequence and its autocorrelation")
    p.add_argument("--family", choices=["auto", "frank", "milewski"], default="auto")
    p.add_argument("--length", type=int, help="sequence length for --family auto")
    p.add_argument("--d", type=int, help="Frank/Milewski parameter d")
    p.add_argument("--h", type=int, default=0, help="Milewski parameter h")
    p.add_argument("--out", help="sequence CSV (stdout if omitted)")
    p.add_argument("--acf-out", dest="acf_out", help="autocorrelation CSV")
    p.set_defaults(func=_cmd_seq)

    args = parser.parse_args(argv)
    if args.command == "matrix-check" and (args.R is None) == (args.n is None):
        parser.error("matrix-check needs exactly one of --R or --n")
    if args.command == "seq":
        if args.family == "auto" and args.length is None:
            parser.error("seq --family auto needs --length")
        if args.family in ("frank", "milewski") and args.d is None:
            parser.error(f"seq --family {args.family} needs --d")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
