"""Full-scale waterfall reproduction (long-running; not part of CI).

Geometry: 1000 information sections of size 512, CRC groups of 100 sections
with the degree-8 generator 0x97, list size 64, information rate 0.8.  At
full depth (1000 trials per point over a dB-spaced grid) the concatenated
curve falls off a cliff near SNR_b = 3.5 dB and stays below the plain-AMP
curve everywhere; expect hours of runtime at those settings.

The defaults below are deliberately shallow (a smoke depth) so the script can
be exercised end to end; raise --trials for the real measurement, e.g.

    python demos/paper_scale_waterfall.py --trials 1000 \
        --snrs 2.0 2.5 3.0 3.25 3.5 3.75 4.0 --out waterfall.csv
"""

import argparse
import sys

import csparc as cs


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--trials", type=int, default=5)
    parser.add_argument("--snrs", type=float, nargs="+",
                        default=[3.0, 3.5, 4.0])
    parser.add_argument("--list-size", type=int, default=64)
    parser.add_argument("--amp-again", action="store_true")
    parser.add_argument("--plain", action="store_true",
                        help="also run the plain code for comparison")
    parser.add_argument("--matrix", choices=["dft", "circulant"], default="dft")
    parser.add_argument("--out", help="CSV path for the concatenated sweep")
    args = parser.parse_args()

    common = {
        "L": 1000, "M": 512, "R": 0.8, "P": 1.0,
        "allocation": {"type": "flat"},
        "matrix": {"family": args.matrix, "seed": 1},
        "snr_b_db": args.snrs,
        "trials": args.trials,
        "target_errors": 100,
        "base_seed": 2026,
    }
    concat_cfg = cs.ExperimentConfig.from_dict(
        {**common,
         "outer": {"K": 100, "koopman": "0x97", "S": args.list_size,
                   "placement": "end"},
         "amp_again": args.amp_again}
    )

    print(f"concatenated code: {args.trials} trials/point, S={args.list_size}, "
          f"matrix={args.matrix}", flush=True)
    concat = cs.run_experiment(concat_cfg)
    print(f"info rate {concat.info_rate:.4f}, inner rate {concat.inner_rate:.4f}")
    sys.stdout.write(concat.to_csv())
    if args.out:
        cs.write_csv(concat, args.out)
        print(f"wrote {args.out}")

    if args.plain:
        print("\nplain code:", flush=True)
        plain = cs.run_experiment(cs.ExperimentConfig.from_dict(common))
        sys.stdout.write(plain.to_csv())


if __name__ == "__main__":
    main()
