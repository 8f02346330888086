"""beta_lo and the antipodal certificate for Gaussian layers as m/n grows.

Writes plot-ready CSV (one row per m) to stdout or --out:

    python3 scripts/beta_sweep.py --n 10 --m 50,100,300,1000,3000,10000 --seed 7
"""

import argparse
import csv
import sys

from relucond.gaussian_lab import beta_sweep


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--n", type=int, default=10)
    ap.add_argument("--m", default="50,100,300,1000,3000,10000")
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--pairs", type=int, default=100_000)
    ap.add_argument("--out", default=None)
    args = ap.parse_args()

    report = beta_sweep(args.n, [int(v) for v in args.m.split(",")], args.seed, args.pairs)
    fh = open(args.out, "w", newline="") if args.out else sys.stdout
    w = csv.DictWriter(fh, fieldnames=list(report.rows[0]))
    w.writeheader()
    w.writerows(report.rows)
    if args.out:
        fh.close()


if __name__ == "__main__":
    main()
