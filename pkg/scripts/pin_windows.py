"""Oracle runs behind the pinned acceptance windows.

Prints, for a range of seeds, the statistics whose windows are frozen into
tests/test_acceptance.py, so the windows can be re-derived after any change
to sampling code:

    python3 scripts/pin_windows.py --seeds 0-9
"""

import argparse
import math

from relucond.gaussian_lab import (
    ConeSpec,
    ExperimentConfig,
    angle_preservation_check,
    beta_sweep,
    gaussian_width_mc,
    small_distance_profile,
    theorem_band_check,
)


def seed_range(text):
    lo, _, hi = text.partition("-")
    return range(int(lo), int(hi or lo) + 1)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--seeds", type=seed_range, default=seed_range("0-4"))
    ap.add_argument("--skip-band", action="store_true")
    args = ap.parse_args()

    print("sweep n=10: beta_lo at m=100, 10^4 (window [1.35, 1.55], trend slack 0.02)")
    for s in args.seeds:
        rows = beta_sweep(10, [100, 10_000], s).rows
        b100, b1e4 = rows[0]["beta_lo"], rows[1]["beta_lo"]
        print(f"  seed {s}: {b100:.4f} {b1e4:.4f} certs {[round(r['cert_ratio'], 4) for r in rows]}")

    print("small-distance profile n=10 m=5000 eps=1e-3 (window [0.4, 0.6])")
    for s in args.seeds:
        r = small_distance_profile(ExperimentConfig(n=10, m=5000, pair_count=100, seed=s), [1e-3]).rows[0]
        print(f"  seed {s}: min {r['min']:.4f} max {r['max']:.4f}")

    print("angle map n=10 m=20000, 1000 pairs (tolerance 0.05)")
    for s in args.seeds:
        r = angle_preservation_check(ExperimentConfig(n=10, m=20_000, pair_count=1000, seed=s)).rows[-1]
        print(f"  seed {s}: max deviation {r['max_deviation']:.4f}")

    k, n = 5, 100
    scale = math.sqrt(2 * k * math.log(n / k))
    print(f"sparse width k={k} n={n}: mean / sqrt(2k log(n/k)) (window [1, 3])")
    for s in args.seeds:
        mean, se = gaussian_width_mc(ConeSpec.sparse_cone(n, k), 100_000, s)
        print(f"  seed {s}: {mean / scale:.4f} (se {se / scale:.1e})")

    if not args.skip_band:
        print("band n=8 m=20000 delta=0.5, 10^5 pairs (0 violations)")
        for s in args.seeds:
            rows = theorem_band_check(ExperimentConfig(n=8, m=20_000, pair_count=100_000, seed=s)).rows
            print(f"  seed {s}: violations {rows[-1]['violations']} worst margin {rows[-1]['worst_margin']:.4f}")


if __name__ == "__main__":
    main()
