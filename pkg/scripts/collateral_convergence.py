"""Euler collateral balance against its exact path for a range of step sizes."""

import argparse
from pathlib import Path

from bilateral_closeout.instruments import RateCurve
from bilateral_closeout.collateral import simulate_collateral


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--r", type=float, default=0.03)
    ap.add_argument("--T", type=float, default=5.0)
    ap.add_argument("--outdir", type=Path, default=None, help="also write each path as CSV here")
    args = ap.parse_args()

    curve = RateCurve(args.r)
    prev = None
    print(f"{'steps/yr':>9} {'max dev (mn)':>14} {'bound (mn)':>12} {'ratio':>7}")
    for per_year in (12, 52, 365, 730, 3650):
        path = simulate_collateral(curve, args.T, 1e9, 1 / per_year)
        dev = path.max_deviation()
        ratio = f"{prev / dev:7.3f}" if prev else "      -"
        print(f"{per_year:>9} {dev / 1e6:14.6f} {path.error_bound() / 1e6:12.6f} {ratio}")
        prev = dev
        if args.outdir:
            args.outdir.mkdir(parents=True, exist_ok=True)
            path.to_csv(args.outdir / f"collateral_{per_year}.csv")


if __name__ == "__main__":
    main()
