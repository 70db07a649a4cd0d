"""Write price surfaces over a grid of lender and borrower intensities.

One CSV per (coupling, surface): risk-free closeout, substitution closeout
and their difference, per unit notional of the 5y zero-coupon bond.
"""

import argparse
from pathlib import Path

import numpy as np

from bilateral_closeout.cli import parse_grid
from bilateral_closeout.closeout_pricing import CloseoutConvention, price_surface
from bilateral_closeout.credit_model import Dependence
from bilateral_closeout.instruments import RateCurve


def write_csv(path, lender, borrower, values):
    header = "lambda_lender," + ",".join(f"{x:g}" for x in borrower)
    body = np.column_stack([lender, values])
    np.savetxt(path, body, delimiter=",", header=header, comments="", fmt="%.15g")


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--grid", type=parse_grid, default=parse_grid("0:1:0.02"))
    ap.add_argument("--r", type=float, default=0.03)
    ap.add_argument("--T", type=float, default=5.0)
    ap.add_argument("--recovery-borrower", type=float, default=0.0)
    ap.add_argument("--workers", type=int, default=4)
    ap.add_argument("--outdir", type=Path, default=Path("results/surfaces"))
    args = ap.parse_args()

    args.outdir.mkdir(parents=True, exist_ok=True)
    curve = RateCurve(args.r)
    for dep in Dependence:
        surfaces = {}
        for conv in (CloseoutConvention.BILATERAL_RISK_FREE_CLOSEOUT, CloseoutConvention.BILATERAL_SUBSTITUTION_CLOSEOUT):
            surfaces[conv.value] = price_surface(
                curve, args.T, args.recovery_borrower, dep, args.grid, args.grid, conv, workers=args.workers
            )
        surfaces["diff"] = surfaces["risk-free-closeout"] - surfaces["substitution-closeout"]
        for name, values in surfaces.items():
            target = args.outdir / f"{dep.value}_{name}.csv"
            write_csv(target, args.grid, args.grid, values)
            print(f"{target}: min {np.nanmin(values):.6f} max {np.nanmax(values):.6f}")
        spread = np.nanmax(np.nanmax(surfaces["substitution-closeout"], axis=0) - np.nanmin(surfaces["substitution-closeout"], axis=0))
        print(f"  {dep.value}: min diff {np.nanmin(surfaces['diff']):.3e}, substitution spread along lender axis {spread:.3e}")


if __name__ == "__main__":
    main()
