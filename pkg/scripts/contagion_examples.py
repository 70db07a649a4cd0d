"""Print the values around a lender default at 2.5y for both closeouts and couplings."""

import argparse

from bilateral_closeout.closeout_pricing import CloseoutConvention
from bilateral_closeout.credit_model import Dependence, Party, PartyCredit, TwoNameModel
from bilateral_closeout.instruments import CashflowSchedule, RateCurve
from bilateral_closeout.scenario_contagion import revalue_around_default


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--default-time", type=float, default=2.5)
    ap.add_argument("--format", choices=("table", "json"), default="table")
    args = ap.parse_args()

    bond, curve = CashflowSchedule.bond(5.0, 1e9), RateCurve(0.03)
    cases = [
        ("independent", TwoNameModel(PartyCredit(0.2), PartyCredit(0.04)), Party.BORROWER),
        ("comonotonic", TwoNameModel(PartyCredit(0.036), PartyCredit(0.04), Dependence.COMONOTONIC), Party.LENDER),
    ]
    for label, model, view in cases:
        for conv in (CloseoutConvention.BILATERAL_RISK_FREE_CLOSEOUT, CloseoutConvention.BILATERAL_SUBSTITUTION_CLOSEOUT):
            rep = revalue_around_default(bond, curve, model, conv, Party.LENDER, args.default_time, view)
            if args.format == "json":
                print(rep.to_json())
            else:
                print(f"--- {label}, {conv.value}")
                print(rep.to_table())


if __name__ == "__main__":
    main()
