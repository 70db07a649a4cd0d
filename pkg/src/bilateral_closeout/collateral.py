"""
Continuous collateralization of a single-cashflow claim.

The net borrower posts collateral equal to the risk-free value of the claim,
C(t) = exp(-r (T - t)) * notional, and keeps it there by paying r C dt to
the lender; the lender pays the same r C dt back as interest on the
collateral, so no net money moves. The balance is accrued with an explicit
Euler scheme, and the analytic target is exposed alongside.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from bilateral_closeout.closeout_pricing import BILATERAL, CloseoutConvention, price
from bilateral_closeout.credit_model import (
    Party,
    TwoNameModel,
    ValuationContext,
    survival_prob,
)
from bilateral_closeout.instruments import CashflowSchedule, RateCurve

CSV_COLUMNS = ("t", "C", "settlement_flow", "interest_flow", "net_flow")


@dataclass(frozen=True)
class CollateralPath:
    """Euler-accrued collateral balance on a time grid.

    Flow ``i`` belongs to the step starting at ``times[i]``; the last grid
    point carries zero flows.
    """

    times: np.ndarray
    balance: np.ndarray
    settlement_flow: np.ndarray
    interest_flow: np.ndarray
    net_flow: np.ndarray
    short_rate: float
    maturity: float
    notional: float
    dt: float

    def analytic_balance(self, t):
        return self.notional * np.exp(-self.short_rate * (self.maturity - np.asarray(t, dtype=float)))

    def balance_at(self, t: float) -> float:
        """Discrete balance at any time in [0, T], with a partial Euler step."""
        if not 0 <= t <= self.maturity:
            raise ValueError(f"time {t} is outside the collateral grid [0, {self.maturity}]")
        i = int(np.searchsorted(self.times, t, side="right")) - 1
        return float(self.balance[i] * (1.0 + self.short_rate * (t - self.times[i])))

    def max_deviation(self) -> float:
        return float(np.max(np.abs(self.balance - self.analytic_balance(self.times))))

    def error_bound(self) -> float:
        """K * dt * notional with K = r^2 T exp(|r| T)."""
        r, T = self.short_rate, self.maturity
        return r * r * T * math.exp(abs(r) * T) * self.dt * self.notional

    def rows(self):
        return zip(self.times, self.balance, self.settlement_flow, self.interest_flow, self.net_flow)

    def to_csv(self, target=None) -> str:
        """CSV with columns t, C, settlement_flow, interest_flow, net_flow."""
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for row in self.rows():
            writer.writerow([repr(float(x)) for x in row])
        text = buf.getvalue()
        if target is not None:
            Path(target).write_text(text)
        return text


def simulate_collateral(curve: RateCurve, maturity: float, notional: float = 1.0, dt: float = 1 / 365) -> CollateralPath:
    """Accrue dC = r C dt from C(0) = exp(-r T) * notional up to T.

    The grid steps by ``dt``; a final partial step lands exactly on T.
    """
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    if not maturity > 0:
        raise ValueError(f"maturity must be positive, got {maturity}")
    r = curve.short_rate
    n = max(1, math.ceil(maturity / dt - 1e-9))
    times = np.minimum(np.arange(n + 1) * dt, maturity)
    times[-1] = maturity
    steps = np.diff(times)

    growth = np.concatenate([[1.0], np.cumprod(1.0 + r * steps)])
    balance = notional * math.exp(-r * maturity) * growth

    settlement = np.zeros(n + 1)
    settlement[:-1] = r * balance[:-1] * steps
    interest = settlement.copy()
    return CollateralPath(
        times=times,
        balance=balance,
        settlement_flow=settlement,
        interest_flow=interest,
        net_flow=settlement - interest,
        short_rate=r,
        maturity=float(maturity),
        notional=float(notional),
        dt=float(dt),
    )


@dataclass(frozen=True)
class CloseoutMatch:
    """Collateral against closeout at one default.

    ``contract_view_residual``: what the lender's closeout claim is worth
    minus what the posted collateral is worth to the borrower under the
    contract. ``money_view_residual``: collateral held minus the closeout
    amount.
    """

    collateral_value: float
    collateral_value_discrete: float
    closeout_amount: float
    borrower_collateral_claim: float
    contract_view_residual: float
    money_view_residual: float

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def closeout_match(
    path: CollateralPath,
    curve: RateCurve,
    model: TwoNameModel,
    convention: CloseoutConvention,
    default_party: Party,
    default_time: float,
) -> CloseoutMatch:
    """Compare the collateral with the closeout when ``default_party`` defaults first.

    The claim is the collateralized single cashflow: the borrower owes
    ``path.notional`` at ``path.maturity``.
    """
    convention = CloseoutConvention(convention)
    default_party = Party(default_party)
    if convention not in BILATERAL:
        raise ValueError("closeout matching needs a bilateral closeout convention")
    if not 0 <= default_time < path.maturity:
        raise ValueError(f"default time {default_time} is beyond the collateral grid [0, {path.maturity})")
    if abs(curve.short_rate - path.short_rate) > 0:
        raise ValueError("curve and collateral path use different rates")
    if not model.possible_first_defaulter(default_party):
        raise ValueError(f"the {default_party.value} cannot default first under this model")

    bond = CashflowSchedule.bond(path.maturity, path.notional)
    tau = default_time
    collateral = float(path.analytic_balance(tau))
    discrete = path.balance_at(tau)
    posterior = ValuationContext.defaulted(default_party, tau)

    if convention is CloseoutConvention.BILATERAL_RISK_FREE_CLOSEOUT:
        closeout = price(bond, curve, model, CloseoutConvention.RISK_FREE_VALUE, ctx=posterior).value
    else:
        survivor_risky = (
            CloseoutConvention.UNILATERAL_BORROWER_RISK
            if default_party is Party.LENDER
            else CloseoutConvention.UNILATERAL_LENDER_RISK
        )
        closeout = price(bond, curve, model, survivor_risky, ctx=posterior).value

    if default_party is Party.BORROWER:
        # the lender keeps collateral worth exactly the residual claim
        claim = collateral
    else:
        # the borrower gets the collateral back at T only if it survives to T
        alive = survival_prob(model, Party.BORROWER, path.maturity, posterior)
        claim = float(curve.discount(tau, path.maturity)) * alive * path.notional

    return CloseoutMatch(
        collateral_value=collateral,
        collateral_value_discrete=discrete,
        closeout_amount=closeout,
        borrower_collateral_claim=claim,
        contract_view_residual=closeout - claim,
        money_view_residual=collateral - closeout,
    )
