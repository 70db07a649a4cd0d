"""
Closed-form valuation of deterministic claims under counterparty risk.

Five conventions are supported: default-free, unilateral (only one name can
default), and bilateral with either a risk-free or a substitution closeout.
Everything reduces to one primitive: for a deterministic schedule the
risk-free value on each inter-cashflow interval (s_{j-1}, s_j] has a fixed
sign, and ``D(t, u) * V0(u)`` is constant in ``u`` there. Expected
default-time exposures are therefore finite sums of interval probabilities,
with no quadrature.

Values are reported from one party's perspective; the borrower's view is
computed by exchanging roles (negated schedule, swapped model), not by
flipping a sign, so the antisymmetry is a real check.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from enum import Enum

import numpy as np

from bilateral_closeout.credit_model import (
    Dependence,
    EventProbabilities,
    Information,
    InconsistentContextError,
    Party,
    PartyCredit,
    SimultaneousDefaultError,
    TwoNameModel,
    ValuationContext,
    alive_at_valuation,
    conditional_survival,
    first_default_cdf,
    first_to_default_probs,
)
from bilateral_closeout.instruments import CashflowSchedule, RateCurve, risk_free_value


class CloseoutConvention(str, Enum):
    RISK_FREE_VALUE = "risk-free"
    UNILATERAL_BORROWER_RISK = "unilateral-borrower"
    UNILATERAL_LENDER_RISK = "unilateral-lender"
    BILATERAL_RISK_FREE_CLOSEOUT = "risk-free-closeout"
    BILATERAL_SUBSTITUTION_CLOSEOUT = "substitution-closeout"

    def swapped(self) -> CloseoutConvention:
        swap = {
            CloseoutConvention.UNILATERAL_BORROWER_RISK: CloseoutConvention.UNILATERAL_LENDER_RISK,
            CloseoutConvention.UNILATERAL_LENDER_RISK: CloseoutConvention.UNILATERAL_BORROWER_RISK,
        }
        return swap.get(self, self)


BILATERAL = (
    CloseoutConvention.BILATERAL_RISK_FREE_CLOSEOUT,
    CloseoutConvention.BILATERAL_SUBSTITUTION_CLOSEOUT,
)


class MixedSignScheduleError(ValueError):
    """Closed forms need a schedule whose cashflows all have the same sign."""


@dataclass(frozen=True)
class Decomposition:
    """Value split, in currency.

    ``survival_leg`` is what is paid in full, ``recovery_leg`` what is paid
    through a recovery fraction. ``cva`` and ``dva`` are the adjustments to
    the default-free value for the counterparty's and one's own default.
    """

    survival_leg: float
    recovery_leg: float
    cva: float
    dva: float


@dataclass(frozen=True)
class PricingResult:
    value: float
    convention: CloseoutConvention
    decomposition: Decomposition
    event_probs: EventProbabilities
    context: ValuationContext
    perspective: Party
    risk_free_value: float
    notional: float

    def to_dict(self) -> dict:
        return {
            "value": self.value,
            "convention": self.convention.value,
            "perspective": self.perspective.value,
            "risk_free_value": self.risk_free_value,
            "notional": self.notional,
            "decomposition": asdict(self.decomposition),
            "event_probs": asdict(self.event_probs),
            "context": {
                "time": self.context.time,
                "information": self.context.information.value,
                "party": None if self.context.party is None else self.context.party.value,
                "default_time": self.context.default_time,
            },
        }


def default_weighted_exposure(schedule: CashflowSchedule, curve: RateCurve, t, cdf, positive: bool):
    """E_t[1{default in (t, T]} D(t, tau) (+/-V0(tau))^+] per unit of loss.

    ``cdf(h)`` is the probability that the relevant default event happens in
    (t, h]; it must broadcast against ``t``, which may be an array (one
    valuation time per Monte Carlo path). ``positive`` selects the positive
    part of V0 (exposure to the borrower) or of -V0 (exposure of the
    borrower to the lender).
    """
    t = np.asarray(t, dtype=float)
    weights = schedule.tail_weights(curve)
    weights = np.maximum(weights, 0.0) if positive else np.maximum(-weights, 0.0)
    total = np.zeros(t.shape)
    start = 0.0
    for s_j, k in zip(schedule.times, weights):
        if k > 0:
            lo = np.maximum(t, start)
            total = total + np.where(s_j > t, k * (cdf(s_j) - cdf(lo)), 0.0)
        start = s_j
    out = np.exp(curve.short_rate * t) * total
    return float(out) if out.ndim == 0 else out


def _marginal_cdf(model: TwoNameModel, party: Party, ctx: ValuationContext):
    return lambda h: 1.0 - conditional_survival(model, party, h, ctx)


def _first_cdf(model: TwoNameModel, party: Party, ctx: ValuationContext):
    return lambda h: first_default_cdf(model, party, h, ctx)


def _resolve_context(t: float | None, ctx: ValuationContext | None) -> ValuationContext:
    if ctx is None:
        if t:
            raise ValueError(
                f"valuation at t={t} > 0 needs an explicit ValuationContext; "
                "silent conditioning is not allowed"
            )
        return ValuationContext.both_alive(0.0)
    if t is not None and t != ctx.time:
        raise ValueError(f"t={t} disagrees with context time {ctx.time}")
    return ctx


def _require_alive(model: TwoNameModel, parties, ctx: ValuationContext) -> None:
    for party in parties:
        if not alive_at_valuation(model, party, ctx):
            raise InconsistentContextError(
                f"the {party.value} is not known to be alive at t={ctx.time} under "
                f"{ctx.information.value} conditioning"
            )


def _price_lender_view(
    schedule: CashflowSchedule,
    curve: RateCurve,
    model: TwoNameModel,
    convention: CloseoutConvention,
    ctx: ValuationContext,
) -> PricingResult:
    sign = schedule.sign
    if sign == 0 and convention is not CloseoutConvention.RISK_FREE_VALUE:
        raise MixedSignScheduleError(
            "closed forms need a single-sign schedule; price mixed-sign claims "
            "with monte_carlo.mc_price"
        )
    t = ctx.time
    base = risk_free_value(schedule, curve, t)
    exp_b = exp_a = 0.0

    C = CloseoutConvention
    if convention is C.UNILATERAL_BORROWER_RISK:
        _require_alive(model, [Party.BORROWER], ctx)
        exp_b = default_weighted_exposure(
            schedule, curve, t, _marginal_cdf(model, Party.BORROWER, ctx), positive=True
        )
    elif convention is C.UNILATERAL_LENDER_RISK:
        _require_alive(model, [Party.LENDER], ctx)
        exp_a = default_weighted_exposure(
            schedule, curve, t, _marginal_cdf(model, Party.LENDER, ctx), positive=False
        )
    elif convention is C.BILATERAL_RISK_FREE_CLOSEOUT:
        _require_bilateral(model, ctx)
        exp_b = default_weighted_exposure(
            schedule, curve, t, _first_cdf(model, Party.BORROWER, ctx), positive=True
        )
        exp_a = default_weighted_exposure(
            schedule, curve, t, _first_cdf(model, Party.LENDER, ctx), positive=False
        )
    elif convention is C.BILATERAL_SUBSTITUTION_CLOSEOUT:
        _require_bilateral(model, ctx)
        # Iterated expectations collapse the survivor-risky closeout: only the
        # net payer's default matters, whatever the other name does.
        if sign > 0:
            exp_b = default_weighted_exposure(
                schedule, curve, t, _marginal_cdf(model, Party.BORROWER, ctx), positive=True
            )
        else:
            exp_a = default_weighted_exposure(
                schedule, curve, t, _marginal_cdf(model, Party.LENDER, ctx), positive=False
            )

    rb, ra = model.borrower.recovery, model.lender.recovery
    cva = model.borrower.loss * exp_b
    dva = model.lender.loss * exp_a
    decomposition = Decomposition(
        survival_leg=base - exp_b + exp_a,
        recovery_leg=rb * exp_b - ra * exp_a,
        cva=cva,
        dva=dva,
    )
    probs = _safe_event_probs(model, max(schedule.maturity, t), ctx)
    return PricingResult(
        value=base - cva + dva,
        convention=convention,
        decomposition=decomposition,
        event_probs=probs,
        context=ctx,
        perspective=Party.LENDER,
        risk_free_value=base,
        notional=schedule.notional,
    )


def _require_bilateral(model: TwoNameModel, ctx: ValuationContext) -> None:
    if ctx.information is Information.DEFAULTED:
        raise InconsistentContextError(
            "bilateral prices assume both names alive; after a default use the "
            "scenario module for the closeout settlement"
        )
    _require_alive(model, list(Party), ctx)


def _safe_event_probs(model, horizon, ctx) -> EventProbabilities:
    try:
        return first_to_default_probs(model, horizon, ctx)
    except InconsistentContextError:
        nan = float("nan")
        return EventProbabilities(nan, nan, nan)


def price(
    schedule: CashflowSchedule,
    curve: RateCurve,
    model: TwoNameModel,
    convention: CloseoutConvention,
    t: float | None = None,
    ctx: ValuationContext | None = None,
    perspective: Party = Party.LENDER,
) -> PricingResult:
    """Value of ``schedule`` under ``convention`` seen by ``perspective``.

    Raises
    ------
    MixedSignScheduleError
        For schedules with cashflows of both signs (except the default-free
        convention).
    ValueError
        For ``t > 0`` without a context, or a context inconsistent with the
        model or the convention.
    """
    convention = CloseoutConvention(convention)
    ctx = _resolve_context(t, ctx)
    if Party(perspective) is Party.LENDER:
        return _price_lender_view(schedule, curve, model, convention, ctx)
    mirrored = _price_lender_view(
        schedule.negated(), curve, model.swapped(), convention.swapped(), ctx.swapped()
    )
    probs = mirrored.event_probs
    return PricingResult(
        value=mirrored.value,
        convention=convention,
        decomposition=mirrored.decomposition,
        event_probs=EventProbabilities(probs.no_default, probs.borrower_first, probs.lender_first),
        context=ctx,
        perspective=Party.BORROWER,
        risk_free_value=mirrored.risk_free_value,
        notional=schedule.notional,
    )


def price_unilateral(schedule, curve, model, risky_party: Party, t=None, ctx=None, perspective=Party.LENDER):
    """Only ``risky_party`` can default; the other name is treated as default-free.

    Examples
    --------
    >>> from bilateral_closeout.credit_model import PartyCredit
    >>> m = TwoNameModel(PartyCredit(0.2, 0.0), PartyCredit(0.04))
    >>> bond = CashflowSchedule.bond(5.0, 1e9)
    >>> round(price_unilateral(bond, RateCurve(0.03), m, Party.BORROWER).value / 1e6, 1)
    316.6
    """
    convention = (
        CloseoutConvention.UNILATERAL_BORROWER_RISK
        if Party(risky_party) is Party.BORROWER
        else CloseoutConvention.UNILATERAL_LENDER_RISK
    )
    return price(schedule, curve, model, convention, t, ctx, perspective)


def price_bilateral_risk_free_closeout(schedule, curve, model, t=None, ctx=None, perspective=Party.LENDER):
    """Both names can default; the closeout at first default is the default-free value."""
    return price(schedule, curve, model, CloseoutConvention.BILATERAL_RISK_FREE_CLOSEOUT, t, ctx, perspective)


def price_bilateral_substitution_closeout(schedule, curve, model, t=None, ctx=None, perspective=Party.LENDER):
    """Both names can default; the closeout includes the survivor's own default risk.

    For a single-sign schedule this equals the unilateral price with only the
    net payer risky, for either dependence structure.
    """
    return price(schedule, curve, model, CloseoutConvention.BILATERAL_SUBSTITUTION_CLOSEOUT, t, ctx, perspective)


def price_surface(
    curve: RateCurve,
    maturity: float,
    recovery_borrower: float,
    dependence: Dependence,
    lender_grid,
    borrower_grid,
    convention: CloseoutConvention,
    recovery_lender: float = 0.0,
    workers: int | None = None,
) -> np.ndarray:
    """Per-unit-notional bond prices; rows are lender intensities, columns borrower.

    Cells that the model rejects (comonotonic names with equal positive
    intensities) are NaN. Output does not depend on ``workers``.
    """
    lender_grid = np.asarray(lender_grid, dtype=float)
    borrower_grid = np.asarray(borrower_grid, dtype=float)
    if lender_grid.size == 0 or borrower_grid.size == 0:
        raise ValueError("intensity grids must be non-empty")
    if (lender_grid < 0).any() or (borrower_grid < 0).any():
        raise ValueError("intensities must be >= 0")
    bond = CashflowSchedule.bond(maturity)
    convention = CloseoutConvention(convention)

    def cell(ij):
        i, j = ij
        try:
            model = TwoNameModel(
                PartyCredit(borrower_grid[j], recovery_borrower),
                PartyCredit(lender_grid[i], recovery_lender),
                dependence,
            )
        except SimultaneousDefaultError:
            return float("nan")
        return price(bond, curve, model, convention).value

    cells = [(i, j) for i in range(lender_grid.size) for j in range(borrower_grid.size)]
    if workers and workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            values = list(pool.map(cell, cells))
    else:
        values = [cell(ij) for ij in cells]
    return np.array(values).reshape(lender_grid.size, borrower_grid.size)
