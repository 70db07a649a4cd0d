"""
Revaluation of a claim just before and just after a default event.

The value before is reported two ways: at the exact limit (both names alive
at the default time itself) and one day earlier, at ``tau - epsilon``. The
value after is what the survivor holds once the contract is settled at the
default under the chosen closeout convention.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass

from bilateral_closeout.closeout_pricing import CloseoutConvention, price
from bilateral_closeout.credit_model import (
    Dependence,
    Party,
    TwoNameModel,
    ValuationContext,
)
from bilateral_closeout.instruments import CashflowSchedule, RateCurve, risk_free_value

ONE_DAY = 1.0 / 365.0

C = CloseoutConvention


class ImpossibleOrderingError(ValueError):
    """The requested party cannot be the first to default under the model."""


@dataclass(frozen=True)
class ScenarioReport:
    """Values around one default event, from ``perspective``'s side.

    ``value_before`` is the limit with both names alive at the default time;
    ``value_before_window`` is the value one window ``epsilon`` earlier.
    The two jumps are measured against each of them.
    """

    convention: CloseoutConvention
    default_party: Party
    default_time: float
    perspective: Party
    value_before: float
    value_after: float
    jump: float
    value_before_window: float
    jump_window: float
    epsilon: float = ONE_DAY

    def to_dict(self) -> dict:
        out = asdict(self)
        for key in ("convention", "default_party", "perspective"):
            out[key] = out[key].value
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def to_table(self, unit: float = 1e6) -> str:
        label = f"{self.perspective.value} view, {self.convention.value}, " \
                f"{self.default_party.value} defaults at {self.default_time:g}y"
        rows = [
            ("before (limit)", self.value_before),
            (f"before (t - {self.epsilon:.6g})", self.value_before_window),
            ("after", self.value_after),
            ("jump", self.jump),
            ("jump vs window", self.jump_window),
        ]
        width = max(len(name) for name, _ in rows)
        lines = [label] + [f"  {name:<{width}}  {value / unit:12.3f} mn" for name, value in rows]
        return "\n".join(lines)


def _settle(defaulter: Party, x: float, model: TwoNameModel) -> float:
    """Lender's settlement of a closeout amount ``x`` when ``defaulter`` defaults."""
    if defaulter is Party.LENDER:
        return max(x, 0.0) - model.lender.recovery * max(-x, 0.0)
    return model.borrower.recovery * max(x, 0.0) - max(-x, 0.0)


def _before_context(model: TwoNameModel, default_party: Party, t: float) -> ValuationContext:
    if model.dependence is Dependence.COMONOTONIC:
        return ValuationContext.survived_until(default_party, t)
    return ValuationContext.both_alive(t)


def _value_after_lender_view(schedule, curve, model, convention, default_party, tau) -> float:
    posterior = ValuationContext.defaulted(default_party, tau)
    survivor = default_party.other
    v0 = risk_free_value(schedule, curve, tau)

    if convention is C.RISK_FREE_VALUE:
        return v0
    if convention is C.BILATERAL_RISK_FREE_CLOSEOUT:
        return _settle(default_party, v0, model)
    if convention is C.BILATERAL_SUBSTITUTION_CLOSEOUT:
        # survivor-risky replacement value under the post-default law
        closeout = _unilateral(schedule, curve, model, survivor, posterior)
        return _settle(default_party, closeout, model)

    risky = Party.BORROWER if convention is C.UNILATERAL_BORROWER_RISK else Party.LENDER
    if default_party is risky:
        return _settle(default_party, v0, model)
    # a default the convention ignores: the claim lives on, priced under the new information
    return _unilateral(schedule, curve, model, risky, posterior)


def _unilateral(schedule, curve, model, risky: Party, ctx) -> float:
    convention = C.UNILATERAL_BORROWER_RISK if risky is Party.BORROWER else C.UNILATERAL_LENDER_RISK
    return price(schedule, curve, model, convention, ctx=ctx).value


def revalue_around_default(
    schedule: CashflowSchedule,
    curve: RateCurve,
    model: TwoNameModel,
    convention: CloseoutConvention,
    default_party: Party,
    default_time: float,
    perspective: Party = Party.LENDER,
    epsilon: float = ONE_DAY,
) -> ScenarioReport:
    """Value before and after ``default_party`` defaults at ``default_time``.

    Examples
    --------
    >>> from bilateral_closeout.credit_model import PartyCredit
    >>> m = TwoNameModel(PartyCredit(0.2), PartyCredit(0.04))
    >>> rep = revalue_around_default(CashflowSchedule.bond(5.0, 1e9), RateCurve(0.03), m,
    ...     "risk-free-closeout", Party.LENDER, 2.5, perspective=Party.BORROWER)
    >>> [round(x / 1e6, 1) for x in (rep.value_before, rep.value_after, rep.jump)]
    [-578.9, -927.7, -348.8]
    """
    convention = CloseoutConvention(convention)
    default_party, perspective = Party(default_party), Party(perspective)
    if not 0 < default_time < schedule.maturity:
        raise ValueError(f"default time must lie in (0, {schedule.maturity}), got {default_time}")
    if epsilon <= 0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    if not model.possible_first_defaulter(default_party):
        raise ImpossibleOrderingError(
            f"the {default_party.value} cannot default first under this model "
            f"(intensities: lender {model.lender.intensity}, borrower {model.borrower.intensity}, "
            f"{model.dependence.value})"
        )

    def before(t):
        ctx = _before_context(model, default_party, t)
        return price(schedule, curve, model, convention, ctx=ctx, perspective=perspective).value

    value_before = before(default_time)
    value_before_window = before(max(default_time - epsilon, 0.0))
    after = _value_after_lender_view(schedule, curve, model, convention, default_party, default_time)
    value_after = after if perspective is Party.LENDER else -after
    return ScenarioReport(
        convention=convention,
        default_party=default_party,
        default_time=default_time,
        perspective=perspective,
        value_before=value_before,
        value_after=value_after,
        jump=value_after - value_before,
        value_before_window=value_before_window,
        jump_window=value_after - value_before_window,
        epsilon=epsilon,
    )
