"""
Two-name flat-intensity default model.

Party ``LENDER`` is the investor A (the side whose values we report by
default); party ``BORROWER`` is the counterparty B. Each default time is
exponential with a flat intensity. The pair is coupled either independently
or comonotonically, in which case both times are driven by a single standard
exponential trigger ``xi``: ``tau_X = xi / lambda_X``.

Conditioning at a valuation time ``t > 0`` is explicit through
:class:`ValuationContext`. Only three kinds of information are ever needed:
both names alive at ``t``, one name known to have survived to ``t``, and one
name known to have defaulted at ``s <= t``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np


class Party(str, Enum):
    LENDER = "lender"
    BORROWER = "borrower"

    @property
    def other(self) -> Party:
        return Party.BORROWER if self is Party.LENDER else Party.LENDER


class Dependence(str, Enum):
    INDEPENDENT = "independent"
    COMONOTONIC = "comonotonic"


class SimultaneousDefaultError(ValueError):
    """Comonotonic names with equal positive intensities default together."""


class InconsistentContextError(ValueError):
    """The conditioning information cannot occur under the model."""


@dataclass(frozen=True)
class PartyCredit:
    """Flat hazard rate and recovery fraction of one name."""

    intensity: float
    recovery: float = 0.0

    def __post_init__(self) -> None:
        if not math.isfinite(self.intensity) or self.intensity < 0:
            raise ValueError(f"intensity must be finite and >= 0, got {self.intensity}")
        if not 0.0 <= self.recovery <= 1.0:
            raise ValueError(f"recovery must be in [0, 1], got {self.recovery}")

    @property
    def loss(self) -> float:
        return 1.0 - self.recovery


@dataclass(frozen=True)
class TwoNameModel:
    """Joint law of the borrower's and lender's default times.

    Comonotonic coupling with ``lambda_A == lambda_B > 0`` is rejected: the
    defaults would be simultaneous and the settlement rules need a strict
    first defaulter. A zero intensity means the name never defaults, which
    is well defined under either coupling.
    """

    borrower: PartyCredit
    lender: PartyCredit
    dependence: Dependence = Dependence.INDEPENDENT

    def __post_init__(self) -> None:
        object.__setattr__(self, "dependence", Dependence(self.dependence))
        if (
            self.dependence is Dependence.COMONOTONIC
            and self.borrower.intensity == self.lender.intensity
            and self.borrower.intensity > 0
        ):
            raise SimultaneousDefaultError(
                "simultaneous default unsupported: comonotonic names with equal intensities"
            )

    def credit(self, party: Party) -> PartyCredit:
        return self.lender if party is Party.LENDER else self.borrower

    def intensity(self, party: Party) -> float:
        return self.credit(party).intensity

    def swapped(self) -> TwoNameModel:
        """The same model with the two roles exchanged."""
        return TwoNameModel(borrower=self.lender, lender=self.borrower, dependence=self.dependence)

    def possible_first_defaulter(self, party: Party) -> bool:
        """Whether ``party`` can be the first to default with positive probability."""
        lam = self.intensity(party)
        if lam == 0:
            return False
        if self.dependence is Dependence.COMONOTONIC:
            return lam > self.intensity(party.other)
        return True


class Information(str, Enum):
    BOTH_ALIVE = "both_alive"
    SURVIVED_UNTIL = "survived_until"
    DEFAULTED = "defaulted"


@dataclass(frozen=True)
class ValuationContext:
    """Valuation time plus what is known about the two names at that time.

    ``DEFAULTED`` means ``party`` was the first to default, at
    ``default_time``, and the other name is still alive at ``time``.
    """

    time: float = 0.0
    information: Information = Information.BOTH_ALIVE
    party: Party | None = None
    default_time: float | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "information", Information(self.information))
        if self.party is not None:
            object.__setattr__(self, "party", Party(self.party))
        if not self.time >= 0:
            raise ValueError(f"valuation time must be >= 0, got {self.time}")
        if self.information is not Information.BOTH_ALIVE and self.party is None:
            raise ValueError(f"{self.information.value} context needs a party")
        if self.information is Information.DEFAULTED:
            if self.default_time is None or not 0 <= self.default_time <= self.time:
                raise ValueError(
                    f"default time must lie in [0, {self.time}], got {self.default_time}"
                )

    @classmethod
    def both_alive(cls, t: float = 0.0) -> ValuationContext:
        return cls(t, Information.BOTH_ALIVE)

    @classmethod
    def survived_until(cls, party: Party, t: float) -> ValuationContext:
        return cls(t, Information.SURVIVED_UNTIL, Party(party))

    @classmethod
    def defaulted(cls, party: Party, s: float, t: float | None = None) -> ValuationContext:
        return cls(s if t is None else t, Information.DEFAULTED, Party(party), s)

    def swapped(self) -> ValuationContext:
        if self.party is None:
            return self
        return ValuationContext(self.time, self.information, self.party.other, self.default_time)


@dataclass(frozen=True)
class EventProbabilities:
    """Partition of the horizon into no default / lender first / borrower first."""

    no_default: float
    lender_first: float
    borrower_first: float

    def first(self, party: Party) -> float:
        return self.lender_first if party is Party.LENDER else self.borrower_first


def conditional_survival(
    model: TwoNameModel,
    party: Party,
    horizon,
    ctx: ValuationContext,
):
    """Pr(tau_party > horizon | ctx) for scalar or array ``horizon``.

    No check that ``horizon >= ctx.time``; see :func:`survival_prob` for the
    validated scalar entry point.
    """
    h = np.asarray(horizon, dtype=float)
    lam = model.intensity(party)
    t = ctx.time
    info = ctx.information

    if info is Information.DEFAULTED:
        if ctx.party is party:
            return _out(np.where(ctx.default_time > h, 1.0, 0.0), horizon)
        _check_defaulted(model, ctx)
        if model.dependence is Dependence.COMONOTONIC:
            implied = model.intensity(ctx.party) * ctx.default_time / lam if lam > 0 else math.inf
            return _out(np.where(implied > h, 1.0, 0.0), horizon)
        return _out(np.exp(-lam * np.maximum(h - t, 0.0)), horizon)

    if model.dependence is Dependence.INDEPENDENT:
        known_alive = info is Information.BOTH_ALIVE or ctx.party is party
        start = t if known_alive else 0.0
        return _out(np.exp(-lam * np.maximum(h - start, 0.0)), horizon)

    # comonotonic: the information is xi > level
    if info is Information.BOTH_ALIVE:
        level = max(model.lender.intensity, model.borrower.intensity) * t
    else:
        level = model.intensity(ctx.party) * t
    return _out(np.minimum(1.0, np.exp(-(lam * h - level))), horizon)


def survival_prob(
    model: TwoNameModel,
    party: Party,
    horizon: float,
    ctx: ValuationContext | None = None,
) -> float:
    """Pr_t(tau_party > horizon) under the model and the conditioning in ``ctx``.

    Examples
    --------
    >>> m = TwoNameModel(PartyCredit(0.2), PartyCredit(0.04))
    >>> round(1 - survival_prob(m, Party.BORROWER, 5.0), 3)
    0.632
    """
    ctx = ctx or ValuationContext()
    if horizon < ctx.time:
        raise ValueError(f"horizon {horizon} precedes valuation time {ctx.time}")
    return float(conditional_survival(model, Party(party), horizon, ctx))


def default_prob(model: TwoNameModel, party: Party, horizon: float, ctx=None) -> float:
    return 1.0 - survival_prob(model, party, horizon, ctx)


def alive_at_valuation(model: TwoNameModel, party: Party, ctx: ValuationContext) -> bool:
    """True when ``ctx`` implies ``party`` has not defaulted by ``ctx.time``."""
    if ctx.information is Information.DEFAULTED and ctx.party is party:
        return False
    return float(conditional_survival(model, party, ctx.time, ctx)) == 1.0


def first_default_cdf(model: TwoNameModel, party: Party, horizon, ctx: ValuationContext):
    """Pr_t(party defaults first and by ``horizon``), scalar or array horizon.

    ``ctx`` must imply both names alive at ``ctx.time``.
    """
    _require_both_alive(model, ctx)
    h = np.asarray(horizon, dtype=float)
    t = ctx.time
    lam = model.intensity(party)
    lam_other = model.intensity(party.other)

    if model.dependence is Dependence.INDEPENDENT:
        total = lam + lam_other
        if total == 0:
            return _out(np.zeros_like(h), horizon)
        span = np.maximum(h - t, 0.0)
        return _out(lam / total * -np.expm1(-total * span), horizon)

    if lam <= lam_other:
        return _out(np.zeros_like(h), horizon)
    if ctx.information is Information.BOTH_ALIVE:
        level = lam * t
    else:
        level = model.intensity(ctx.party) * t
    return _out(-np.expm1(-np.maximum(lam * h - level, 0.0)), horizon)


def first_to_default_probs(
    model: TwoNameModel,
    horizon: float,
    ctx: ValuationContext | None = None,
) -> EventProbabilities:
    """Probabilities of {no default by horizon, lender first, borrower first}.

    After a default (``DEFAULTED`` context) the first defaulter is known and
    the triple is degenerate.

    Examples
    --------
    >>> m = TwoNameModel(PartyCredit(0.2), PartyCredit(0.04))
    >>> p = first_to_default_probs(m, 5.0)
    >>> [round(x, 2) for x in (p.no_default, p.lender_first, p.borrower_first)]
    [0.3, 0.12, 0.58]
    """
    ctx = ctx or ValuationContext()
    if horizon < ctx.time:
        raise ValueError(f"horizon {horizon} precedes valuation time {ctx.time}")
    if ctx.information is Information.DEFAULTED:
        _check_defaulted(model, ctx)
        lender = 1.0 if ctx.party is Party.LENDER else 0.0
        return EventProbabilities(0.0, lender, 1.0 - lender)
    p_lender = float(first_default_cdf(model, Party.LENDER, horizon, ctx))
    p_borrower = float(first_default_cdf(model, Party.BORROWER, horizon, ctx))
    if model.dependence is Dependence.COMONOTONIC and (p_lender == 0.0 or p_borrower == 0.0):
        # only one name can default first: make first = 1 - none hold exactly
        first = Party.LENDER if p_lender > 0 else Party.BORROWER
        _require_both_alive(model, ctx)
        none = float(conditional_survival(model, first, horizon, ctx))
        p = 1.0 - none
        return EventProbabilities(none, p, 0.0) if first is Party.LENDER else EventProbabilities(none, 0.0, p)
    return EventProbabilities(1.0 - p_lender - p_borrower, p_lender, p_borrower)


def survival_after_first_default(model: TwoNameModel, defaulter: Party, default_time, horizon):
    """Survivor's Pr(tau > horizon) right at the first default, vectorized.

    ``default_time`` may be an array of first-default times (one per path);
    the survivor is alive at the default time. No consistency checks.
    """
    s = np.asarray(default_time, dtype=float)
    h = np.asarray(horizon, dtype=float)
    lam = model.intensity(defaulter.other)
    if model.dependence is Dependence.COMONOTONIC:
        if lam == 0:
            return np.ones(np.broadcast(s, h).shape)
        with np.errstate(over="ignore"):
            implied = model.intensity(defaulter) * s / lam
        return np.where(implied > h, 1.0, 0.0)
    return np.exp(-lam * np.maximum(h - s, 0.0))


def _require_both_alive(model: TwoNameModel, ctx: ValuationContext) -> None:
    for party in Party:
        if not alive_at_valuation(model, party, ctx):
            raise InconsistentContextError(
                f"context {ctx.information.value} at t={ctx.time} does not imply "
                f"the {party.value} is alive"
            )


def _check_defaulted(model: TwoNameModel, ctx: ValuationContext) -> None:
    defaulter = ctx.party
    if model.intensity(defaulter) == 0:
        raise InconsistentContextError(f"the {defaulter.value} has zero intensity and cannot default")
    if model.dependence is Dependence.COMONOTONIC:
        lam_s = model.intensity(defaulter.other)
        if lam_s == 0:
            return
        implied = model.intensity(defaulter) * ctx.default_time / lam_s
        if implied <= ctx.time:
            raise InconsistentContextError(
                f"comonotonic map puts the {defaulter.other.value}'s default at {implied:.6g}, "
                f"not after t={ctx.time}"
            )


def _out(values: np.ndarray, like):
    return float(values) if np.ndim(like) == 0 else values
