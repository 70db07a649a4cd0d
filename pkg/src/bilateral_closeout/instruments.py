"""Deterministic cashflow claims and flat-rate discounting."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np


@dataclass(frozen=True)
class RateCurve:
    """Flat continuously-compounded short rate."""

    short_rate: float = 0.03

    def __post_init__(self) -> None:
        if not math.isfinite(self.short_rate):
            raise ValueError(f"short rate must be finite, got {self.short_rate}")

    def discount(self, t, T):
        """D(t, T) = exp(-r (T - t)); accepts scalars or arrays."""
        return np.exp(-self.short_rate * (np.asarray(T, dtype=float) - np.asarray(t, dtype=float)))


@dataclass(frozen=True)
class CashflowSchedule:
    """Signed cashflows seen from the lender (party A).

    ``amounts`` are in notional units; a positive amount is paid by the
    borrower to the lender. The canonical bond is one cashflow ``(T, +1)``.
    """

    times: tuple[float, ...]
    amounts: tuple[float, ...]
    notional: float = 1.0

    def __post_init__(self) -> None:
        times = tuple(float(x) for x in self.times)
        amounts = tuple(float(x) for x in self.amounts)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "amounts", amounts)
        if not times or len(times) != len(amounts):
            raise ValueError("schedule needs matching, non-empty times and amounts")
        if times[0] <= 0 or any(b <= a for a, b in zip(times, times[1:])):
            raise ValueError(f"cashflow times must be positive and strictly increasing: {times}")
        if not all(math.isfinite(x) for x in times + amounts):
            raise ValueError("cashflow times and amounts must be finite")
        if not math.isfinite(self.notional) or self.notional <= 0:
            raise ValueError(f"notional must be positive, got {self.notional}")

    @classmethod
    def bond(cls, maturity: float, notional: float = 1.0) -> CashflowSchedule:
        return cls((maturity,), (1.0,), notional)

    @classmethod
    def from_dict(cls, doc: dict) -> CashflowSchedule:
        flows = doc["cashflows"]
        return cls(
            tuple(cf["t"] for cf in flows),
            tuple(cf["amount"] for cf in flows),
            float(doc.get("notional", 1.0)),
        )

    @classmethod
    def load(cls, path: str | Path) -> CashflowSchedule:
        return cls.from_dict(json.loads(Path(path).read_text()))

    def to_dict(self) -> dict:
        return {
            "notional": self.notional,
            "cashflows": [{"t": t, "amount": a} for t, a in zip(self.times, self.amounts)],
        }

    @property
    def maturity(self) -> float:
        return self.times[-1]

    @property
    def sign(self) -> int:
        """+1 if every amount is >= 0, -1 if every amount is <= 0, else 0."""
        if all(a >= 0 for a in self.amounts):
            return 1
        if all(a <= 0 for a in self.amounts):
            return -1
        return 0

    def negated(self) -> CashflowSchedule:
        """The same claim seen from the borrower."""
        return CashflowSchedule(self.times, tuple(-a for a in self.amounts), self.notional)

    def concat(self, other: CashflowSchedule) -> CashflowSchedule:
        if other.notional != self.notional:
            raise ValueError("cannot merge schedules with different notionals")
        merged: dict[float, float] = {}
        for t, a in zip(self.times + other.times, self.amounts + other.amounts):
            merged[t] = merged.get(t, 0.0) + a
        times = sorted(merged)
        return CashflowSchedule(tuple(times), tuple(merged[t] for t in times), self.notional)

    def tail_weights(self, curve: RateCurve) -> np.ndarray:
        """K_j = sum_{i >= j} c_i exp(-r s_i), in currency.

        On the open interval (s_{j-1}, s_j] the risk-free value is
        exp(r u) * K_j, so its sign is that of K_j and
        D(t, u) * V0(u) = exp(r t) * K_j does not depend on u.
        """
        weights = np.asarray(self.amounts) * np.exp(-curve.short_rate * np.asarray(self.times))
        return np.cumsum(weights[::-1])[::-1] * self.notional


def risk_free_value(schedule: CashflowSchedule, curve: RateCurve, t=0.0):
    """V0(t): discounted residual cashflows after ``t``, in currency.

    Cashflows at or before ``t`` are treated as already paid. ``t`` may be an
    array.
    """
    t_arr = np.asarray(t, dtype=float)
    total = np.zeros_like(t_arr)
    for s, a in zip(schedule.times, schedule.amounts):
        total = total + np.where(s > t_arr, a * curve.discount(t_arr, s), 0.0)
    total = total * schedule.notional
    return float(total) if np.ndim(t) == 0 else total


def discounted_cashflows(schedule: CashflowSchedule, curve: RateCurve, t, until):
    """Pi(t, until): cashflows in (t, until) discounted to ``t``; arrays allowed."""
    t_arr = np.asarray(t, dtype=float)
    u_arr = np.asarray(until, dtype=float)
    total = np.zeros(np.broadcast(t_arr, u_arr).shape)
    for s, a in zip(schedule.times, schedule.amounts):
        total = total + np.where((s > t_arr) & (s < u_arr), a * curve.discount(t_arr, s), 0.0)
    return total * schedule.notional
