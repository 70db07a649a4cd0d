"""Bilateral counterparty-risk valuation under risk-free and substitution closeouts."""

from bilateral_closeout.closeout_pricing import (
    CloseoutConvention,
    Decomposition,
    MixedSignScheduleError,
    PricingResult,
    price,
    price_bilateral_risk_free_closeout,
    price_bilateral_substitution_closeout,
    price_surface,
    price_unilateral,
)
from bilateral_closeout.credit_model import (
    Dependence,
    EventProbabilities,
    InconsistentContextError,
    Party,
    PartyCredit,
    SimultaneousDefaultError,
    TwoNameModel,
    ValuationContext,
    first_to_default_probs,
    survival_prob,
)
from bilateral_closeout.instruments import CashflowSchedule, RateCurve, risk_free_value
from bilateral_closeout.monte_carlo import McConfig, McEstimate, mc_price
from bilateral_closeout.scenario_contagion import ScenarioReport, revalue_around_default
from bilateral_closeout.collateral import CollateralPath, closeout_match, simulate_collateral

__all__ = [
    "CashflowSchedule",
    "CollateralPath",
    "CloseoutConvention",
    "Decomposition",
    "Dependence",
    "EventProbabilities",
    "InconsistentContextError",
    "McConfig",
    "McEstimate",
    "MixedSignScheduleError",
    "Party",
    "PartyCredit",
    "PricingResult",
    "RateCurve",
    "ScenarioReport",
    "SimultaneousDefaultError",
    "TwoNameModel",
    "ValuationContext",
    "closeout_match",
    "first_to_default_probs",
    "mc_price",
    "price",
    "price_bilateral_risk_free_closeout",
    "price_bilateral_substitution_closeout",
    "price_surface",
    "price_unilateral",
    "revalue_around_default",
    "risk_free_value",
    "simulate_collateral",
    "survival_prob",
]
