import os

import pytest
from hypothesis import HealthCheck, settings

from bilateral_closeout import CashflowSchedule, Dependence, PartyCredit, RateCurve, TwoNameModel

settings.register_profile("default", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("thorough", max_examples=500, deadline=None)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

NOTIONAL = 1e9
MN = 1e6


@pytest.fixture
def bond():
    return CashflowSchedule.bond(5.0, NOTIONAL)


@pytest.fixture
def curve():
    return RateCurve(0.03)


@pytest.fixture
def base_model():
    """Independent, borrower 20%, lender 4%, zero recoveries."""
    return TwoNameModel(PartyCredit(0.2), PartyCredit(0.04))


@pytest.fixture
def como_model():
    """Comonotonic, borrower 3.6%, lender 4%: the lender always defaults first."""
    return TwoNameModel(PartyCredit(0.036), PartyCredit(0.04), Dependence.COMONOTONIC)
