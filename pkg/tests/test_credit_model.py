import math

import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from bilateral_closeout.credit_model import (
    Dependence,
    InconsistentContextError,
    Party,
    PartyCredit,
    SimultaneousDefaultError,
    TwoNameModel,
    ValuationContext,
    default_prob,
    first_to_default_probs,
    survival_prob,
)

intensity = st.floats(0.0, 5.0, allow_nan=False)
horizon = st.floats(0.01, 50.0)
dependence = st.sampled_from(list(Dependence))


def model_of(lam_b, lam_a, dep=Dependence.INDEPENDENT):
    return TwoNameModel(PartyCredit(lam_b), PartyCredit(lam_a), dep)


def test_marginal_default_probabilities(base_model):
    assert default_prob(base_model, Party.BORROWER, 5.0) == pytest.approx(0.632, abs=5e-4)
    assert default_prob(base_model, Party.LENDER, 5.0) == pytest.approx(0.181, abs=5e-4)


def test_zero_intensity_never_defaults():
    m = model_of(0.0, 0.3)
    assert survival_prob(m, Party.BORROWER, 1e6) == 1.0


def test_comonotonic_survived_until_lender(como_model):
    ctx = ValuationContext.survived_until(Party.LENDER, 2.5)
    p = survival_prob(como_model, Party.BORROWER, 5.0, ctx)
    assert p == pytest.approx(math.exp(-0.04 * (4.5 - 2.5)), abs=1e-12)
    assert p == pytest.approx(0.92312, abs=5e-6)


def test_comonotonic_defaulted_lender_is_degenerate(como_model):
    ctx = ValuationContext.defaulted(Party.LENDER, 2.5)
    assert survival_prob(como_model, Party.BORROWER, 5.0, ctx) == 0.0
    # borrower's implied default is 2.5 * 0.04 / 0.036 = 2.78y
    assert survival_prob(como_model, Party.BORROWER, 2.77, ctx) == 1.0
    assert survival_prob(como_model, Party.BORROWER, 2.78, ctx) == 0.0


def test_horizon_before_valuation_rejected(base_model):
    with pytest.raises(ValueError):
        survival_prob(base_model, Party.BORROWER, 1.0, ValuationContext.both_alive(2.0))
    with pytest.raises(ValueError):
        first_to_default_probs(base_model, 1.0, ValuationContext.both_alive(2.0))


def test_inconsistent_defaulted_context_rejected():
    # lender 4%, borrower 10%: borrower always first, so a lender default at 2
    # with the borrower alive at 3 is impossible
    m = model_of(0.1, 0.04, Dependence.COMONOTONIC)
    with pytest.raises(InconsistentContextError):
        survival_prob(m, Party.BORROWER, 5.0, ValuationContext.defaulted(Party.LENDER, 2.0, 3.0))


def test_defaulted_requires_default_before_valuation():
    with pytest.raises(ValueError):
        ValuationContext(1.0, "defaulted", Party.LENDER, 2.0)


def test_equal_comonotonic_intensities_rejected():
    with pytest.raises(SimultaneousDefaultError):
        model_of(0.1, 0.1, Dependence.COMONOTONIC)
    model_of(0.0, 0.0, Dependence.COMONOTONIC)  # no defaults at all is fine


def test_party_credit_validation():
    with pytest.raises(ValueError):
        PartyCredit(-0.1)
    with pytest.raises(ValueError):
        PartyCredit(math.inf)
    with pytest.raises(ValueError):
        PartyCredit(0.1, 1.2)
    c = PartyCredit(0.1, 0.35)
    assert c.loss + c.recovery == 1.0


def test_event_probabilities_baseline(base_model):
    p = first_to_default_probs(base_model, 5.0)
    assert (round(p.borrower_first, 2), round(p.no_default, 2), round(p.lender_first, 2)) == (0.58, 0.30, 0.12)
    assert p.lender_first == pytest.approx(0.04 / 0.24 * (1 - math.exp(-0.24 * 5)), abs=1e-15)


def test_no_risk_partition():
    p = first_to_default_probs(model_of(0.0, 0.0), 3.0)
    assert (p.no_default, p.lender_first, p.borrower_first) == (1.0, 0.0, 0.0)


def test_defaulted_context_is_degenerate(base_model):
    p = first_to_default_probs(base_model, 5.0, ValuationContext.defaulted(Party.LENDER, 2.5))
    assert (p.no_default, p.lender_first, p.borrower_first) == (0.0, 1.0, 0.0)


@given(intensity, intensity, horizon, dependence)
def test_partition_and_bounds(lam_a, lam_b, T, dep):
    assume(not (dep is Dependence.COMONOTONIC and lam_a == lam_b and lam_a > 0))
    p = first_to_default_probs(model_of(lam_b, lam_a, dep), T)
    assert abs(p.no_default + p.lender_first + p.borrower_first - 1.0) < 1e-12
    for x in (p.no_default, p.lender_first, p.borrower_first):
        assert -1e-15 <= x <= 1.0 + 1e-15


@given(intensity, intensity, horizon)
def test_independent_no_default(lam_a, lam_b, T):
    p = first_to_default_probs(model_of(lam_b, lam_a), T)
    assert p.no_default == pytest.approx(math.exp(-(lam_a + lam_b) * T), rel=1e-12, abs=1e-15)


@given(intensity, st.floats(0.0, 20.0), st.floats(0.0, 20.0))
def test_memorylessness(lam, t, span):
    m = model_of(lam, 0.07)
    conditional = survival_prob(m, Party.BORROWER, t + span, ValuationContext.both_alive(t))
    fresh = survival_prob(m, Party.BORROWER, span)
    assert conditional == pytest.approx(fresh, rel=1e-12, abs=1e-300)


@given(st.floats(0.01, 2.0), st.floats(0.01, 2.0))
def test_limit_share_of_first_default(lam_a, lam_b):
    p = first_to_default_probs(model_of(lam_b, lam_a), 1e4)
    assert p.lender_first == pytest.approx(lam_a / (lam_a + lam_b), rel=1e-12)


@given(st.floats(0.001, 2.0), st.floats(0.001, 2.0), horizon)
def test_comonotonic_ordering(lam_a, lam_b, T):
    assume(lam_a != lam_b)
    p = first_to_default_probs(model_of(lam_b, lam_a, Dependence.COMONOTONIC), T)
    if lam_b > lam_a:
        assert p.lender_first == 0.0
        assert p.borrower_first == 1.0 - p.no_default
    else:
        assert p.borrower_first == 0.0
        assert p.lender_first == 1.0 - p.no_default


@given(st.floats(0.001, 1.0), st.floats(0.001, 1.0), st.floats(0.0, 4.0), st.floats(0.0, 10.0))
def test_comonotonic_both_alive_conditioning(lam_a, lam_b, t, span):
    assume(lam_a != lam_b)
    m = model_of(lam_b, lam_a, Dependence.COMONOTONIC)
    ctx = ValuationContext.both_alive(t)
    for party in Party:
        p = survival_prob(m, party, t + span, ctx)
        assert 0.0 <= p <= 1.0
        assert survival_prob(m, party, t, ctx) == 1.0


def test_swapped_model_exchanges_roles(base_model):
    s = base_model.swapped()
    assert s.lender == base_model.borrower and s.borrower == base_model.lender
    p, q = first_to_default_probs(base_model, 5.0), first_to_default_probs(s, 5.0)
    assert (p.lender_first, p.borrower_first) == (q.borrower_first, q.lender_first)
