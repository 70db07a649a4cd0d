import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bilateral_closeout.closeout_pricing import CloseoutConvention, price
from bilateral_closeout.credit_model import Dependence, Party, PartyCredit, TwoNameModel, ValuationContext
from bilateral_closeout.instruments import CashflowSchedule, RateCurve
from bilateral_closeout.monte_carlo import (
    BLOCK_SIZE,
    JointDefaultDraw,
    McConfig,
    check_appendix_equivalence,
    check_symmetry,
    draws_from_uniforms,
    mc_event_frequencies,
    mc_price,
    risk_free_closeout_forms,
    sample_joint_defaults,
    substitution_forms,
    validation_sweep,
)

C = CloseoutConvention
RFC, SUB = C.BILATERAL_RISK_FREE_CLOSEOUT, C.BILATERAL_SUBSTITUTION_CLOSEOUT
N = 1e9
MIXED = CashflowSchedule((2.0, 4.0), (0.5, -0.5), N)


def within(est, reference, k=3.0):
    return abs(est.z_score(reference)) < k


def test_config_validation():
    with pytest.raises(ValueError):
        McConfig(paths=0)
    with pytest.raises(ValueError):
        McConfig(paths=3, antithetic=True)
    with pytest.raises(ValueError):
        McConfig(seed=-1)


def test_comonotonic_draws_follow_one_trigger():
    m = TwoNameModel(PartyCredit(0.036), PartyCredit(0.04), Dependence.COMONOTONIC)
    d = sample_joint_defaults(m, np.random.default_rng(1), 10**5)
    assert np.all(d.tau_lender < d.tau_borrower)
    assert np.max(np.abs(d.tau_lender * 0.04 - d.tau_borrower * 0.036)) < 1e-12
    assert np.all(d.tau_first <= d.tau_second)


def test_zero_intensity_never_defaults():
    m = TwoNameModel(PartyCredit(0.0), PartyCredit(0.3))
    d = sample_joint_defaults(m, np.random.default_rng(2), 1000)
    assert np.all(np.isinf(d.tau_borrower)) and np.all(np.isfinite(d.tau_lender))


def test_symmetric_intensities_split_evenly():
    m = TwoNameModel(PartyCredit(0.2), PartyCredit(0.2))
    u = np.random.Generator(np.random.Philox(5)).random((10**6, 2))
    d = draws_from_uniforms(m, u)
    x = (d.tau_lender < d.tau_borrower).astype(float)
    assert abs(x.mean() - 0.5) < 3 * x.std() / math.sqrt(x.size)


def test_classify_is_a_partition():
    d = JointDefaultDraw(np.array([1.0, 3.0, 9.0, 2.0]), np.array([2.0, 1.0, 8.0, 2.0]))
    none, lender, borrower = d.classify(5.0)
    assert list(none) == [False, False, True, False]
    assert list(lender) == [True, False, False, False]
    assert list(borrower) == [False, True, False, True]  # the exact tie counts as borrower-first


def test_event_frequencies_baseline(base_model):
    freq = mc_event_frequencies(base_model, 5.0, McConfig(10**6, 3))
    for name, want in (("no_default", 0.30), ("lender_first", 0.12), ("borrower_first", 0.58)):
        assert abs(freq[name].mean - want) < 0.01
        assert freq[name].std_error < 1e-3


def test_event_frequencies_against_closed_form():
    m = TwoNameModel(PartyCredit(0.3), PartyCredit(0.1))
    freq = mc_event_frequencies(m, 2.0, McConfig(10**7, 11))
    total = 0.4
    q = -math.expm1(-total * 2.0)
    assert within(freq["lender_first"], 0.1 / total * q)
    assert within(freq["borrower_first"], 0.3 / total * q)
    assert within(freq["no_default"], 1 - q)


@pytest.mark.parametrize("conv, want", [(RFC, 359.5e6), (SUB, 316.6e6)])
def test_baseline_prices(bond, curve, base_model, conv, want):
    est = mc_price(bond, curve, base_model, conv, McConfig(10**6, 42))
    closed = price(bond, curve, base_model, conv).value
    assert within(est, closed)
    assert abs(est.mean - want) < 3 * est.std_error + 0.05e6


def test_rfc_half_intensities(curve):
    m = TwoNameModel(PartyCredit(0.5, 0.4), PartyCredit(0.5))
    s = CashflowSchedule.bond(3.0, N)
    est = mc_price(s, curve, m, RFC, McConfig(10**6, 9))
    assert within(est, price(s, curve, m, RFC).value)


def test_no_default_risk_is_exact(bond, curve):
    m = TwoNameModel(PartyCredit(0.0), PartyCredit(0.0))
    est = mc_price(bond, curve, m, RFC, McConfig(10**4, 1))
    assert est.mean == pytest.approx(math.exp(-0.15) * N, rel=1e-15)
    assert est.std_error == 0.0


def test_conditional_start(bond, curve, base_model, como_model):
    ctx = ValuationContext.both_alive(2.5)
    for m in (base_model, como_model):
        for conv in (RFC, SUB):
            est = mc_price(bond, curve, m, conv, McConfig(4 * 10**5, 4), ctx)
            assert within(est, price(bond, curve, m, conv, ctx=ctx).value)
    with pytest.raises(ValueError):
        mc_price(bond, curve, base_model, RFC, McConfig(100), ValuationContext.defaulted(Party.LENDER, 1.0))


def test_unilateral_conventions(curve):
    s = CashflowSchedule((1.0, 2.0, 3.0), (-0.05, -0.05, -1.05), N)
    m = TwoNameModel(PartyCredit(0.15, 0.4), PartyCredit(0.3, 0.3))
    for conv in (C.UNILATERAL_BORROWER_RISK, C.UNILATERAL_LENDER_RISK, C.RISK_FREE_VALUE):
        est = mc_price(s, curve, m, conv, McConfig(4 * 10**5, 8))
        assert within(est, price(s, curve, m, conv).value)


def test_determinism_across_runs_and_workers(bond, curve, base_model):
    cfg = McConfig(3 * BLOCK_SIZE + 17, 123)
    a = mc_price(bond, curve, base_model, SUB, cfg)
    b = mc_price(bond, curve, base_model, SUB, cfg)
    c = mc_price(bond, curve, base_model, SUB, McConfig(cfg.paths, cfg.seed, workers=4))
    assert a == b == c
    d = mc_price(bond, curve, base_model, SUB, McConfig(cfg.paths, cfg.seed + 1))
    assert d.mean != a.mean


def test_antithetic_reduces_error(bond, curve, base_model):
    plain = mc_price(bond, curve, base_model, RFC, McConfig(10**6, 42))
    anti = mc_price(bond, curve, base_model, RFC, McConfig(10**6, 42, antithetic=True))
    assert anti.std_error <= plain.std_error


@pytest.mark.parametrize("conv", list(C))
def test_symmetry_mixed_schedule(curve, conv):
    m = TwoNameModel(PartyCredit(0.1), PartyCredit(0.1))
    assert check_symmetry(MIXED, curve, m, conv, McConfig(10**5, 2)) < 1e-9 * N


@settings(max_examples=15)
@given(st.floats(0.0, 1.0), st.floats(0.0, 1.0), st.floats(0.0, 1.0), st.floats(0.0, 1.0), st.sampled_from(list(Dependence)))
def test_symmetry_bond(lam_a, lam_b, ra, rb, dep):
    if dep is Dependence.COMONOTONIC and lam_a == lam_b:
        lam_b = lam_a + 0.01
    m = TwoNameModel(PartyCredit(lam_b, rb), PartyCredit(lam_a, ra), dep)
    s = CashflowSchedule.bond(4.0, N)
    for conv in (RFC, SUB):
        assert check_symmetry(s, RateCurve(0.02), m, conv, McConfig(2 * 10**4, 3)) < 1e-9 * N


def test_forms_agree(bond, curve):
    m = TwoNameModel(PartyCredit(0.2), PartyCredit(0.04, 0.4))
    assert check_appendix_equivalence(bond, curve, m, McConfig(10**5, 5)) < 1e-9 * N
    mm = TwoNameModel(PartyCredit(0.1, 0.3), PartyCredit(0.1, 0.2))
    assert check_appendix_equivalence(MIXED, curve, mm, McConfig(10**5, 5)) < 1e-9 * N


@settings(max_examples=25)
@given(
    st.floats(0.0, 2.0), st.floats(0.0, 2.0), st.floats(0.0, 1.0), st.floats(0.0, 1.0),
    st.sampled_from(list(Dependence)), st.integers(0, 2**32),
)
def test_forms_agree_pathwise(lam_a, lam_b, ra, rb, dep, seed):
    if dep is Dependence.COMONOTONIC and lam_a == lam_b:
        lam_b = lam_a + 0.01
    m = TwoNameModel(PartyCredit(lam_b, rb), PartyCredit(lam_a, ra), dep)
    d = draws_from_uniforms(m, np.random.default_rng(seed).random((2000, 2)))
    curve = RateCurve(0.03)
    for s in (MIXED, CashflowSchedule((1.0, 3.0), (0.05, 1.05), N)):
        forms = substitution_forms(s, curve, m, d)
        assert np.max(np.abs(forms["original"] - forms["expanded"])) < 1e-9 * N
        assert np.max(np.abs(forms["original"] - forms["first_second"])) < 1e-9 * N
        rf = risk_free_closeout_forms(s, curve, m, d)
        assert np.max(np.abs(rf["original"] - rf["simplified"])) < 1e-9 * N


def test_forms_with_riskless_lender(bond, curve):
    m = TwoNameModel(PartyCredit(0.2, 0.25), PartyCredit(0.0, 0.4))
    d = draws_from_uniforms(m, np.random.default_rng(0).random((5000, 2)))
    forms = substitution_forms(bond, curve, m, d)
    unilateral, _ = __import__("bilateral_closeout.monte_carlo", fromlist=["pathwise_payoff"]).pathwise_payoff(
        bond, curve, m, C.UNILATERAL_BORROWER_RISK, d
    )
    for f in forms.values():
        assert np.max(np.abs(f - unilateral)) < 1e-9 * N


def test_ties_resolve_borrower_first(bond, curve):
    from bilateral_closeout.monte_carlo import pathwise_payoff

    m = TwoNameModel(PartyCredit(0.2), PartyCredit(0.2))
    d = JointDefaultDraw(np.array([1.0, 2.0]), np.array([1.0, 3.0]))
    payoff, ties = pathwise_payoff(bond, curve, m, RFC, d)
    assert ties == 1
    assert payoff[0] == 0.0  # borrower-first with zero recovery


def test_validation_report_is_stable():
    a = validation_sweep(McConfig(20_000, 42), n_sets=3)
    b = validation_sweep(McConfig(20_000, 42, workers=3), n_sets=3)
    assert json.dumps(a, sort_keys=True) == json.dumps(b, sort_keys=True)
    assert len(a["cases"]) == 12
    assert set(a["cases"][0]) >= {"closed_form", "mc_mean", "mc_se", "z_score", "pass"}


def test_degenerate_payoff_z_score(curve):
    # lender always defaults first while it is the creditor: every path pays V0
    m = TwoNameModel(PartyCredit(0.2), PartyCredit(0.5), Dependence.COMONOTONIC)
    s = CashflowSchedule.bond(2.0, N)
    est = mc_price(s, curve, m, RFC, McConfig(10**5, 1))
    assert abs(est.z_score(price(s, curve, m, RFC).value)) < 3
