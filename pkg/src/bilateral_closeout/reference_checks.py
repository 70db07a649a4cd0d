"""
Reference-value checks for the baseline bond example.

Each check recomputes one published figure or structural property and
compares it at a fixed tolerance. ``run_checks`` backs both the
``reproduce-paper`` CLI command and the acceptance test module.
"""

from __future__ import annotations

import io
import json
import tempfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from bilateral_closeout.closeout_pricing import CloseoutConvention, price, price_surface
from bilateral_closeout.collateral import closeout_match, simulate_collateral
from bilateral_closeout.credit_model import (
    Dependence,
    Party,
    PartyCredit,
    TwoNameModel,
    default_prob,
    first_to_default_probs,
)
from bilateral_closeout.instruments import CashflowSchedule, RateCurve, risk_free_value
from bilateral_closeout.monte_carlo import McConfig, check_appendix_equivalence, check_symmetry
from bilateral_closeout.scenario_contagion import revalue_around_default

MN = 1e6
NOTIONAL = 1e9
RFC = CloseoutConvention.BILATERAL_RISK_FREE_CLOSEOUT
SUB = CloseoutConvention.BILATERAL_SUBSTITUTION_CLOSEOUT


@dataclass(frozen=True)
class Check:
    number: int
    name: str
    passed: bool
    detail: str

    def line(self) -> str:
        return f"[{'PASS' if self.passed else 'FAIL'}] {self.number:>2}. {self.name}: {self.detail}"


def _baseline():
    bond = CashflowSchedule.bond(5.0, NOTIONAL)
    curve = RateCurve(0.03)
    model = TwoNameModel(PartyCredit(0.2), PartyCredit(0.04))
    como = TwoNameModel(PartyCredit(0.036), PartyCredit(0.04), Dependence.COMONOTONIC)
    return bond, curve, model, como


def _close(got: float, want: float, tol: float) -> bool:
    return abs(got - want) <= tol


def check_risk_free_bond() -> Check:
    bond, curve, _, _ = _baseline()
    v = risk_free_value(bond, curve) / MN
    return Check(1, "risk-free bond", _close(v, 860.71, 0.01), f"{v:.3f}mn vs 860.71mn (tol 0.01)")


def check_bilateral_prices() -> Check:
    bond, curve, model, _ = _baseline()
    rfc = price(bond, curve, model, RFC).value / MN
    sub = price(bond, curve, model, SUB).value / MN
    ok = _close(rfc, 359.5, 0.05) and _close(sub, 316.6, 0.05)
    return Check(2, "bilateral prices", ok, f"risk-free closeout {rfc:.3f}mn vs 359.5, substitution {sub:.3f}mn vs 316.6 (tol 0.05)")


def check_event_probabilities() -> Check:
    _, _, model, _ = _baseline()
    p = first_to_default_probs(model, 5.0)
    got = [100 * x for x in (p.borrower_first, p.no_default, p.lender_first)]
    want = [58, 30, 12]
    ok = all(_close(g, w, 0.5) for g, w in zip(got, want))
    return Check(3, "default-event probabilities", ok,
                 "borrower first {:.2f}%, none {:.2f}%, lender first {:.2f}% vs 58/30/12 (tol 0.5pp)".format(*got))


def check_marginal_probabilities() -> Check:
    _, _, model, _ = _baseline()
    pb = 100 * default_prob(model, Party.BORROWER, 5.0)
    pa = 100 * default_prob(model, Party.LENDER, 5.0)
    ok = _close(pb, 63.2, 0.05) and _close(pa, 18.1, 0.05)
    return Check(4, "marginal default probabilities", ok, f"borrower {pb:.3f}%, lender {pa:.3f}% vs 63.2/18.1 (tol 0.05pp)")


def check_independent_contagion() -> Check:
    bond, curve, model, _ = _baseline()
    rfc = revalue_around_default(bond, curve, model, RFC, Party.LENDER, 2.5, Party.BORROWER)
    sub = revalue_around_default(bond, curve, model, SUB, Party.LENDER, 2.5, Party.BORROWER)
    got = [x / MN for x in (rfc.value_before, rfc.value_after, rfc.jump, sub.value_before, sub.value_after, sub.jump)]
    want = [-578.9, -927.7, -348.8, -562.7, -562.7, 0.0]
    ok = all(_close(g, w, 0.1) for g, w in zip(got, want))
    return Check(5, "contagion, independent, lender default at 2.5y", ok,
                 "risk-free closeout {:.2f} -> {:.2f} (jump {:.2f}); substitution {:.2f} -> {:.2f} (jump {:.2f}) mn, tol 0.1".format(*got))


def check_comonotonic() -> Check:
    bond, curve, _, como = _baseline()
    b_rfc = price(bond, curve, como, RFC, perspective=Party.BORROWER).value / MN
    b_sub = price(bond, curve, como, SUB, perspective=Party.BORROWER).value / MN
    rfc = revalue_around_default(bond, curve, como, RFC, Party.LENDER, 2.5)
    sub = revalue_around_default(bond, curve, como, SUB, Party.LENDER, 2.5)
    got = [b_rfc, b_sub] + [x / MN for x in (rfc.value_before, rfc.value_after, sub.value_before, sub.value_after)]
    want = [-860.71, -718.92, 927.74, 927.74, 856.41, 0.0]
    ok = all(_close(g, w, 0.05) for g, w in zip(got, want))
    return Check(6, "comonotonic values and scenario", ok,
                 "borrower {:.2f}/{:.2f}; lender around default {:.2f}->{:.2f}, {:.2f}->{:.2f} mn, tol 0.05".format(*got))


def check_validation_sweep(report: dict, exit_code: int) -> Check:
    cases = report["cases"]
    sets = report["config"]["n_sets"]
    combos = {(c["convention"], c["dependence"]) for c in cases}
    ok = (
        exit_code == 0
        and sets >= 20
        and len(combos) == 4
        and report["config"]["paths"] >= 10**6
        and report["failures"] == 0
    )
    worst = max(abs(c["z_score"]) for c in cases)
    return Check(7, "Monte Carlo validation sweep", ok,
                 f"{len(cases)} cases ({sets} sets x 2 conventions x 2 couplings) at {report['config']['paths']} paths, "
                 f"{report['failures']} beyond 3 SE, max |z| {worst:.2f}")


def check_properties(paths: int = 200_000) -> Check:
    bond, curve, model, _ = _baseline()
    grid = np.linspace(0.0, 1.0, 51)
    dominance, flatness = 0.0, 0.0
    for dep in Dependence:
        for rb in (0.0, 0.4):
            rfc = price_surface(curve, 5.0, rb, dep, grid, grid, RFC)
            sub = price_surface(curve, 5.0, rb, dep, grid, grid, SUB)
            dominance = max(dominance, float(np.nanmax(sub - rfc)))
            flatness = max(flatness, float(np.nanmax(np.nanmax(sub, axis=0) - np.nanmin(sub, axis=0))))

    cfg = McConfig(paths, 7)
    mixed = CashflowSchedule((2.0, 4.0), (0.5, -0.5), NOTIONAL)
    mixed_model = TwoNameModel(PartyCredit(0.1), PartyCredit(0.1))
    appendix_model = TwoNameModel(PartyCredit(0.2), PartyCredit(0.04, 0.4))
    sym = max(
        check_symmetry(s, curve, m, conv, cfg)
        for s, m in ((bond, model), (mixed, mixed_model))
        for conv in (RFC, SUB)
    )
    equiv = max(
        check_appendix_equivalence(bond, curve, appendix_model, cfg),
        check_appendix_equivalence(mixed, curve, mixed_model, cfg),
    )

    partition = 0.0
    for lam_a in grid[::5]:
        for lam_b in grid[::5]:
            for dep in Dependence:
                if dep is Dependence.COMONOTONIC and lam_a == lam_b and lam_a > 0:
                    continue
                m = TwoNameModel(PartyCredit(lam_b), PartyCredit(lam_a), dep)
                for T in (0.5, 5.0, 30.0):
                    p = first_to_default_probs(m, T)
                    partition = max(partition, abs(p.no_default + p.lender_first + p.borrower_first - 1.0))

    ok = dominance <= 1e-12 and flatness < 1e-12 and sym < 1e-9 * NOTIONAL and equiv < 1e-9 * NOTIONAL and partition < 1e-12
    return Check(8, "property suite", ok,
                 f"max(sub - rfc) {dominance:.2e}, lender-axis spread {flatness:.2e}, "
                 f"symmetry {sym:.2e}, forms gap {equiv:.2e}, partition error {partition:.2e}")


def check_collateral() -> Check:
    curve = RateCurve(0.03)
    path = simulate_collateral(curve, 5.0, NOTIONAL, 1 / 365)
    half = simulate_collateral(curve, 5.0, NOTIONAL, 1 / 730)
    within = path.max_deviation() <= path.error_bound()
    ratio = path.max_deviation() / half.max_deviation()

    contract = 0.0
    models = (
        TwoNameModel(PartyCredit(0.2), PartyCredit(0.04)),
        TwoNameModel(PartyCredit(0.036), PartyCredit(0.04), Dependence.COMONOTONIC),
    )
    for m in models:
        for tau in np.arange(0.5, 4.51, 0.5):
            res = closeout_match(path, curve, m, SUB, Party.LENDER, float(tau))
            contract = max(contract, abs(res.contract_view_residual))

    borrower = 0.0
    for conv in (RFC, SUB):
        res = closeout_match(path, curve, models[0], conv, Party.BORROWER, 2.5)
        borrower = max(borrower, abs(res.contract_view_residual), abs(res.money_view_residual))

    ok = within and 1.8 <= ratio <= 2.2 and contract < 1e-9 * NOTIONAL and borrower < 1e-9 * NOTIONAL
    return Check(9, "collateral", ok,
                 f"max dev {path.max_deviation() / MN:.4f}mn <= bound {path.error_bound() / MN:.4f}mn, "
                 f"halving ratio {ratio:.3f}, substitution contract residual {contract:.2e}, "
                 f"borrower-default residual {borrower:.2e}")


def _validate_twice(paths: int, seed: int):
    from bilateral_closeout.cli import main

    outputs, codes = [], []
    with tempfile.TemporaryDirectory() as tmp:
        for k in range(2):
            target = Path(tmp) / f"validate_{k}.json"
            codes.append(main(["validate", "--seed", str(seed), "--paths", str(paths), "--output", str(target)],
                              stdout=io.StringIO()))
            outputs.append(target.read_bytes())
    return outputs, codes


def check_determinism(outputs, codes) -> Check:
    same = outputs[0] == outputs[1]
    return Check(10, "determinism", same and codes[0] == codes[1],
                 f"validate --seed twice: {'byte-identical' if same else 'different'} ({len(outputs[0])} bytes)")


def run_checks(paths: int = 10**6, seed: int = 42, monte_carlo: bool = True) -> list[Check]:
    checks = [
        check_risk_free_bond(),
        check_bilateral_prices(),
        check_event_probabilities(),
        check_marginal_probabilities(),
        check_independent_contagion(),
        check_comonotonic(),
    ]
    if monte_carlo:
        outputs, codes = _validate_twice(paths, seed)
        checks.append(check_validation_sweep(json.loads(outputs[0]), codes[0]))
    checks += [check_properties(), check_collateral()]
    if monte_carlo:
        checks.append(check_determinism(outputs, codes))
    return checks


def format_table(checks) -> str:
    lines = [c.line() for c in checks]
    passed = sum(c.passed for c in checks)
    lines.append(f"{passed}/{len(checks)} checks passed")
    return "\n".join(lines)


__all__ = ["Check", "run_checks", "format_table"]
