"""
Monte Carlo oracle priced straight from the default-settlement payouts.

Default times are simulated, the first defaulter is identified pathwise and
the closeout is settled exactly as the contract prescribes. For the
substitution closeout the inner survivor-risky value at the first default is
computed semi-analytically under the path's conditional law (deterministic
schedules make that exact), so there is no nested simulation.

Random numbers come from Philox, a counter-based generator: paths are cut
into fixed blocks of ``BLOCK_SIZE`` and block ``k`` is keyed by
``(seed, k)``. Path ``i`` is therefore a pure function of ``(seed, i)``,
blocks can be evaluated in any order or in parallel, and the reduction runs
in block order so the estimate is bit-identical for any worker count.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from bilateral_closeout.closeout_pricing import (
    CloseoutConvention,
    default_weighted_exposure,
    price,
)
from bilateral_closeout.credit_model import (
    Dependence,
    Information,
    Party,
    PartyCredit,
    TwoNameModel,
    ValuationContext,
    alive_at_valuation,
    survival_after_first_default,
)
from bilateral_closeout.instruments import (
    CashflowSchedule,
    RateCurve,
    discounted_cashflows,
    risk_free_value,
)

BLOCK_SIZE = 1 << 16

C = CloseoutConvention


@dataclass(frozen=True)
class McConfig:
    paths: int = 1_000_000
    seed: int = 42
    antithetic: bool = False
    workers: int = 1

    def __post_init__(self) -> None:
        if self.paths <= 0:
            raise ValueError(f"paths must be positive, got {self.paths}")
        if self.antithetic and self.paths % 2:
            raise ValueError("antithetic sampling needs an even number of paths")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must fit in 64 bits")


@dataclass(frozen=True)
class McEstimate:
    mean: float
    std_error: float
    paths_used: int
    tie_count: int = 0

    def z_score(self, reference: float) -> float:
        """(mean - reference) / SE, with the SE floored at summation rounding.

        Degenerate payoffs (every path pays the same amount) have an SE that
        is pure floating-point noise; the floor keeps ulp-level differences
        from reading as hundreds of standard errors.
        """
        diff = self.mean - reference
        floor = 64 * np.finfo(float).eps * max(abs(self.mean), abs(reference))
        scale = max(self.std_error, floor)
        if scale == 0:
            return 0.0 if diff == 0 else math.copysign(math.inf, diff)
        return diff / scale


@dataclass(frozen=True)
class JointDefaultDraw:
    """A batch of joint default times (``inf`` for a name that never defaults)."""

    tau_lender: np.ndarray
    tau_borrower: np.ndarray

    @property
    def tau_first(self) -> np.ndarray:
        return np.minimum(self.tau_lender, self.tau_borrower)

    @property
    def tau_second(self) -> np.ndarray:
        return np.maximum(self.tau_lender, self.tau_borrower)

    @property
    def ties(self) -> np.ndarray:
        return (self.tau_lender == self.tau_borrower) & np.isfinite(self.tau_lender)

    def classify(self, horizon: float):
        """Indicators (no_default, lender_first, borrower_first) up to ``horizon``.

        Exact ties count as borrower-first.
        """
        first = self.tau_first
        within = first <= horizon
        borrower_first = within & (self.tau_borrower <= self.tau_lender)
        lender_first = within & ~borrower_first
        return ~within, lender_first, borrower_first


def _uniform_block(seed: int, block: int, n: int, antithetic: bool) -> np.ndarray:
    gen = np.random.Generator(np.random.Philox(key=seed + (block << 64)))
    if not antithetic:
        return gen.random((n, 2))
    half = gen.random((n // 2, 2))
    return np.concatenate([half, 1.0 - half])


def draws_from_uniforms(model: TwoNameModel, u: np.ndarray, ctx: ValuationContext | None = None) -> JointDefaultDraw:
    """Map uniforms of shape (n, 2) to default times conditional on both names alive at ``ctx.time``."""
    ctx = ctx or ValuationContext()
    if ctx.information is Information.DEFAULTED or not all(
        alive_at_valuation(model, p, ctx) for p in Party
    ):
        raise ValueError("simulation starts from a context with both names alive")
    t = ctx.time
    expo = -np.log1p(-u)
    lam_a, lam_b = model.lender.intensity, model.borrower.intensity
    # subnormal intensities overflow to an infinite default time, as they should
    with np.errstate(divide="ignore", over="ignore"):
        if model.dependence is Dependence.COMONOTONIC:
            if ctx.information is Information.BOTH_ALIVE:
                level = max(lam_a, lam_b) * t
            else:
                level = model.intensity(ctx.party) * t
            xi = level + expo[:, 0]
            tau_a = xi / lam_a if lam_a > 0 else np.full(len(u), np.inf)
            tau_b = xi / lam_b if lam_b > 0 else np.full(len(u), np.inf)
        else:
            tau_a = t + expo[:, 0] / lam_a if lam_a > 0 else np.full(len(u), np.inf)
            tau_b = t + expo[:, 1] / lam_b if lam_b > 0 else np.full(len(u), np.inf)
    return JointDefaultDraw(np.asarray(tau_a, dtype=float), np.asarray(tau_b, dtype=float))


def sample_joint_defaults(model: TwoNameModel, rng: np.random.Generator, n: int, ctx=None) -> JointDefaultDraw:
    return draws_from_uniforms(model, rng.random((n, 2)), ctx)


# --- settlement payouts -----------------------------------------------------


def _settle_lender_default(x, recovery_lender):
    return np.maximum(x, 0.0) - recovery_lender * np.maximum(-x, 0.0)


def _settle_borrower_default(x, recovery_borrower):
    return recovery_borrower * np.maximum(x, 0.0) - np.maximum(-x, 0.0)


def _cva_after_lender_default(schedule, curve, model, tau):
    """E_tau[L_B 1{tau_B <= T} D(tau, tau_B) V0(tau_B)^+] given the lender defaulted at tau."""
    cdf = lambda h: 1.0 - survival_after_first_default(model, Party.LENDER, tau, h)  # noqa: E731
    return model.borrower.loss * default_weighted_exposure(schedule, curve, tau, cdf, positive=True)


def _dva_after_borrower_default(schedule, curve, model, tau):
    """E_tau[L_A 1{tau_A <= T} D(tau, tau_A) (-V0(tau_A))^+] given the borrower defaulted at tau."""
    cdf = lambda h: 1.0 - survival_after_first_default(model, Party.BORROWER, tau, h)  # noqa: E731
    return model.lender.loss * default_weighted_exposure(schedule, curve, tau, cdf, positive=False)


def _first_default(draw: JointDefaultDraw, horizon: float, tie_first: Party):
    tau_a, tau_b = draw.tau_lender, draw.tau_borrower
    tie = tau_a == tau_b
    if tie_first is Party.BORROWER:
        borrower_first = (tau_b < tau_a) | tie
    else:
        borrower_first = tau_b < tau_a
    tau1 = np.minimum(tau_a, tau_b)
    defaulted = tau1 <= horizon
    ties = int(np.count_nonzero(tie & defaulted))
    return tau1, defaulted, defaulted & borrower_first, defaulted & ~borrower_first, ties


def pathwise_payoff(
    schedule: CashflowSchedule,
    curve: RateCurve,
    model: TwoNameModel,
    convention: CloseoutConvention,
    draw: JointDefaultDraw,
    t: float = 0.0,
    tie_first: Party = Party.BORROWER,
):
    """Discounted payout to the lender on every path; returns (payoff, tie_count)."""
    convention = CloseoutConvention(convention)
    T = schedule.maturity
    ra, rb = model.lender.recovery, model.borrower.recovery

    if convention is C.RISK_FREE_VALUE:
        full = discounted_cashflows(schedule, curve, t, np.full(draw.tau_lender.shape, np.inf))
        return full, 0

    if convention in (C.UNILATERAL_BORROWER_RISK, C.UNILATERAL_LENDER_RISK):
        if convention is C.UNILATERAL_BORROWER_RISK:
            tau, settle, recovery = draw.tau_borrower, _settle_borrower_default, rb
        else:
            tau, settle, recovery = draw.tau_lender, _settle_lender_default, ra
        hit = tau <= T
        pre = discounted_cashflows(schedule, curve, t, np.where(hit, tau, np.inf))
        out = pre.copy()
        idx = np.flatnonzero(hit)
        s = tau[idx]
        out[idx] += curve.discount(t, s) * settle(risk_free_value(schedule, curve, s), recovery)
        return out, 0

    tau1, defaulted, b_first, a_first, ties = _first_default(draw, T, tie_first)
    out = discounted_cashflows(schedule, curve, t, np.where(defaulted, tau1, np.inf))

    ia, ib = np.flatnonzero(a_first), np.flatnonzero(b_first)
    sa, sb = tau1[ia], tau1[ib]
    v0_a = risk_free_value(schedule, curve, sa)
    v0_b = risk_free_value(schedule, curve, sb)
    if convention is C.BILATERAL_RISK_FREE_CLOSEOUT:
        close_a, close_b = v0_a, v0_b
    elif convention is C.BILATERAL_SUBSTITUTION_CLOSEOUT:
        close_a = v0_a - _cva_after_lender_default(schedule, curve, model, sa)
        close_b = v0_b + _dva_after_borrower_default(schedule, curve, model, sb)
    else:  # pragma: no cover
        raise ValueError(convention)
    out[ia] += curve.discount(t, sa) * _settle_lender_default(close_a, ra)
    out[ib] += curve.discount(t, sb) * _settle_borrower_default(close_b, rb)
    return out, ties


# --- block engine -------------------------------------------------------------


def _combine(stats):
    """Chan et al. pairwise merge of (count, mean, m2), in the given order."""
    n, mean, m2 = 0, 0.0, 0.0
    for nb, mb, m2b in stats:
        if nb == 0:
            continue
        total = n + nb
        delta = mb - mean
        mean += delta * nb / total
        m2 += m2b + delta * delta * n * nb / total
        n = total
    return n, mean, m2


def _run_blocks(config: McConfig, path_fn):
    """Apply ``path_fn(uniforms) -> (values, ties)`` block by block.

    Returns (observation stats, paths, ties). With antithetic sampling each
    observation is the average of a path and its mirror.
    """
    sizes = [BLOCK_SIZE] * (config.paths // BLOCK_SIZE)
    if config.paths % BLOCK_SIZE:
        sizes.append(config.paths % BLOCK_SIZE)

    def work(k):
        u = _uniform_block(config.seed, k, sizes[k], config.antithetic)
        values, ties = path_fn(u)
        if config.antithetic:
            half = len(values) // 2
            values = 0.5 * (values[:half] + values[half:])
        mean = float(np.mean(values))
        return len(values), mean, float(np.sum((values - mean) ** 2)), ties

    blocks = range(len(sizes))
    if config.workers > 1:
        with ThreadPoolExecutor(config.workers) as pool:
            results = list(pool.map(work, blocks))
    else:
        results = [work(k) for k in blocks]
    n, mean, m2 = _combine([(nb, mb, m2b) for nb, mb, m2b, _ in results])
    return n, mean, m2, sum(r[3] for r in results)


def _estimate(config: McConfig, path_fn) -> McEstimate:
    n, mean, m2, ties = _run_blocks(config, path_fn)
    se = math.sqrt(m2 / (n - 1) / n) if n > 1 else 0.0
    return McEstimate(mean=mean, std_error=se, paths_used=config.paths, tie_count=ties)


def mc_price(
    schedule: CashflowSchedule,
    curve: RateCurve,
    model: TwoNameModel,
    convention: CloseoutConvention,
    config: McConfig | None = None,
    ctx: ValuationContext | None = None,
) -> McEstimate:
    """Unbiased estimate of the lender's value under ``convention``.

    Mixed-sign schedules are fine here: positive and negative parts are taken
    pathwise.
    """
    config = config or McConfig()
    ctx = ctx or ValuationContext()
    convention = CloseoutConvention(convention)

    def path_fn(u):
        draw = draws_from_uniforms(model, u, ctx)
        return pathwise_payoff(schedule, curve, model, convention, draw, ctx.time)

    return _estimate(config, path_fn)


def mc_event_frequencies(model: TwoNameModel, horizon: float, config: McConfig | None = None, ctx=None):
    """Empirical {no_default, lender_first, borrower_first} frequencies with standard errors."""
    config = config or McConfig()
    out = {}
    for k, name in enumerate(("no_default", "lender_first", "borrower_first")):
        def path_fn(u, k=k):
            draw = draws_from_uniforms(model, u, ctx)
            return draw.classify(horizon)[k].astype(float), 0

        out[name] = _estimate(config, path_fn)
    return out


# --- pathwise identities ------------------------------------------------------


def check_symmetry(
    schedule: CashflowSchedule,
    curve: RateCurve,
    model: TwoNameModel,
    convention: CloseoutConvention,
    config: McConfig | None = None,
) -> float:
    """|V_A + V_B| with B's value computed in B's own frame on common random numbers."""
    config = config or McConfig()
    convention = CloseoutConvention(convention)
    mirror_model = model.swapped()
    mirror_schedule = schedule.negated()

    def path_fn(u):
        draw = draws_from_uniforms(model, u)
        mirrored = JointDefaultDraw(draw.tau_borrower, draw.tau_lender)
        lender, ties = pathwise_payoff(schedule, curve, model, convention, draw)
        # exact ties stay borrower-first, which is the lender slot in B's frame
        borrower, _ = pathwise_payoff(
            mirror_schedule, curve, mirror_model, convention.swapped(), mirrored, tie_first=Party.LENDER
        )
        return lender + borrower, ties

    n, mean, _, _ = _run_blocks(config, path_fn)
    return abs(mean)


def substitution_forms(schedule, curve, model, draw: JointDefaultDraw, t: float = 0.0):
    """Three algebraically equivalent pathwise payouts of the substitution closeout.

    ``original``: settlement at first default on the survivor-risky closeout,
    written per defaulter. ``expanded``: the full default-free cashflows plus
    CVA/DVA-type corrections at first default. ``first_second``: the compact
    form indexed by first defaulter and survivor, with the survivor's
    closeout valued in the survivor's own frame.
    """
    T = schedule.maturity
    ra, rb = model.lender.recovery, model.borrower.recovery
    la, lb = model.lender.loss, model.borrower.loss
    tau1, defaulted, b_first, a_first, _ = _first_default(draw, T, Party.BORROWER)
    ia, ib = np.flatnonzero(a_first), np.flatnonzero(b_first)
    sa, sb = tau1[ia], tau1[ib]
    until = np.where(defaulted, tau1, np.inf)

    original, _ = pathwise_payoff(schedule, curve, model, C.BILATERAL_SUBSTITUTION_CLOSEOUT, draw, t)

    full = discounted_cashflows(schedule, curve, t, np.full(tau1.shape, np.inf))
    expanded = full.copy()
    cva_a = _cva_after_lender_default(schedule, curve, model, sa)
    dva_b = _dva_after_borrower_default(schedule, curve, model, sb)
    v0_a = risk_free_value(schedule, curve, sa)
    v0_b = risk_free_value(schedule, curve, sb)
    expanded[ia] += curve.discount(t, sa) * (-cva_a + la * np.maximum(-v0_a + cva_a, 0.0))
    expanded[ib] += curve.discount(t, sb) * (dva_b - lb * np.maximum(v0_b + dva_b, 0.0))

    first_second = np.where(defaulted, 0.0, full)
    pre = discounted_cashflows(schedule, curve, t, until)
    # survivor B, valued in B's frame: negated schedule, roles swapped
    mirror_model, mirror_schedule = model.swapped(), schedule.negated()
    v_bb = risk_free_value(mirror_schedule, curve, sa) + _dva_after_borrower_default(
        mirror_schedule, curve, mirror_model, sa
    )
    first_second[ia] = -(-pre[ia] + curve.discount(t, sa) * (ra * np.maximum(v_bb, 0.0) - np.maximum(-v_bb, 0.0)))
    # survivor A
    v_aa = v0_b + dva_b
    first_second[ib] = pre[ib] + curve.discount(t, sb) * (rb * np.maximum(v_aa, 0.0) - np.maximum(-v_aa, 0.0))
    return {"original": original, "expanded": expanded, "first_second": first_second}


def risk_free_closeout_forms(schedule, curve, model, draw: JointDefaultDraw, t: float = 0.0):
    """Pathwise risk-free-closeout payout and its V0 - CVA + DVA simplification."""
    T = schedule.maturity
    tau1, defaulted, b_first, a_first, _ = _first_default(draw, T, Party.BORROWER)
    original, _ = pathwise_payoff(schedule, curve, model, C.BILATERAL_RISK_FREE_CLOSEOUT, draw, t)
    simplified = discounted_cashflows(schedule, curve, t, np.full(tau1.shape, np.inf))
    for idx, recovery_weight, positive in (
        (np.flatnonzero(a_first), model.lender.loss, False),
        (np.flatnonzero(b_first), model.borrower.loss, True),
    ):
        s = tau1[idx]
        v0 = risk_free_value(schedule, curve, s)
        exposure = np.maximum(v0, 0.0) if positive else np.maximum(-v0, 0.0)
        sign = -1.0 if positive else 1.0
        simplified[idx] += sign * recovery_weight * curve.discount(t, s) * exposure
    return {"original": original, "simplified": simplified}


def check_appendix_equivalence(
    schedule: CashflowSchedule,
    curve: RateCurve,
    model: TwoNameModel,
    config: McConfig | None = None,
) -> float:
    """Largest pairwise gap between the estimates of the three substitution forms."""
    config = config or McConfig()
    names = ("original", "expanded", "first_second")
    sums = {name: [] for name in names}

    def path_fn(u):
        forms = substitution_forms(schedule, curve, model, draws_from_uniforms(model, u))
        for name in names:
            sums[name].append(float(np.sum(forms[name])))
        return forms["original"], 0

    # single worker keeps the per-block lists in block order
    _run_blocks(McConfig(config.paths, config.seed, config.antithetic, 1), path_fn)
    means = [math.fsum(sums[name]) / config.paths for name in names]
    return max(abs(a - b) for a in means for b in means)


# --- validation sweep ---------------------------------------------------------


def random_parameter_sets(n_sets: int, seed: int) -> list[dict]:
    """Randomized bond/coupon-bond parameterizations for the closed-form sweep."""
    rng = np.random.default_rng(seed)
    sets = []
    for k in range(n_sets):
        maturity = float(np.round(rng.uniform(1.0, 10.0), 4))
        kind = ("bond", "coupon", "issued")[k % 3]
        if kind == "bond":
            times, amounts = (maturity,), (1.0,)
        else:
            times = tuple(float(np.round(maturity * f, 4)) for f in (1 / 3, 2 / 3, 1.0))
            amounts = (0.05, 0.05, 1.05)
            if kind == "issued":
                amounts = tuple(-a for a in amounts)
        lam_a, lam_b = (float(np.round(x, 4)) for x in rng.uniform(0.0, 1.0, 2))
        if lam_a == lam_b:
            lam_b += 1e-3
        sets.append(
            {
                "id": k,
                "kind": kind,
                "r": float(np.round(rng.uniform(0.0, 0.06), 4)),
                "times": list(times),
                "amounts": list(amounts),
                "notional": 1e9,
                "lambda_lender": lam_a,
                "lambda_borrower": lam_b,
                "recovery_lender": float(np.round(rng.uniform(0.0, 0.8), 4)),
                "recovery_borrower": float(np.round(rng.uniform(0.0, 0.8), 4)),
            }
        )
    return sets


def validation_sweep(
    config: McConfig | None = None,
    n_sets: int = 20,
    conventions=(C.BILATERAL_RISK_FREE_CLOSEOUT, C.BILATERAL_SUBSTITUTION_CLOSEOUT),
    dependences=(Dependence.INDEPENDENT, Dependence.COMONOTONIC),
    z_limit: float = 3.0,
) -> dict:
    """Closed form vs Monte Carlo over randomized parameter sets.

    Each case gets its own seed derived from ``config.seed`` and its index,
    so cases are independent and the report is reproducible.
    """
    config = config or McConfig()
    cases = []
    for params in random_parameter_sets(n_sets, config.seed):
        schedule = CashflowSchedule(tuple(params["times"]), tuple(params["amounts"]), params["notional"])
        curve = RateCurve(params["r"])
        for dependence in dependences:
            model = TwoNameModel(
                PartyCredit(params["lambda_borrower"], params["recovery_borrower"]),
                PartyCredit(params["lambda_lender"], params["recovery_lender"]),
                dependence,
            )
            for convention in conventions:
                convention = CloseoutConvention(convention)
                case_seed = (config.seed * 1_000_003 + len(cases)) % 2**64
                case_config = McConfig(config.paths, case_seed, config.antithetic, config.workers)
                closed = price(schedule, curve, model, convention).value
                est = mc_price(schedule, curve, model, convention, case_config)
                z = est.z_score(closed)
                cases.append(
                    {
                        "param_set": params["id"],
                        "dependence": Dependence(dependence).value,
                        "convention": convention.value,
                        "closed_form": closed,
                        "mc_mean": est.mean,
                        "mc_se": est.std_error,
                        "z_score": z,
                        "tie_count": est.tie_count,
                        "pass": bool(abs(z) < z_limit),
                    }
                )
    return {
        "config": {
            "paths": config.paths,
            "seed": config.seed,
            "antithetic": config.antithetic,
            "n_sets": n_sets,
            "z_limit": z_limit,
        },
        "parameter_sets": random_parameter_sets(n_sets, config.seed),
        "cases": cases,
        "failures": sum(not c["pass"] for c in cases),
        "all_pass": all(c["pass"] for c in cases),
    }
