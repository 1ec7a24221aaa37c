"""
Measured convergence of best-response runs against the predicted rates.
"""

import math
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from app.models.check import CheckResult
from app.models.contest import ContestConfig
from app.models.cost import CostSpec
from app.models.dynamics import StoppingRule, StopReason
from app.processors.analysis.gamma import gamma_two_agent
from app.processors.analysis.invariants import (
    br_trace_observers,
    merge_results,
    two_agent_monotone,
)
from app.processors.analysis.lemmas import normalized_test_costs
from app.processors.analysis.rates import (
    RatePrediction,
    curved_warm_phase_window,
    eps_doubling_gaps,
    fit_rate,
    lglg,
    steps_to_reach,
)
from app.processors.br_dynamics.cycles import heterogeneous_cycle_example, two_agent_z_sequence
from app.processors.br_dynamics.processor import run
from app.processors.br_dynamics.selection import Alternating, BestCaseGreedy, UniformRandom
from app.processors.contest.core import solve_best_response
from app.utils.exceptions import FitError
from app.utils.logger import get_logger

logger = get_logger("analysis.convergence")

TWO_AGENT_EPS = (1e-2, 1e-4, 1e-8, 1e-16)
# opening period of the heterogeneous cycle instance, four decimals
TABLE_CYCLE_ROWS = (
    (0.1058, 1.3102),
    (0.1131, 1.3102),
    (0.1131, 1.3468),
    (0.1058, 1.3468),
    (0.1058, 1.3102),
    (0.1131, 1.3102),
)


def two_agent_steps(
    base: CostSpec,
    z0: float,
    eps_values: Sequence[float] = TWO_AGENT_EPS,
    max_steps: int = 200,
) -> List[Tuple[float, Optional[int]]]:
    """Steps to an eps-equilibrium for two agents, agent 1 responding to z0 first."""
    cfg = ContestConfig.homogeneous(2, base)
    measured: List[Tuple[float, Optional[int]]] = []
    for eps in eps_values:
        trace = run(
            cfg, (z0, z0), Alternating(first=1),
            StoppingRule.epsilon_equilibrium(eps, max_steps=max_steps),
        )
        measured.append((eps, trace.summary.convergence_step))
    return measured


def two_agent_rate_check(
    z0: float = 0.5,
    eps_values: Sequence[float] = TWO_AGENT_EPS,
    max_spread: float = 2.0,
    max_constant: float = 6.0,
) -> CheckResult:
    """steps(eps) - lglg(1/eps) is a bounded constant and squaring eps costs <= 1 step."""
    base = CostSpec.linear()
    measured = two_agent_steps(base, z0, eps_values)
    detail: Dict[str, object] = {"steps": [[e, s] for e, s in measured]}
    if any(s is None for _, s in measured):
        return CheckResult("two_agent_rate", False, len(measured), 1, detail)

    pairs = [(e, int(s)) for e, s in measured if s is not None]
    constants = [s - lglg(1.0 / e) for e, s in pairs]
    gaps = eps_doubling_gaps(pairs)
    spread = max(constants) - min(constants)
    detail.update(constants=constants, spread=spread, gaps=gaps)

    cfg = ContestConfig.homogeneous(2, base)
    gamma = gamma_two_agent(cfg, z0).gamma
    try:
        detail["fit"] = fit_rate(pairs, RatePrediction.two_agent(gamma)).to_dict()
    except FitError as e:
        detail["fit_error"] = str(e)

    violations = int(spread > max_spread) + int(max(constants) > max_constant)
    violations += sum(1 for g in gaps if g > 1)
    return CheckResult.from_counts("two_agent_rate", len(pairs), violations, **detail)


def curved_warm_phase_steps(q: float, gamma: float, max_steps: int = 60) -> Optional[int]:
    """First t with z_t >= 1/2 from z_0 = gamma under c'(z) = z^q."""
    cfg = ContestConfig.homogeneous(2, CostSpec.power(q))
    trace = run(cfg, (gamma, gamma), Alternating(first=1), StoppingRule.steps(max_steps))
    return steps_to_reach(two_agent_z_sequence(trace), 0.5)


def curved_warm_phase_check(
    q_values: Sequence[float] = (1.0, 2.0, 4.0), gamma: float = 1e-12
) -> CheckResult:
    """Reaching 1/2 takes lglg(1/gamma)/lg(2+q) steps, give or take [-3, +1]."""
    violations = 0
    rows = []
    for q in q_values:
        t = curved_warm_phase_steps(q, gamma)
        centre = lglg(1.0 / gamma) / math.log2(2.0 + q)
        lo, hi = curved_warm_phase_window(gamma, q, q)
        ok = t is not None and centre - 3.0 <= t <= centre + 1.0 and lo <= t <= math.ceil(hi)
        rows.append({"q": q, "steps": t, "predicted": centre, "window": [lo, hi]})
        if not ok:
            violations += 1
    return CheckResult.from_counts("curved_warm_phase", len(rows), violations, runs=rows)


def gamma_sandwich_check(z0_values: Sequence[float] = (2.0, 8.0, 16.0, 100.0)) -> CheckResult:
    """Responding to z0 > 1 lands in [(c')^{-1}(1/z0), (c')^{-1}(4/z0)] when c'(0) = 0."""
    violations = 0
    checked = 0
    for base in normalized_test_costs():
        if base.c_prime_at_zero != 0.0:
            continue
        cfg = ContestConfig.homogeneous(2, base)
        for z0 in z0_values:
            checked += 1
            z1 = solve_best_response(cfg.costs[1], z0, cfg.a)
            lo = base.inverse_derivative(1.0 / z0)
            hi = base.inverse_derivative(4.0 / z0)
            if not lo * (1.0 - 1e-9) <= z1 <= hi * (1.0 + 1e-9):
                violations += 1
    return CheckResult.from_counts("gamma_sandwich", checked, violations)


def two_agent_monotone_check(
    z0_values: Sequence[float] = (1e-6, 0.01, 0.3, 0.9, 4.0, 16.0),
) -> CheckResult:
    """The z-sequence of two-agent runs is increasing below 1."""
    results = []
    for base in normalized_test_costs():
        cfg = ContestConfig.homogeneous(2, base)
        for z0 in z0_values:
            trace = run(cfg, (z0, z0), Alternating(first=1), StoppingRule.steps(40))
            results.append(two_agent_monotone(trace))
    return merge_results("two_agent_monotone", results)


def table_cycle_check(tol: float = 5e-4, max_steps: int = 400) -> CheckResult:
    """The heterogeneous two-agent instance plays the tabulated period and is
    then reported as a period-4 cycle, each agent alternating between two values.

    The opening rows are compared with the table (absolute ``tol``). The
    oscillation contracts by well under 1% of its amplitude per period, so the
    detected window sits a few periods later and is not compared with the
    tabulated values.
    """
    cfg, x0, policy = heterogeneous_cycle_example()
    trace = run(cfg, x0, policy, StoppingRule.cycle(max_steps=max_steps, tol=tol))
    opening = trace.states[: len(TABLE_CYCLE_ROWS)]
    table_gap = (
        float(np.max(np.abs(opening - np.asarray(TABLE_CYCLE_ROWS))))
        if len(opening) == len(TABLE_CYCLE_ROWS)
        else math.inf
    )
    cycle = trace.summary.cycle
    if trace.summary.stop_reason is not StopReason.CYCLE or cycle is None:
        return CheckResult(
            "table_cycle",
            False,
            2,
            2 - int(table_gap <= tol),
            {"stop_reason": trace.summary.stop_reason.value, "table_gap": table_gap},
        )
    observed = [cycle.agent_values(i) for i in range(2)]
    two_values = all(len(values) == 2 for values in observed)
    return CheckResult.from_counts(
        "table_cycle",
        2,
        int(table_gap > tol) + int(not (cycle.period == 4 and two_values)),
        table_gap=table_gap,
        period=cycle.period,
        start_t=cycle.start_t,
        agent_values=observed,
    )


def random_budget(n: int, eps: float, C: float = 32.0) -> int:
    return math.ceil(C * n * n * math.log2(n) * math.log2(n / eps))


def n_agent_random_check(
    n_values: Sequence[int] = (3, 10, 30),
    trials: int = 100,
    eps: float = 1e-9,
    start: float = 5.0,
    seed: int = 0,
) -> List[CheckResult]:
    """Uniform selection from (start, ..., start) reaches an eps-equilibrium
    within 32 n^2 lg n lg(n/eps) steps in every trial.

    Step invariants observed along the way come back as extra results.
    """
    base = CostSpec.linear()
    failures: Dict[int, int] = {}
    steps: Dict[int, List[int]] = {}
    observed: Dict[str, List[CheckResult]] = {}
    for n in n_values:
        cfg = ContestConfig.homogeneous(n, base)
        budget = random_budget(n, eps)
        failures[n] = 0
        steps[n] = []
        for trial in range(trials):
            observers = br_trace_observers(cfg)
            trace = run(
                cfg, np.full(n, start), UniformRandom(),
                StoppingRule.epsilon_equilibrium(eps, max_steps=budget),
                seed=seed + trial, observers=observers,
            )
            if trace.summary.converged:
                steps[n].append(trace.summary.steps)
            else:
                failures[n] += 1
            for check in observers:
                observed.setdefault(check.name, []).append(check.result())
        logger.debug(f"n={n}: {trials - failures[n]}/{trials} converged within {budget} steps")

    quantiles = {
        n: {str(q): float(np.quantile(s, q)) for q in (0.5, 0.9)} if s else {}
        for n, s in steps.items()
    }
    convergence = CheckResult.from_counts(
        "n_agent_random",
        len(n_values) * trials,
        sum(failures.values()),
        failures=failures,
        step_quantiles=quantiles,
    )
    return [convergence] + [merge_results(name, rs) for name, rs in sorted(observed.items())]


def n_agent_best_case_check(
    n_values: Sequence[int] = (3, 5, 10),
    eps: float = 1e-9,
    start: float = 5.0,
    C: float = 32.0,
) -> CheckResult:
    """Greedy selection needs O(n lg(n/eps)) steps after a warm-up round robin."""
    runs = []
    violations = 0
    for n in n_values:
        cfg = ContestConfig.homogeneous(n, CostSpec.linear())
        budget = math.ceil(C * n * math.log2(n / eps)) + 64 * n
        trace = run(
            cfg, np.full(n, start), BestCaseGreedy(),
            StoppingRule.epsilon_equilibrium(eps, max_steps=budget),
        )
        runs.append({"n": n, "steps": trace.summary.steps, "budget": budget})
        if not trace.summary.converged:
            violations += 1
    return CheckResult.from_counts("n_agent_best_case", len(runs), violations, runs=runs)
