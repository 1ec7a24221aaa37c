"""
Randomized checks of the contest, solver and discounted-sum lemmas.

Every check takes a sample count and a seed and returns a ``CheckResult``;
the same seed always reproduces the same samples.
"""

import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from app.config.settings import settings
from app.models.check import CheckResult
from app.models.contest import ContestConfig
from app.models.cost import CostSpec
from app.models.dissum import DissumState
from app.processors.br_dynamics.selection import FlooredRandom, SelectionPolicy, UniformRandom
from app.processors.contest.core import (
    agent_utility,
    best_response_linear_closed_form,
    is_epsilon_equilibrium,
    solve_best_response,
)
from app.processors.discounted_sum import weak_potential
from app.processors.discounted_sum.beta import (
    AdversarialMaxBeta,
    BetaPolicy,
    CallbackBeta,
    ConstantBeta,
    UniformBeta,
)
from app.processors.discounted_sum.processor import (
    DissumBestCase,
    dissum_step,
    lower_bound_example,
    run_dissum,
)
from app.utils.exceptions import InvalidInputError, UnsupportedContestError
from app.utils.logger import get_logger

logger = get_logger("analysis.lemmas")

GRID_COARSE = 1e-3
GRID_FINE = 1e-6


def normalized_test_costs() -> List[CostSpec]:
    """Base costs with c'(1) = 1 covering every supported kind."""
    return [
        CostSpec.linear(),
        CostSpec.power(0.5),
        CostSpec.power(1.0),
        CostSpec.power(2.0),
        CostSpec.power(4.0),
        CostSpec.custom(
            lambda z: (np.expm1(z) - z) / math.expm1(1.0),
            lambda z: np.expm1(z) / math.expm1(1.0),
            lambda z: np.exp(z) / math.expm1(1.0),
            name="exp",
        ),
    ]


def _require_normalized(cfg: ContestConfig) -> None:
    if not (cfg.is_homogeneous and cfg.normalized):
        raise UnsupportedContestError("check needs a homogeneous normalized contest")


# --------------------------------------------------------------------------- partition


@dataclass(frozen=True)
class PartitionWitness:
    k: int
    indices: Tuple[int, ...]


def _partition_thresholds(n: int) -> np.ndarray:
    k = np.arange(1, n + 1)
    return 1.0 / (4.0 * k * math.log2(n))


def partition_witness(p: Sequence[float]) -> Optional[PartitionWitness]:
    """Largest k with at least k entries p_i >= 1/(4 k lg n).

    Returns None only if no k qualifies.
    """
    arr = np.asarray(p, dtype=float)
    n = arr.size
    if n < 2:
        raise InvalidInputError(f"partition needs n >= 2, got {n}")
    if np.any(arr < 0) or not np.all(np.isfinite(arr)) or abs(math.fsum(arr) - 1.0) > 1e-9:
        raise InvalidInputError("partition needs a probability vector")
    ordered = np.sort(arr)[::-1]
    qualifying = np.flatnonzero(ordered >= _partition_thresholds(n))
    if qualifying.size == 0:
        return None
    k = int(qualifying[-1]) + 1
    threshold = 1.0 / (4.0 * k * math.log2(n))
    return PartitionWitness(k, tuple(int(i) for i in np.flatnonzero(arr >= threshold)))


def partition_check(
    n_values: Sequence[int] = (2, 4, 8, 16, 64), samples: int = 10_000, seed: int = 0
) -> CheckResult:
    """Witness search on Dirichlet and sparse simplex vectors."""
    rng = np.random.default_rng(seed)
    failures = 0
    checked = 0
    for n in n_values:
        thresholds = _partition_thresholds(n)
        dense = rng.dirichlet(np.ones(n), size=samples // 2)
        sparse = rng.dirichlet(np.full(n, 0.05), size=samples - samples // 2)
        for batch in (dense, sparse):
            ordered = -np.sort(-batch, axis=1)
            found = np.any(ordered >= thresholds, axis=1)
            failures += int(np.count_nonzero(~found))
            checked += batch.shape[0]
    return CheckResult.from_counts("partition", checked, failures, n_values=list(n_values))


# ----------------------------------------------------------------------------- coupon


@dataclass
class _SelectionOnly:
    n: int
    rng: np.random.Generator
    t: int = 0
    last_mover: Optional[int] = None
    prior_mover: Optional[int] = None


@dataclass(frozen=True)
class CouponReport:
    n: int
    policy: str
    samples: np.ndarray = field(repr=False)

    def quantile(self, q: float) -> float:
        return float(np.quantile(self.samples, q))

    def tail_probability(self, threshold: float) -> float:
        return float(np.mean(self.samples > threshold))

    def to_dict(self) -> Dict[str, Any]:
        return {
            "n": self.n,
            "policy": self.policy,
            "trials": int(self.samples.size),
            "mean": float(np.mean(self.samples)),
            "quantiles": {str(q): self.quantile(q) for q in (0.5, 0.9, 0.99)},
            "max": int(np.max(self.samples)),
        }


def _all_played_time(policy: SelectionPolicy, n: int, rng: np.random.Generator) -> int:
    state = _SelectionOnly(n, rng)
    played = set()
    while len(played) < n:
        mover = policy.choose(state)
        played.add(mover)
        state.prior_mover = state.prior_mover if mover == state.last_mover else state.last_mover
        state.last_mover = mover
        state.t += 1
    return state.t


def coupon_all_played_time(
    n: int,
    L: Optional[float] = None,
    policy: Union[str, SelectionPolicy] = "uniform",
    seed: int = 0,
    trials: Optional[int] = None,
) -> CouponReport:
    """Moves until every agent has moved at least once, over seeded trials.

    ``policy`` is ``"uniform"``, ``"sticky"`` (floored with floor L,
    default 1/(2n)) or any selection policy reading only the bookkeeping.
    """
    trials = settings.monte_carlo_trials if trials is None else trials
    if trials < 1:
        raise InvalidInputError(f"trials must be >= 1, got {trials}")
    if n < 1:
        raise InvalidInputError(f"n must be >= 1, got {n}")
    rng = np.random.default_rng(seed)
    if n == 1:
        return CouponReport(1, str(policy), np.ones(trials, dtype=int))

    if policy == "uniform":
        # sum of geometric waiting times for the (k+1)-th new agent
        p = (n - np.arange(n)) / n
        samples = rng.geometric(p, size=(trials, n)).sum(axis=1)
        return CouponReport(n, "uniform", samples)

    if policy == "sticky":
        chooser: SelectionPolicy = FlooredRandom(1.0 / (2 * n) if L is None else L)
        label = "sticky"
    elif isinstance(policy, SelectionPolicy):
        chooser, label = policy, policy.name
    else:
        raise InvalidInputError(f"unknown coupon policy: {policy!r}")
    chooser.validate(n)
    samples = np.array([_all_played_time(chooser, n, rng) for _ in range(trials)])
    return CouponReport(n, label, samples)


def coupon_tail_check(n: int = 64, trials: int = 10_000, c: float = 3.0, seed: int = 0) -> CheckResult:
    """Empirical P[T > n ln n + c n] under uniform selection against e^{-c} plus slack."""
    report = coupon_all_played_time(n, policy="uniform", seed=seed, trials=trials)
    threshold = n * math.log(n) + c * n
    observed = report.tail_probability(threshold)
    bound = math.exp(-c) * (1.0 + settings.tail_slack)
    return CheckResult(
        "coupon_tail",
        observed < bound,
        trials,
        0 if observed < bound else 1,
        {"observed": observed, "bound": bound, "threshold": threshold},
    )


def coupon_dominance_check(n: int = 8, trials: int = 1000, seed: int = 0) -> CheckResult:
    """Sticky floored selection with L = 1/(2n) waits at least as long as uniform."""
    uniform = coupon_all_played_time(n, policy="uniform", seed=seed, trials=trials)
    sticky = coupon_all_played_time(n, policy="sticky", seed=seed + 1, trials=trials)
    quantiles = (0.25, 0.5, 0.75, 0.9)
    worse = [q for q in quantiles if sticky.quantile(q) < uniform.quantile(q)]
    return CheckResult(
        "coupon_dominance",
        not worse,
        len(quantiles),
        len(worse),
        {"uniform": uniform.to_dict(), "sticky": sticky.to_dict()},
    )


# ------------------------------------------------------------------ near equilibrium


def _near_ones(rng: np.random.Generator, n: int, radius: float) -> np.ndarray:
    """A profile with ||x - 1||_1 <= radius."""
    direction = rng.standard_normal(n)
    norm = math.fsum(np.abs(direction))
    scale = radius * (1.0 if rng.random() < 0.5 else rng.random())
    return 1.0 + direction * (scale / norm if norm > 0 else 0.0)


def epsilon_neighborhood_check(
    cfg: ContestConfig, eps: float, samples: int = 200, seed: int = 0
) -> CheckResult:
    """Profiles within l1-distance eps of all ones are (4n eps)-approximate
    equilibria (3 eps when n = 2)."""
    _require_normalized(cfg)
    n = cfg.n
    if not 0.0 < eps <= 1.0 / (4 * n):
        raise InvalidInputError(f"eps must lie in (0, 1/(4n)], got {eps}")
    factor = 3.0 if n == 2 else 4.0 * n
    rng = np.random.default_rng(seed)
    violations = 0
    worst_gap = 0.0
    for k in range(samples):
        x = np.ones(n) if k == 0 else _near_ones(rng, n, eps)
        report = is_epsilon_equilibrium(cfg, x, factor * eps)
        worst_gap = max(worst_gap, report.worst_gap)
        if not report.holds:
            violations += 1
    return CheckResult.from_counts(
        "epsilon_neighborhood",
        samples,
        violations,
        eps=eps,
        factor=factor,
        worst_gap=worst_gap,
        worst_slack=worst_gap / (factor * eps),
    )


def reverse_lipschitz_check(
    cfg: ContestConfig, samples: int = 10_000, radius: float = 0.5, seed: int = 0
) -> CheckResult:
    """u(x_i) <= (1 - (x_i - BR)^2 / (8 n^2)) u(BR) near all ones."""
    _require_normalized(cfg)
    n = cfg.n
    rng = np.random.default_rng(seed)
    checked = 0
    violations = 0
    for _ in range(samples):
        x = _near_ones(rng, n, radius)
        i = int(rng.integers(n))
        s_minus = math.fsum(np.delete(x, i))
        cost = cfg.costs[i]
        br = solve_best_response(cost, s_minus, cfg.a)
        if abs(br - 1.0) > radius or x[i] == br:
            continue
        checked += 1
        u_x = agent_utility(cost, n, float(x[i]), s_minus)
        u_br = agent_utility(cost, n, br, s_minus)
        bound = (1.0 - (x[i] - br) ** 2 / (8 * n * n)) * u_br
        if u_x > bound + settings.equilibrium_rel_slack * abs(u_br):
            violations += 1
    return CheckResult.from_counts("reverse_lipschitz", checked, violations, n=n)


# ---------------------------------------------------------------------- best response


def two_agent_br_monotonicity(
    samples: int = 10_000, seed: int = 0, costs: Optional[Sequence[CostSpec]] = None
) -> CheckResult:
    """n = 2: x < BR(x) < 1 on (0, 1), BR(1) = 1, BR(x) < 1 above 1."""
    rng = np.random.default_rng(seed)
    configs = [ContestConfig.homogeneous(2, c) for c in (costs or normalized_test_costs())]
    violations = 0
    for cfg in configs:
        if abs(solve_best_response(cfg.costs[0], 1.0, cfg.a) - 1.0) > 1e-10:
            violations += 1
    for _ in range(samples):
        cfg = configs[int(rng.integers(len(configs)))]
        cost = cfg.costs[0]
        below = float(rng.uniform(1e-3, 1.0 - 1e-3))
        above = float(rng.uniform(1.0 + 1e-3, 10.0))
        br_below = solve_best_response(cost, below, cfg.a)
        if not (below < br_below < 1.0):
            violations += 1
        if not solve_best_response(cost, above, cfg.a) < 1.0:
            violations += 1
    return CheckResult.from_counts(
        "two_agent_br_monotonicity", 2 * samples + len(configs), violations
    )


def equilibrium_fixed_point_check(n_values: Sequence[int] = (2, 3, 5, 10)) -> CheckResult:
    """BR(n - 1) = 1 for every normalized cost kind."""
    violations = 0
    worst = 0.0
    checked = 0
    for base in normalized_test_costs():
        for n in n_values:
            cfg = ContestConfig.homogeneous(n, base)
            error = abs(solve_best_response(cfg.costs[0], n - 1.0, cfg.a) - 1.0)
            worst = max(worst, error)
            checked += 1
            if error > 1e-10:
                violations += 1
    return CheckResult.from_counts("equilibrium_fixed_point", checked, violations, worst=worst)


def solver_closed_form_check(samples: int = 1000, seed: int = 0) -> CheckResult:
    """Numerical BR against max(0, n sqrt(s/(n-1)) - s) for linear costs."""
    rng = np.random.default_rng(seed)
    configs = {n: ContestConfig.homogeneous(n, CostSpec.linear()) for n in range(2, 11)}
    violations = 0
    worst = 0.0
    for _ in range(samples):
        n = int(rng.integers(2, 11))
        s = float(10.0 * (1.0 - rng.random()))
        cfg = configs[n]
        error = abs(
            solve_best_response(cfg.costs[0], s, cfg.a) - best_response_linear_closed_form(n, s)
        )
        worst = max(worst, error)
        if error > 1e-9:
            violations += 1
    return CheckResult.from_counts("solver_closed_form", samples, violations, worst=worst)


def _grid_argmax(cost: CostSpec, s_minus: float, lo: float, hi: float, step: float) -> float:
    k = np.arange(math.ceil(lo / step), math.floor(hi / step) + 1)
    z = k * step
    values = z / (z + s_minus) - cost.value(z)
    return float(z[int(np.argmax(values))])


def grid_best_response(cost: CostSpec, s_minus: float, guess: float = 1.0) -> float:
    """Maximizer of the utility on the 1e-6 grid: coarse 1e-3 scan, then a fine window."""
    hi = 2.0 * max(1.0, guess) + 1.0
    while True:
        coarse = _grid_argmax(cost, s_minus, 0.0, hi, GRID_COARSE)
        if coarse < hi - 2 * GRID_COARSE:
            break
        hi *= 2.0
    lo = max(0.0, coarse - 2 * GRID_COARSE)
    return _grid_argmax(cost, s_minus, lo, coarse + 2 * GRID_COARSE, GRID_FINE)


def _random_power_cost(rng: np.random.Generator) -> CostSpec:
    r = float(rng.uniform(0.0, 8.0))
    coeff = float(math.exp(rng.uniform(math.log(0.1), math.log(10.0))))
    return CostSpec.scaled_power(coeff, r)


def solver_grid_check(samples: int = 1000, seed: int = 0) -> CheckResult:
    """Numerical BR within one fine grid step of the grid maximizer."""
    rng = np.random.default_rng(seed)
    violations = 0
    worst = 0.0
    for _ in range(samples):
        cost = _random_power_cost(rng)
        s = float(rng.uniform(0.05, 5.0))
        br = solve_best_response(cost, s, settings.default_a)
        error = abs(br - grid_best_response(cost, s, br))
        worst = max(worst, error)
        if error > GRID_FINE * (1.0 + 1e-6):
            violations += 1
    return CheckResult.from_counts("solver_grid", samples, violations, worst=worst)


def concavity_check(samples: int = 200, seed: int = 0) -> CheckResult:
    """The marginal utility is strictly decreasing in z for s_minus > 0."""
    rng = np.random.default_rng(seed)
    z = np.linspace(0.0, 10.0, 1001)
    violations = 0
    for _ in range(samples):
        cost = _random_power_cost(rng)
        s = float(rng.uniform(0.05, 10.0))
        marginal = s / (z + s) ** 2 - cost.derivative(z)
        if not np.all(np.diff(marginal) < 0):
            violations += 1
    return CheckResult.from_counts("concavity", samples, violations)


def br_bracket_check(samples: int = 1000, seed: int = 0) -> CheckResult:
    """BR < max(1, (c')^{-1}(1)) for s_minus > 0."""
    rng = np.random.default_rng(seed)
    violations = 0
    for _ in range(samples):
        cost = _random_power_cost(rng)
        s = float(rng.uniform(0.01, 10.0))
        br = solve_best_response(cost, s, settings.default_a)
        bound = max(1.0, cost.inverse_derivative(1.0))
        if br > bound * (1.0 + 1e-12):
            violations += 1
    return CheckResult.from_counts("br_bracket", samples, violations)


# -------------------------------------------------------------------- discounted sum


def _random_beta_policy(rng: np.random.Generator, B: float) -> BetaPolicy:
    kind = int(rng.integers(4))
    if kind == 0:
        return ConstantBeta(float(rng.uniform(0.0, B)))
    if kind == 1:
        return UniformBeta()
    if kind == 2:
        return AdversarialMaxBeta()
    return CallbackBeta(lambda z, i, g: g.uniform(0.0, B) if z[i] >= 0 else B)


def potential_examples_check() -> CheckResult:
    """Direct evaluations of f, V and W on hand-computed vectors."""
    cases = [
        (np.zeros(4), 0.0, 0.0, 0.0),
        (np.array([-1.0, 1.0, 0.0, 0.0]), 1.0, 1.0, 1.0),
        (np.array([2.0, -0.5, -1.0, 0.3]), 2.3, 1.5, 2.3),
    ]
    violations = 0
    for z, V, W, f in cases:
        value = weak_potential.potential(z)
        if not (
            math.isclose(value.V, V, abs_tol=1e-15)
            and math.isclose(value.W, W, abs_tol=1e-15)
            and math.isclose(value.f, f, abs_tol=1e-15)
        ):
            violations += 1
    return CheckResult.from_counts("potential_examples", len(cases), violations)


def potential_fuzz_check(steps: int = 100_000, seed: int = 0, episode: int = 200) -> CheckResult:
    """f never rises and every move obeys the sign/contraction contract.

    Random n in [2, 64], random B, beta policies and movers.
    """
    rng = np.random.default_rng(seed)
    slack = settings.potential_rel_slack
    rises = 0
    contract = 0
    bracket = 0
    done = 0
    while done < steps:
        n = int(rng.integers(2, 65))
        B = float(rng.uniform(0.0, 0.99))
        z0 = rng.standard_normal(n) * float(math.exp(rng.uniform(-3.0, 3.0)))
        state = DissumState(z=z0, B=B, beta_policy=_random_beta_policy(rng, B), rng=rng)
        f = weak_potential.potential(state.z).f
        for _ in range(min(episode, steps - done)):
            i = int(rng.integers(n))
            sigma = state.sigma_minus(i)
            state = dissum_step(state, i)
            value = weak_potential.potential(state.z)
            z_new = float(state.z[i])
            if value.f > f * (1.0 + slack):
                rises += 1
            if z_new * sigma > 0 or abs(z_new) > B * abs(sigma):
                contract += 1
            l1 = math.fsum(np.abs(state.z))
            if not (value.f <= l1 * (1.0 + 1e-12) and l1 <= 2.0 * value.f * (1.0 + 1e-12)):
                bracket += 1
            f = value.f
            done += 1
    return CheckResult.from_counts(
        "potential_fuzz",
        done,
        rises + contract + bracket,
        rises=rises,
        contract_violations=contract,
        bracket_violations=bracket,
    )


def lower_bound_check() -> CheckResult:
    """Best case needs >= n moves on all ones and >= 1 + ln(kappa/eps)/ln(1/B)
    on the two-coordinate instance."""
    details: Dict[str, Any] = {}
    violations = 0

    ones = lower_bound_example("all_ones", n=16)
    trace = run_dissum(ones.z0, ones.B, ones.beta_policy, ones.schedule, eps=0.5)
    details["all_ones_steps"] = trace.summary.steps
    if not trace.summary.converged or trace.summary.steps < 16:
        violations += 1

    kappa, B, eps = 1.0, 0.9, 1e-6
    pair = lower_bound_example("two_coordinate", kappa=kappa, B=B)
    trace = run_dissum(pair.z0, pair.B, pair.beta_policy, pair.schedule, eps=eps)
    needed = math.ceil(1.0 + math.log(kappa / eps) / math.log(1.0 / B))
    details["two_coordinate_steps"] = trace.summary.steps
    details["two_coordinate_needed"] = needed
    if not trace.summary.converged or trace.summary.steps < needed:
        violations += 1
    assert trace.potentials is not None
    ratios = trace.potentials[2:] / trace.potentials[1:-1]
    if not np.allclose(ratios, B, rtol=1e-12, atol=0.0):
        violations += 1
    return CheckResult.from_counts("lower_bound_instances", 3, violations, **details)


def randomized_dissum_check(
    n_values: Sequence[int] = (4, 8, 16),
    trials: int = 100,
    eps: float = 1e-6,
    delta: float = 0.05,
    C: float = 32.0,
    seed: int = 0,
) -> CheckResult:
    """Uniform selection with beta = B = 1/2 reaches ||z||_1 <= eps within
    C n^2 lg n lg(f(z0)/(eps delta)) steps in >= (1 - delta) of trials."""
    rng = np.random.default_rng(seed)
    failures_by_n: Dict[int, int] = {}
    violations = 0
    for n in n_values:
        failures = 0
        for trial in range(trials):
            z0 = rng.uniform(-1.0, 1.0, n)
            f0 = weak_potential.potential(z0).f
            budget = math.ceil(C * n * n * math.log2(n) * math.log2(f0 / (eps * delta)))
            trace = run_dissum(
                z0, 0.5, AdversarialMaxBeta(), UniformRandom(), eps=eps,
                max_steps=budget, seed=seed + trial,
            )
            if not trace.summary.converged:
                failures += 1
        failures_by_n[n] = failures
        logger.debug(f"randomized discounted sum n={n}: {failures}/{trials} runs missed the budget")
        if failures > delta * trials:
            violations += 1
    return CheckResult.from_counts(
        "randomized_dissum", len(n_values), violations, failures=failures_by_n
    )


def best_case_dissum_check(
    n_values: Sequence[int] = (4, 8, 16),
    B_values: Sequence[float] = (0.5, 0.9),
    eps: float = 1e-6,
    C: float = 8.0,
    seed: int = 0,
) -> CheckResult:
    """Best-case selection needs at most C n lg(f(z0)/eps)/(1 - B) steps."""
    rng = np.random.default_rng(seed)
    violations = 0
    runs: List[Dict[str, Any]] = []
    for n in n_values:
        for B in B_values:
            z0 = rng.uniform(-1.0, 1.0, n)
            f0 = weak_potential.potential(z0).f
            bound = C * n * math.log2(f0 / eps) / (1.0 - B)
            trace = run_dissum(
                z0, B, AdversarialMaxBeta(), DissumBestCase(), eps=eps,
                max_steps=math.ceil(bound),
            )
            runs.append({"n": n, "B": B, "steps": trace.summary.steps, "bound": bound})
            if not trace.summary.converged:
                violations += 1
    return CheckResult.from_counts("best_case_dissum", len(runs), violations, runs=runs)
