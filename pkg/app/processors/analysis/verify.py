"""
Verification suites: named groups of invariant and lemma checks.

``run_suite("all")`` runs every group. The ``quick`` scale shrinks sample
and trial counts for smoke runs; the full scale matches the documented
acceptance sizes.
"""

from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Sequence, Union

import numpy as np

from app.models.check import CheckResult
from app.models.contest import ContestConfig
from app.models.cost import CostSpec
from app.models.dynamics import StoppingRule
from app.processors.analysis import convergence, lemmas
from app.processors.analysis.invariants import (
    PersistenceCheck,
    l1_bracket,
    merge_results,
    potential_monotone,
    sign_contraction,
)
from app.processors.br_dynamics.processor import run
from app.processors.br_dynamics.selection import FlooredRandom, RoundRobin, UniformRandom
from app.processors.discounted_sum import weak_potential
from app.processors.discounted_sum.beta import AdversarialMaxBeta, UniformBeta
from app.processors.discounted_sum.processor import dissum_step, run_dissum, stall_example
from app.utils.exceptions import ConfigError
from app.utils.logger import get_logger

logger = get_logger("analysis.verify")

SUITES = ("core", "two_agent", "dissum", "n_agent", "lemmas")


@dataclass(frozen=True)
class VerifyScale:
    name: str
    samples: int
    fuzz_steps: int
    coupon_trials: int
    partition_samples: int
    random_trials: int
    random_n: Sequence[int]
    dissum_trials: int


FULL = VerifyScale(
    name="full",
    samples=10_000,
    fuzz_steps=100_000,
    coupon_trials=10_000,
    partition_samples=10_000,
    random_trials=100,
    random_n=(3, 10, 30),
    dissum_trials=100,
)
QUICK = VerifyScale(
    name="quick",
    samples=500,
    fuzz_steps=10_000,
    coupon_trials=2_000,
    partition_samples=1_000,
    random_trials=5,
    random_n=(3, 10),
    dissum_trials=10,
)

Check = Callable[[VerifyScale, int], Union[CheckResult, List[CheckResult]]]


@dataclass
class VerifyReport:
    suite: str
    scale: str
    seed: int
    results: List[CheckResult] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results)

    @property
    def failed(self) -> List[str]:
        return [r.name for r in self.results if not r.passed]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "suite": self.suite,
            "scale": self.scale,
            "seed": self.seed,
            "passed": self.passed,
            "failed": self.failed,
            "checks": [r.to_dict() for r in self.results],
        }


# ------------------------------------------------------------------------- suites


def _epsilon_neighborhood(scale: VerifyScale, seed: int) -> List[CheckResult]:
    samples = max(50, scale.samples // 50)
    return [
        lemmas.epsilon_neighborhood_check(
            ContestConfig.homogeneous(n, CostSpec.linear()), 0.01, samples, seed
        )
        for n in (2, 5)
    ]


def _potential_traces(scale: VerifyScale, seed: int) -> List[CheckResult]:
    rng = np.random.default_rng(seed)
    results: Dict[str, List[CheckResult]] = {}
    for k in range(max(4, scale.dissum_trials // 5)):
        n = int(rng.integers(2, 17))
        B = float(rng.uniform(0.1, 0.95))
        policy = AdversarialMaxBeta() if k % 2 else UniformBeta()
        trace = run_dissum(
            rng.standard_normal(n), B, policy, UniformRandom(), eps=1e-9,
            max_steps=20_000, seed=seed + k,
        )
        for result in (potential_monotone(trace), sign_contraction(trace, B), l1_bracket(trace)):
            results.setdefault(result.name, []).append(result)
    return [merge_results(name, rs) for name, rs in results.items()]


def _stall(scale: VerifyScale, seed: int) -> CheckResult:
    """Moving a zero coordinate of (-1, 1, 0, ...) leaves f unchanged."""
    state = stall_example(4)
    before = weak_potential.potential(state.z).f
    after = weak_potential.potential(dissum_step(state, 2).z).f
    return CheckResult.from_counts("stall_example", 1, int(after != before), f=before)


def _persistence(scale: VerifyScale, seed: int) -> CheckResult:
    rng = np.random.default_rng(seed)
    results = []
    policies = (UniformRandom(), RoundRobin())
    for k in range(max(6, scale.samples // 500)):
        n = int(rng.integers(3, 9))
        base = lemmas.normalized_test_costs()[k % 5]
        cfg = ContestConfig.homogeneous(n, base)
        check = PersistenceCheck(cfg)
        run(
            cfg, rng.uniform(0.0, 3.0, n), policies[k % 2], StoppingRule.steps(300),
            seed=seed + k, observers=[check],
        )
        results.append(check.result())
    return merge_results("persistence", results)


def _sticky_selection(scale: VerifyScale, seed: int) -> CheckResult:
    """Floored random selection still converges on a small contest."""
    n = 4
    cfg = ContestConfig.homogeneous(n, CostSpec.linear())
    eps = 1e-6
    budget = convergence.random_budget(n, eps, C=32.0 * 4)
    trace = run(
        cfg, np.full(n, 2.0), FlooredRandom(1.0 / (2 * n)),
        StoppingRule.epsilon_equilibrium(eps, max_steps=budget), seed=seed,
    )
    return CheckResult.from_counts(
        "floored_selection", 1, int(not trace.summary.converged), steps=trace.summary.steps
    )


CHECKS: Dict[str, List[Check]] = {
    "core": [
        lambda s, seed: lemmas.solver_closed_form_check(1000, seed),
        lambda s, seed: lemmas.solver_grid_check(1000 if s is FULL else 100, seed),
        lambda s, seed: lemmas.concavity_check(max(50, s.samples // 50), seed),
        lambda s, seed: lemmas.br_bracket_check(1000, seed),
        lambda s, seed: lemmas.equilibrium_fixed_point_check(),
        _epsilon_neighborhood,
    ],
    "two_agent": [
        lambda s, seed: convergence.two_agent_rate_check(),
        lambda s, seed: convergence.curved_warm_phase_check(),
        lambda s, seed: convergence.table_cycle_check(),
        lambda s, seed: convergence.gamma_sandwich_check(),
        lambda s, seed: convergence.two_agent_monotone_check(),
        lambda s, seed: lemmas.two_agent_br_monotonicity(s.samples, seed),
    ],
    "dissum": [
        lambda s, seed: lemmas.potential_examples_check(),
        lambda s, seed: lemmas.potential_fuzz_check(s.fuzz_steps, seed),
        lambda s, seed: lemmas.lower_bound_check(),
        _stall,
        _potential_traces,
        lambda s, seed: lemmas.randomized_dissum_check(trials=s.dissum_trials, seed=seed),
        lambda s, seed: lemmas.best_case_dissum_check(seed=seed),
    ],
    "n_agent": [
        lambda s, seed: convergence.n_agent_random_check(s.random_n, s.random_trials, seed=seed),
        lambda s, seed: convergence.n_agent_best_case_check(),
        _sticky_selection,
    ],
    "lemmas": [
        lambda s, seed: lemmas.partition_check(samples=s.partition_samples, seed=seed),
        lambda s, seed: lemmas.coupon_tail_check(trials=s.coupon_trials, seed=seed),
        lambda s, seed: lemmas.coupon_dominance_check(trials=max(200, s.samples // 10), seed=seed),
        lambda s, seed: lemmas.reverse_lipschitz_check(
            ContestConfig.homogeneous(3, CostSpec.linear()), s.samples, seed=seed
        ),
        lambda s, seed: lemmas.reverse_lipschitz_check(
            ContestConfig.homogeneous(5, CostSpec.power(1.0)), s.samples // 2, seed=seed
        ),
        _persistence,
    ],
}


def suite_names() -> Sequence[str]:
    return SUITES + ("all",)


def _run_check(check: Check, scale: VerifyScale, seed: int, suite: str, k: int) -> List[CheckResult]:
    try:
        outcome = check(scale, seed)
    except Exception as e:
        logger.error(f"{suite} check #{k} crashed: {e}")
        return [CheckResult(f"{suite}_check_{k}", False, 0, 1, {"error": repr(e)})]
    return outcome if isinstance(outcome, list) else [outcome]


def run_suite(name: str, quick: bool = False, seed: int = 0) -> VerifyReport:
    """Run one suite (or ``all``) and collect every check result."""
    if name not in suite_names():
        raise ConfigError(f"unknown suite {name!r}; expected one of {', '.join(suite_names())}")
    scale = QUICK if quick else FULL
    report = VerifyReport(name, scale.name, seed)
    for suite in SUITES if name == "all" else (name,):
        logger.info(f"verifying suite {suite} ({scale.name})")
        for k, check in enumerate(CHECKS[suite]):
            report.results.extend(_run_check(check, scale, seed, suite, k))
    for result in report.results:
        if not result.passed:
            logger.warning(f"check {result.name} failed: {result.violations} violations")
    logger.info(
        f"suite {name}: {len(report.results) - len(report.failed)}/{len(report.results)} passed"
    )
    return report
