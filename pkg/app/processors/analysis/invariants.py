"""
Invariant checks on best-response and discounted-sum traces.

Step-level checks are observers: pass them to ``br_dynamics.run`` to check
a run while it streams (ring-buffer traces included), or feed them a stored
trace through ``replay``.
"""

import math
from typing import Any, Dict, Iterable, Iterator, List, Optional, Sequence

import numpy as np

from app.config.settings import settings
from app.models.check import CheckResult
from app.models.contest import ContestConfig
from app.models.cost import CostKind
from app.models.dynamics import Trace
from app.processors.br_dynamics.cycles import two_agent_z_sequence
from app.processors.br_dynamics.processor import StepEvent
from app.processors.br_dynamics.warmup import warmup_conditions
from app.processors.discounted_sum import weak_potential
from app.utils.exceptions import UnsupportedContestError

CONTRACT_SLACK = 1e-9
# s_{-i} is refolded from the profile, so a repeat may move by a few ulps
REPEAT_TOL = 1e-12


def replay(trace: Trace) -> Iterator[StepEvent]:
    """Rebuild the move events of a stored trace."""
    for k in range(1, len(trace)):
        mover = int(trace.movers[k])
        before = trace.states[k - 1]
        s_minus = max(0.0, math.fsum(before) - float(before[mover]))
        yield StepEvent(int(trace.times[k]), mover, before, trace.states[k], s_minus)


class StepCheck:
    """Counts checked and violating moves; keeps the first few violations."""

    name = "step_check"
    keep = 5

    def __init__(self) -> None:
        self.checked = 0
        self.violations = 0
        self.examples: List[Dict[str, Any]] = []

    def __call__(self, event: StepEvent) -> None:
        raise NotImplementedError

    def _flag(self, event: StepEvent, **info: Any) -> None:
        self.violations += 1
        if len(self.examples) < self.keep:
            self.examples.append({"t": event.t, "mover": event.mover, **info})

    def result(self) -> CheckResult:
        return CheckResult.from_counts(
            self.name, self.checked, self.violations, examples=self.examples
        )


def _is_linear(cfg: ContestConfig) -> bool:
    return cfg.base_cost is not None and cfg.base_cost.kind is CostKind.LINEAR


def _require_homogeneous(cfg: ContestConfig, what: str) -> None:
    if not (cfg.is_homogeneous and cfg.normalized):
        raise UnsupportedContestError(f"{what} needs a homogeneous normalized contest")


class PersistenceCheck(StepCheck):
    """s_t > 0 after the first move; s < kappa is absorbing; two positive
    outputs below kappa force a positive response."""

    name = "persistence"

    def __init__(self, cfg: ContestConfig):
        super().__init__()
        _require_homogeneous(cfg, "persistence")
        self.kappa = cfg.kappa

    def __call__(self, event: StepEvent) -> None:
        self.checked += 1
        s_before = math.fsum(event.before)
        s_after = math.fsum(event.after)
        if not s_after > 0:
            self._flag(event, rule="positive_total", s=s_after)
        if s_before < self.kappa and not s_after < self.kappa:
            self._flag(event, rule="below_kappa", s_before=s_before, s_after=s_after)
        if (
            s_before < self.kappa
            and int(np.count_nonzero(event.before > 0)) >= 2
            and not event.after[event.mover] > 0
        ):
            self._flag(event, rule="positive_response", output=float(event.after[event.mover]))


class DissumContractCheck(StepCheck):
    """Moves facing s_{-i} >= 1/(n-1) behave like a discounted-sum step with B = 1/2."""

    name = "dissum_contract"

    def __init__(self, cfg: ContestConfig, slack: float = CONTRACT_SLACK):
        super().__init__()
        _require_homogeneous(cfg, "discounted-sum contract")
        self.n = cfg.n
        self.slack = slack

    def __call__(self, event: StepEvent) -> None:
        if event.s_minus < 1.0 / (self.n - 1):
            return
        self.checked += 1
        sigma = event.s_minus - (self.n - 1)
        dz = float(event.after[event.mover]) - 1.0
        if dz * sigma > self.slack or abs(dz) > 0.5 * abs(sigma) + self.slack:
            self._flag(event, sigma_minus=sigma, deviation=dz)


class AlternationRedundancyCheck(StepCheck):
    """A repeated move by the same agent leaves the profile unchanged."""

    name = "alternation_redundancy"

    def __init__(self) -> None:
        super().__init__()
        self.last: Optional[int] = None

    def __call__(self, event: StepEvent) -> None:
        if event.mover == self.last:
            self.checked += 1
            if not np.allclose(event.before, event.after, rtol=REPEAT_TOL, atol=REPEAT_TOL):
                self._flag(event, shift=float(np.max(np.abs(event.after - event.before))))
        self.last = event.mover


def _second_largest(values: np.ndarray) -> float:
    if values.size < 2:
        return 0.0
    return float(np.partition(values, -2)[-2])


def deviation_floor(n: int) -> float:
    """Smallest s_{-i} at which a response moves by at least |s_{-i} - (n-1)| / (n+2)."""
    v = -(n * n - 2 * n - 2) / (n * n - 1)
    return (n - 1) * (1.0 + v) ** 2


class DeviationPersistenceCheck(StepCheck):
    """Linear costs, n >= 3: two agents alpha-away from 1 leave two agents
    alpha/(2n)-away one step later.

    Only moves facing s_{-i} >= ``deviation_floor(n)`` are checked. Far below
    n - 1 the response curve flattens back towards 1 (it returns exactly 1
    at s_{-i} = 1/(n-1)), and e.g. n = 3, x = (5, 0, 0.9) with agent 0
    moving ends with a second-largest deviation of about 0.11 < 1/6.
    """

    name = "deviation_persistence"

    def __init__(self, cfg: ContestConfig):
        super().__init__()
        _require_homogeneous(cfg, "deviation persistence")
        if cfg.n < 3 or not _is_linear(cfg):
            raise UnsupportedContestError("deviation persistence needs linear costs and n >= 3")
        self.n = cfg.n
        self.floor = deviation_floor(cfg.n)

    def __call__(self, event: StepEvent) -> None:
        if event.s_minus < self.floor:
            return
        alpha = min(_second_largest(np.abs(event.before - 1.0)), 1.0)
        if alpha <= 0.0:
            return
        self.checked += 1
        after = _second_largest(np.abs(event.after - 1.0))
        if after < alpha / (2 * self.n) - 1e-12:
            self._flag(event, alpha=alpha, after=after)


class WarmupAbsorptionCheck(StepCheck):
    """Once the warm-up conditions hold they keep holding."""

    name = "warmup_absorption"

    def __init__(self, cfg: ContestConfig):
        super().__init__()
        _require_homogeneous(cfg, "warm-up absorption")
        self.cfg = cfg
        self.inside = False

    def __call__(self, event: StepEvent) -> None:
        if not self.inside:
            self.inside = warmup_conditions(self.cfg, event.before).holds
        if not self.inside:
            self.inside = warmup_conditions(self.cfg, event.after).holds
            return
        self.checked += 1
        if not warmup_conditions(self.cfg, event.after).holds:
            self._flag(event)
            self.inside = False


class TwoThresholdCheck(StepCheck):
    """After warm-up, two outputs >= 1/(n-1) persist once reached."""

    name = "two_threshold_persistence"

    def __init__(self, cfg: ContestConfig):
        super().__init__()
        _require_homogeneous(cfg, "two-threshold persistence")
        self.cfg = cfg
        self.threshold = 1.0 / (cfg.n - 1) - 1e-12
        self.armed = False

    def _two_above(self, x: np.ndarray) -> bool:
        return int(np.count_nonzero(x >= self.threshold)) >= 2

    def __call__(self, event: StepEvent) -> None:
        if not self.armed:
            self.armed = warmup_conditions(self.cfg, event.before).holds and self._two_above(
                event.before
            )
            if not self.armed:
                return
        self.checked += 1
        if not self._two_above(event.after):
            self._flag(event)
            self.armed = False


def br_trace_observers(cfg: ContestConfig) -> List[StepCheck]:
    """Every step check applicable to the contest.

    The discounted-sum reduction and the threshold lemmas are stated for
    linear costs only.
    """
    checks: List[StepCheck] = [AlternationRedundancyCheck()]
    if not (cfg.is_homogeneous and cfg.normalized):
        return checks
    linear = _is_linear(cfg)
    checks.append(PersistenceCheck(cfg))
    if linear:
        checks.append(DissumContractCheck(cfg))
    if cfg.n >= 3:
        checks.append(WarmupAbsorptionCheck(cfg))
        if linear:
            checks += [TwoThresholdCheck(cfg), DeviationPersistenceCheck(cfg)]
    return checks


def check_trace(trace: Trace, checks: Iterable[StepCheck]) -> List[CheckResult]:
    checks = list(checks)
    for event in replay(trace):
        for check in checks:
            check(event)
    return [check.result() for check in checks]


def merge_results(name: str, results: Sequence[CheckResult]) -> CheckResult:
    """Sum counts of same-kind results from several traces."""
    checked = sum(r.checked for r in results)
    violations = sum(r.violations for r in results)
    examples = [e for r in results for e in r.detail.get("examples", [])][: StepCheck.keep]
    return CheckResult.from_counts(
        name, checked, violations, traces=len(results), examples=examples
    )


def two_agent_monotone(trace: Trace, strict_until: float = 1e-6) -> CheckResult:
    """With z_1 < 1 the z-sequence increases strictly and stays below 1.

    Strictness and the strict bound are only asserted while 1 - z_t exceeds
    ``strict_until``; past that the solver tolerance dominates.
    """
    z = two_agent_z_sequence(trace)
    if z.size < 2 or not z[1] < 1.0:
        return CheckResult("two_agent_monotone", True, 0, detail={"skipped": True})
    violations = 0
    checked = 0
    for t in range(1, z.size - 1):
        checked += 1
        if 1.0 - z[t] > strict_until:
            if not (z[t] < z[t + 1] < 1.0):
                violations += 1
        elif z[t + 1] < z[t] - 1e-13 or z[t + 1] > 1.0 + 1e-12:
            violations += 1
    return CheckResult.from_counts("two_agent_monotone", checked, violations)


def weak_potential_history(trace: Trace) -> np.ndarray:
    """f along a trace, recomputed from the stored states."""
    return np.array([weak_potential.potential(row).f for row in trace.states])


def potential_monotone(trace: Trace, rel_slack: Optional[float] = None) -> CheckResult:
    """f never increases along a discounted-sum trace (up to relative slack)."""
    slack = settings.potential_rel_slack if rel_slack is None else rel_slack
    values = weak_potential_history(trace)
    if values.size < 2:
        return CheckResult("potential_monotone", True, 0)
    rises = values[1:] > values[:-1] * (1.0 + slack)
    return CheckResult.from_counts(
        "potential_monotone",
        int(values.size - 1),
        int(np.count_nonzero(rises)),
        worst_ratio=float(np.max(values[1:] / np.where(values[:-1] > 0, values[:-1], 1.0))),
    )


def sign_contraction(trace: Trace, B: float) -> CheckResult:
    """After a move at i: sign(z'_i) = -sign(sigma_minus) or 0, |z'_i| <= B |sigma_minus|."""
    violations = 0
    checked = 0
    for k in range(1, len(trace)):
        i = int(trace.movers[k])
        before = trace.states[k - 1]
        sigma = math.fsum(np.delete(before, i))
        z_new = float(trace.states[k, i])
        checked += 1
        if z_new * sigma > 0 or abs(z_new) > B * abs(sigma) * (1.0 + 1e-15):
            violations += 1
    return CheckResult.from_counts("sign_contraction", checked, violations)


def l1_bracket(trace: Trace) -> CheckResult:
    """f <= ||z||_1 <= 2f at every recorded state."""
    violations = 0
    for row in trace.states:
        f = weak_potential.potential(row).f
        l1 = math.fsum(np.abs(row))
        if not (f <= l1 * (1.0 + 1e-12) and l1 <= 2.0 * f * (1.0 + 1e-12)):
            violations += 1
    return CheckResult.from_counts("l1_bracket", len(trace), violations)
