"""
Discounted-sum dynamics: z_i <- -beta * sum_{j != i} z_j.
"""

from dataclasses import dataclass, replace
from typing import Any, Optional, Sequence

import numpy as np

from app.config.settings import settings
from app.models.contest import ContestConfig
from app.models.dissum import DissumState
from app.models.dynamics import StopReason, Trace, TraceSummary
from app.processors.br_dynamics.selection import ExplicitSchedule, SelectionPolicy
from app.processors.discounted_sum import weak_potential
from app.processors.discounted_sum.beta import (
    AdversarialMaxBeta,
    BetaPolicy,
    ConstantBeta,
    checked_beta,
)
from app.processors.discounted_sum.weak_potential import larger_side_pick
from app.processors.utils.trace_recorder import TraceRecorder
from app.utils.exceptions import InvalidInputError, ScheduleExhausted
from app.utils.logger import get_logger

logger = get_logger("discounted_sum")


def dissum_step(state: DissumState, i: int) -> DissumState:
    if not 0 <= i < state.n:
        raise InvalidInputError(f"coordinate {i} outside [0, {state.n})")
    beta = checked_beta(state.beta_policy, state.z, i, state.B, state.rng)
    z = state.z.copy()
    z[i] = -beta * state.sigma_minus(i) + 0.0
    prior = state.prior_mover if i == state.last_mover else state.last_mover
    return replace(
        state,
        z=z,
        t=state.t + 1,
        last_mover=i,
        prior_mover=prior,
        played=state.played | {i},
    )


class DissumBestCase(SelectionPolicy):
    """Largest-magnitude coordinate on the larger side of the potential.

    The previous mover is skipped only when moving it again would leave z
    unchanged.
    """

    name = "best_case"

    def choose(self, state: Any, cfg: Optional[ContestConfig] = None) -> int:
        last = state.last_mover
        exclude = None
        if last is not None and state.beta_policy.deterministic:
            again = -state.beta_policy.beta(state.z, last, state.B, state.rng) * state.sigma_minus(last)
            if again == state.z[last]:
                exclude = last
        return larger_side_pick(state.z, exclude=exclude)


def run_dissum(
    z0: Sequence[float],
    B: float,
    beta_policy: BetaPolicy,
    selection: SelectionPolicy,
    eps: Optional[float] = None,
    max_steps: Optional[int] = None,
    seed: Optional[int] = 0,
) -> Trace:
    """Run until ||z||_1 <= eps or max_steps moves have been made."""
    if eps is None and max_steps is None:
        raise InvalidInputError("discounted-sum run needs eps or max_steps")
    if eps is not None and not eps > 0:
        raise InvalidInputError(f"eps must be > 0, got {eps}")
    state = DissumState(z=np.asarray(z0, dtype=float), B=B, beta_policy=beta_policy,
                        rng=np.random.default_rng(seed))
    selection.validate(state.n)
    cap = settings.default_max_steps if max_steps is None else max_steps

    recorder = TraceRecorder(state.n, track_potential=True)

    def reached(value: Any) -> bool:
        return eps is not None and value.l1 <= eps

    value = weak_potential.potential(state.z)
    recorder.record(0, None, state.z, value.f)
    reason: Optional[StopReason] = StopReason.L1_DISTANCE if reached(value) else None
    convergence_step = 0 if reason is not None else None

    while reason is None:
        if state.t >= cap:
            reason = StopReason.MAX_STEPS
            break
        try:
            mover = selection.choose(state)
        except ScheduleExhausted:
            reason = StopReason.SCHEDULE_END
            break
        state = dissum_step(state, mover)
        value = weak_potential.potential(state.z)
        recorder.record(state.t, mover, state.z, value.f)
        if reached(value):
            reason = StopReason.L1_DISTANCE
            convergence_step = state.t

    times, movers, states, potentials = recorder.arrays()
    logger.debug(
        f"dissum finished: n={state.n} B={B} beta={beta_policy.name} "
        f"selection={selection.name} reason={reason.value} steps={state.t}"
    )
    return Trace(
        times=times,
        movers=movers,
        states=states,
        potentials=potentials,
        prefix="z",
        summary=TraceSummary(
            stop_reason=reason,
            steps=state.t,
            convergence_step=convergence_step,
            truncated=recorder.truncated,
        ),
    )


@dataclass(frozen=True)
class LowerBoundInstance:
    name: str
    z0: np.ndarray
    B: float
    beta_policy: BetaPolicy
    schedule: SelectionPolicy


def lower_bound_example(kind: str, **params: Any) -> LowerBoundInstance:
    """Instances on which best-case selection cannot be fast.

    ``all_ones(n, B=0.5)``: every coordinate must move at least once.
    ``two_coordinate(kappa, B, n=4)``: f shrinks by exactly B per step.
    """
    if kind == "all_ones":
        n = int(params.get("n", 8))
        B = float(params.get("B", 0.5))
        if n < 1:
            raise InvalidInputError(f"all_ones needs n >= 1, got {n}")
        return LowerBoundInstance(kind, np.ones(n), B, AdversarialMaxBeta(), DissumBestCase())
    if kind == "two_coordinate":
        kappa = float(params["kappa"])
        B = float(params["B"])
        n = int(params.get("n", 4))
        if kappa <= 0:
            raise InvalidInputError(f"kappa must be > 0, got {kappa}")
        if not 0.5 <= B < 1:
            raise InvalidInputError(f"two_coordinate needs 1/2 <= B < 1, got {B}")
        if n < 2:
            raise InvalidInputError(f"two_coordinate needs n >= 2, got {n}")
        z0 = np.zeros(n)
        z0[:2] = kappa
        return LowerBoundInstance(
            kind, z0, B, ConstantBeta(B), ExplicitSchedule([0, 1], repeat=True)
        )
    raise InvalidInputError(f"unknown lower-bound instance: {kind!r}")


def stall_example(n: int = 4) -> DissumState:
    """z = (-1, 1, 0, ...) with beta = 1/2: moving a zero coordinate makes no progress."""
    if n < 3:
        raise InvalidInputError(f"stall example needs n >= 3, got {n}")
    z = np.zeros(n)
    z[0], z[1] = -1.0, 1.0
    return DissumState(z=z, B=0.5, beta_policy=ConstantBeta(0.5), rng=np.random.default_rng(0))