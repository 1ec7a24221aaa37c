"""
Best-response dynamics: single steps and full runs.
"""

import math
from dataclasses import dataclass, replace
from typing import Callable, Iterable, Optional, Tuple

import numpy as np

from app.models.contest import ContestConfig, Profile, ProfileLike
from app.models.dynamics import (
    DynamicsState,
    StoppingRule,
    StopReason,
    Trace,
    TraceSummary,
)
from app.processors.br_dynamics.cycles import find_cycle
from app.processors.br_dynamics.selection import SelectionPolicy
from app.processors.br_dynamics.warmup import warmup_conditions
from app.processors.contest.core import first_violator, solve_best_response
from app.processors.discounted_sum import weak_potential
from app.processors.utils.trace_recorder import TraceRecorder
from app.utils.exceptions import InvalidInputError, ScheduleExhausted
from app.utils.logger import get_logger

logger = get_logger("br_dynamics")


@dataclass(frozen=True)
class StepEvent:
    """One best-response move, as seen by step observers."""

    t: int
    mover: int
    before: np.ndarray
    after: np.ndarray
    s_minus: float


StepObserver = Callable[[StepEvent], None]


def initial_state(cfg: ContestConfig, x0: ProfileLike, seed: Optional[int] = 0) -> DynamicsState:
    return DynamicsState(t=0, x=cfg.validate_profile(x0), rng=np.random.default_rng(seed))


def _advance(
    cfg: ContestConfig, state: DynamicsState, policy: SelectionPolicy
) -> Tuple[DynamicsState, int, float]:
    mover = policy.choose(state, cfg)
    if not 0 <= mover < cfg.n:
        raise InvalidInputError(f"policy {policy.name} chose agent {mover} outside [0, {cfg.n})")
    s_minus = state.x.s_minus(mover)
    response = solve_best_response(cfg.costs[mover], s_minus, cfg.a)
    prior = state.prior_mover if mover == state.last_mover else state.last_mover
    new_state = replace(
        state,
        t=state.t + 1,
        x=state.x.replace(mover, response),
        last_mover=mover,
        prior_mover=prior,
        played=state.played | {mover},
    )
    return new_state, mover, s_minus


def step(
    cfg: ContestConfig, state: DynamicsState, policy: SelectionPolicy
) -> Tuple[DynamicsState, int]:
    """Replace the chosen mover's output by its best response.

    Raises ScheduleExhausted when an explicit schedule has run out.
    """
    policy.validate(cfg.n)
    new_state, mover, _ = _advance(cfg, state, policy)
    return new_state, mover


def _reached(cfg: ContestConfig, x: Profile, stop: StoppingRule) -> Optional[StopReason]:
    if stop.epsilon is not None and first_violator(cfg, x, stop.epsilon) is None:
        return StopReason.EPSILON_EQUILIBRIUM
    if stop.l1_epsilon is not None:
        target = np.asarray(stop.l1_target, dtype=float)
        if math.fsum(np.abs(x.x - target)) <= stop.l1_epsilon:
            return StopReason.L1_DISTANCE
    return None


def run(
    cfg: ContestConfig,
    x0: ProfileLike,
    policy: SelectionPolicy,
    stop: StoppingRule,
    seed: Optional[int] = 0,
    observers: Iterable[StepObserver] = (),
) -> Trace:
    """Iterate best-response moves until the stopping rule fires."""
    policy.validate(cfg.n)
    if stop.l1_target is not None and len(stop.l1_target) != cfg.n:
        raise InvalidInputError("l1 target must have one entry per agent")
    observers = tuple(observers)
    state = initial_state(cfg, x0, seed)

    track_potential = cfg.is_homogeneous and cfg.normalized
    track_warmup = track_potential and cfg.n >= 3
    last_outside_warmup: Optional[int] = None

    # potentials share the trace's storage, so ring mode bounds them too
    recorder = TraceRecorder(cfg.n, track_potential=track_potential)
    cycle = None
    cycle_window = stop.cycle_repeats * stop.cycle_max_period
    cap = stop.step_cap

    def observe(t: int, mover: Optional[int], x: np.ndarray) -> None:
        nonlocal last_outside_warmup
        f = weak_potential.potential(x - 1.0).f if track_potential else None
        recorder.record(t, mover, x, f)
        if track_warmup and not warmup_conditions(cfg, x).holds:
            last_outside_warmup = t

    observe(0, None, state.x.x)
    reason = _reached(cfg, state.x, stop)
    convergence_step = 0 if reason is not None else None

    while reason is None:
        if state.t >= cap:
            reason = StopReason.MAX_STEPS
            break
        before = state.x.x
        try:
            state, mover, s_minus = _advance(cfg, state, policy)
        except ScheduleExhausted:
            reason = StopReason.SCHEDULE_END
            break
        observe(state.t, mover, state.x.x)
        if observers:
            event = StepEvent(state.t, mover, before, state.x.x, s_minus)
            for callback in observers:
                callback(event)

        reason = _reached(cfg, state.x, stop)
        if reason is not None:
            convergence_step = state.t
            break
        if stop.detect_cycle and recorder.count >= 3 * stop.cycle_max_period:
            cycle = find_cycle(
                recorder.tail(cycle_window),
                recorder.tail_movers(cycle_window),
                recorder.tail_times(cycle_window),
                stop.cycle_tol,
                stop.cycle_max_period,
                stop.cycle_repeats,
            )
            if cycle is not None:
                reason = StopReason.CYCLE

    warmup_time: Optional[int] = None
    if track_warmup and last_outside_warmup != state.t:
        warmup_time = 0 if last_outside_warmup is None else last_outside_warmup + 1

    times, movers, states, potentials = recorder.arrays()
    summary = TraceSummary(
        stop_reason=reason,
        steps=state.t,
        convergence_step=convergence_step,
        warmup_time=warmup_time,
        warmup_tracked=track_warmup,
        cycle=cycle,
        truncated=recorder.truncated,
        potential_history=np.zeros(0) if potentials is None else potentials,
    )
    logger.debug(
        f"run finished: n={cfg.n} policy={policy.name} reason={reason.value} steps={state.t}"
    )
    return Trace(
        times=times,
        movers=movers,
        states=states,
        summary=summary,
        prefix="x",
        contest=cfg,
    )
