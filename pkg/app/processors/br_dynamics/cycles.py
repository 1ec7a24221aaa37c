"""
Cycle detection and the two-agent z-sequence.
"""

from typing import Optional, Tuple

import numpy as np

from app.config.settings import settings
from app.models.contest import ContestConfig
from app.models.cost import CostSpec
from app.models.dynamics import CycleReport, Trace
from app.processors.br_dynamics.selection import Alternating
from app.utils.exceptions import InvalidInputError


def _close(a: np.ndarray, b: np.ndarray, tol: float) -> bool:
    scale = np.maximum(np.abs(a), np.abs(b))
    return bool(np.all(np.abs(a - b) <= tol * scale))


def find_cycle(
    states: np.ndarray,
    movers: np.ndarray,
    times: np.ndarray,
    tol: float,
    max_period: int,
    repeats: int = 2,
) -> Optional[CycleReport]:
    """Smallest period p in [2, max_period] repeating over the last repeats*p rows.

    Every block of p rows must match the most recent block within ``tol``,
    so a slow drift that stays within ``tol`` per period alone is not
    enough. A tail whose consecutive rows already agree within ``tol`` is a
    fixed point and reported as no cycle.
    """
    m = len(states)
    if m < 2 * repeats:
        return None
    if _close(states[-1], states[-2], tol):
        return None
    for p in range(2, max_period + 1):
        if repeats * p > m:
            break
        recent, recent_movers = states[m - p :], movers[m - p :]
        if all(
            _close(recent, states[m - (k + 1) * p : m - k * p], tol)
            and np.array_equal(recent_movers, movers[m - (k + 1) * p : m - k * p])
            for k in range(1, repeats)
        ):
            return CycleReport(
                period=p,
                start_t=int(times[m - p]),
                profiles=tuple(tuple(float(v) for v in row) for row in recent),
                movers=tuple(int(i) for i in recent_movers),
                tol=tol,
            )
    return None


def detect_cycle(
    trace: Trace,
    tol: Optional[float] = None,
    max_period: Optional[int] = None,
    repeats: int = 2,
) -> Optional[CycleReport]:
    """Cycle over the trace's last rows; ``repeats = 2`` compares the last 2p."""
    tol = settings.cycle_tol if tol is None else tol
    max_period = settings.cycle_max_period if max_period is None else max_period
    if max_period < 2:
        raise InvalidInputError(f"max_period must be >= 2, got {max_period}")
    if repeats < 2:
        raise InvalidInputError(f"repeats must be >= 2, got {repeats}")
    return find_cycle(trace.states, trace.movers, trace.times, tol, max_period, repeats)


def two_agent_z_sequence(trace: Trace) -> np.ndarray:
    """z_0 = the first mover's opponent's initial output, z_t = the t-th move."""
    if trace.n != 2:
        raise InvalidInputError(f"z-sequence needs a two-agent trace, got n={trace.n}")
    if trace.summary.truncated or int(trace.times[0]) != 0:
        raise InvalidInputError("z-sequence needs a trace that starts at t = 0")
    movers = trace.movers[1:]
    if movers.size and np.any(movers[1:] == movers[:-1]):
        raise InvalidInputError("z-sequence needs alternating movers")
    first_opponent = 0 if movers.size == 0 else 1 - int(movers[0])
    z = np.empty(len(trace))
    z[0] = trace.states[0, first_opponent]
    for k, mover in enumerate(movers, start=1):
        z[k] = trace.states[k, int(mover)]
    return z


def heterogeneous_cycle_example() -> Tuple[ContestConfig, Tuple[float, float], Alternating]:
    """Two agents with marginal costs z^0.2 and z^0.2 / 20 moving alternately.

    From (0.1058, 1.3102) the first period is 0.1058 / 0.1131 for agent 0
    and 1.3102 / 1.3468 for agent 1 (four decimals). The swing around the
    interior equilibrium (about (0.1094, 1.3286)) then shrinks by roughly
    0.7% per period, so detection at tolerance 5e-4 reports a period-4 cycle
    a few periods in, while a tight tolerance never fires.
    """
    cfg = ContestConfig.heterogeneous([CostSpec.power(0.2), CostSpec.scaled_power(0.05, 0.2)])
    return cfg, (0.1058, 1.3102), Alternating(first=0)
