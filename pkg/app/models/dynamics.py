"""
State, stopping rules and traces for best-response and discounted-sum dynamics.
"""

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, FrozenSet, Iterator, List, Optional, Tuple

import numpy as np
import pandas as pd

from app.config.settings import settings
from app.models.contest import ContestConfig, Profile
from app.utils.exceptions import InvalidInputError


@dataclass(frozen=True)
class DynamicsState:
    """x_t together with the selection bookkeeping.

    ``rng`` is advanced in place by randomized policies; every other field
    is replaced on each step.
    """

    t: int
    x: Profile
    rng: np.random.Generator = field(compare=False, repr=False)
    last_mover: Optional[int] = None
    prior_mover: Optional[int] = None
    played: FrozenSet[int] = frozenset()

    def __post_init__(self) -> None:
        if self.t < 0:
            raise InvalidInputError(f"time index must be >= 0, got {self.t}")

    @property
    def n(self) -> int:
        return self.x.n


class StopReason(str, Enum):
    EPSILON_EQUILIBRIUM = "epsilon_equilibrium"
    L1_DISTANCE = "l1_distance"
    MAX_STEPS = "max_steps"
    CYCLE = "cycle"
    SCHEDULE_END = "schedule_end"

    @property
    def converged(self) -> bool:
        return self in (StopReason.EPSILON_EQUILIBRIUM, StopReason.L1_DISTANCE)


@dataclass(frozen=True)
class StoppingRule:
    """Any combination of the stopping variants; the first to fire wins.

    Without an explicit ``max_steps`` the run is capped at
    ``settings.default_max_steps``.
    """

    epsilon: Optional[float] = None
    l1_epsilon: Optional[float] = None
    l1_target: Optional[Tuple[float, ...]] = None
    max_steps: Optional[int] = None
    detect_cycle: bool = False
    cycle_tol: float = settings.cycle_tol
    cycle_max_period: int = settings.cycle_max_period
    cycle_repeats: int = settings.cycle_repeats

    def __post_init__(self) -> None:
        if (
            self.epsilon is None
            and self.l1_epsilon is None
            and self.max_steps is None
            and not self.detect_cycle
        ):
            raise InvalidInputError("stopping rule needs at least one bound")
        if self.epsilon is not None and not (math.isfinite(self.epsilon) and self.epsilon > 0):
            raise InvalidInputError(f"epsilon must be > 0, got {self.epsilon}")
        if self.l1_epsilon is not None:
            if not self.l1_epsilon > 0:
                raise InvalidInputError(f"l1 epsilon must be > 0, got {self.l1_epsilon}")
            if self.l1_target is None:
                raise InvalidInputError("l1 stopping needs a target profile")
            object.__setattr__(self, "l1_target", tuple(float(v) for v in self.l1_target))
        if self.max_steps is not None and self.max_steps < 0:
            raise InvalidInputError(f"max_steps must be >= 0, got {self.max_steps}")
        if self.cycle_max_period < 2 or self.cycle_repeats < 2 or not self.cycle_tol > 0:
            raise InvalidInputError(
                "cycle detection needs max_period >= 2, repeats >= 2 and tol > 0"
            )

    @classmethod
    def epsilon_equilibrium(
        cls, eps: float, max_steps: Optional[int] = None
    ) -> "StoppingRule":
        return cls(epsilon=eps, max_steps=max_steps)

    @classmethod
    def l1_distance(
        cls, eps: float, target: Tuple[float, ...], max_steps: Optional[int] = None
    ) -> "StoppingRule":
        return cls(l1_epsilon=eps, l1_target=target, max_steps=max_steps)

    @classmethod
    def steps(cls, max_steps: int) -> "StoppingRule":
        return cls(max_steps=max_steps)

    @classmethod
    def cycle(
        cls,
        max_steps: Optional[int] = None,
        tol: float = settings.cycle_tol,
        max_period: int = settings.cycle_max_period,
        repeats: int = settings.cycle_repeats,
    ) -> "StoppingRule":
        return cls(
            detect_cycle=True,
            max_steps=max_steps,
            cycle_tol=tol,
            cycle_max_period=max_period,
            cycle_repeats=repeats,
        )

    @property
    def step_cap(self) -> int:
        return settings.default_max_steps if self.max_steps is None else self.max_steps


@dataclass(frozen=True)
class CycleReport:
    period: int
    start_t: int
    profiles: Tuple[Tuple[float, ...], ...]
    movers: Tuple[int, ...]
    tol: float = settings.cycle_tol

    def agent_values(self, i: int, tol: Optional[float] = None) -> List[float]:
        """Distinct values agent i takes along the cycle, ascending.

        Values within the detection tolerance (relative) are merged.
        """
        tol = self.tol if tol is None else tol
        values: List[float] = []
        for v in sorted(p[i] for p in self.profiles):
            if not values or abs(v - values[-1]) > tol * max(abs(v), abs(values[-1])):
                values.append(v)
        return values

    def to_dict(self) -> Dict[str, Any]:
        return {
            "period": self.period,
            "start_t": self.start_t,
            "profiles": [list(p) for p in self.profiles],
            "movers": list(self.movers),
            "tol": self.tol,
        }


@dataclass(frozen=True)
class TraceSummary:
    stop_reason: StopReason
    steps: int
    convergence_step: Optional[int] = None
    warmup_time: Optional[int] = None
    warmup_tracked: bool = False
    cycle: Optional[CycleReport] = None
    truncated: bool = False
    potential_history: np.ndarray = field(
        default_factory=lambda: np.zeros(0), compare=False, repr=False
    )

    @property
    def converged(self) -> bool:
        return self.stop_reason.converged

    def to_dict(self) -> Dict[str, Any]:
        data: Dict[str, Any] = {
            "converged": self.converged,
            "stop_reason": self.stop_reason.value,
            "steps": self.steps,
            "convergence_step": self.convergence_step,
            "truncated": self.truncated,
            "cycle": None if self.cycle is None else self.cycle.to_dict(),
        }
        if self.warmup_tracked:
            data["warmup_time"] = self.warmup_time
            data["warmup_absent"] = self.warmup_time is None
        if self.potential_history.size:
            data["final_potential"] = float(self.potential_history[-1])
        return data


@dataclass(frozen=True)
class Trace:
    """Recorded states of one run.

    ``states`` has one row per stored record; in ring-buffer mode only the
    tail is stored and ``summary.truncated`` is set. ``movers`` uses -1 for
    the initial record.
    """

    times: np.ndarray
    movers: np.ndarray
    states: np.ndarray
    summary: TraceSummary
    prefix: str = "x"
    potentials: Optional[np.ndarray] = None
    contest: Optional[ContestConfig] = field(default=None, compare=False, repr=False)

    def __post_init__(self) -> None:
        for arr in (self.times, self.movers, self.states, self.potentials):
            if arr is not None:
                arr.flags.writeable = False

    @property
    def n(self) -> int:
        return int(self.states.shape[1])

    def __len__(self) -> int:
        return int(self.times.size)

    def __iter__(self) -> Iterator[Tuple[int, Optional[int], np.ndarray]]:
        for k in range(len(self)):
            yield self.record(k)

    def record(self, k: int) -> Tuple[int, Optional[int], np.ndarray]:
        mover = int(self.movers[k])
        return int(self.times[k]), (None if mover < 0 else mover), self.states[k]

    @property
    def final_state(self) -> np.ndarray:
        return self.states[-1]

    def to_frame(self) -> pd.DataFrame:
        movers = pd.array(
            [None if m < 0 else int(m) for m in self.movers], dtype="Int64"
        )
        frame = pd.DataFrame({"t": self.times, "mover": movers})
        if self.potentials is not None:
            frame["f"] = self.potentials
        for j in range(self.n):
            frame[f"{self.prefix}_{j}"] = self.states[:, j]
        return frame
