"""
Agent-selection policies.

Policies read only the selection bookkeeping of a state (``n``, ``t``,
``last_mover``, ``prior_mover``, ``rng``), so the same classes drive both
best-response and discounted-sum runs.
"""

from abc import ABC, abstractmethod
from typing import Any, Callable, Optional, Sequence

import numpy as np

from app.models.contest import ContestConfig
from app.utils.exceptions import InvalidInputError, ScheduleExhausted

WeightFn = Callable[[Any], Sequence[float]]


class SelectionPolicy(ABC):
    """Chooses the mover for the next step."""

    name: str = "policy"

    def validate(self, n: int) -> None:
        """Reject agent counts the policy is not defined for."""

    @abstractmethod
    def choose(self, state: Any, cfg: Optional[ContestConfig] = None) -> int:
        raise NotImplementedError

    def describe(self) -> dict:
        return {"kind": self.name}


class Alternating(SelectionPolicy):
    """Two agents taking turns; ``first`` moves at t = 0."""

    name = "alternating"

    def __init__(self, first: int = 1):
        if first not in (0, 1):
            raise InvalidInputError(f"alternating first mover must be 0 or 1, got {first}")
        self.first = first

    def validate(self, n: int) -> None:
        if n != 2:
            raise InvalidInputError(f"alternating selection needs n = 2, got {n}")

    def choose(self, state: Any, cfg: Optional[ContestConfig] = None) -> int:
        if state.last_mover is None:
            return self.first
        return 1 - state.last_mover

    def describe(self) -> dict:
        return {"kind": self.name, "first": self.first}


class RoundRobin(SelectionPolicy):
    name = "round_robin"

    def choose(self, state: Any, cfg: Optional[ContestConfig] = None) -> int:
        if state.last_mover is None:
            return 0
        return (state.last_mover + 1) % state.n


class UniformRandom(SelectionPolicy):
    """Every agent w.p. 1/n, the previous mover included."""

    name = "uniform"

    def choose(self, state: Any, cfg: Optional[ContestConfig] = None) -> int:
        return int(state.rng.integers(state.n))


class FlooredRandom(SelectionPolicy):
    """Randomized selection with probability >= L for every non-previous mover.

    With a weight function the eligible agents get L plus a share of the
    remaining mass proportional to the weights. Without one, the sticky
    adversary is used: the most recent mover other than the previous one is
    favoured with 1 - (n-1)L, everybody else gets L, the previous mover as
    much of L as the remaining mass allows.
    """

    name = "floored"

    def __init__(self, floor: float, weights: Optional[WeightFn] = None):
        if not floor > 0:
            raise InvalidInputError(f"selection floor must be > 0, got {floor}")
        self.floor = floor
        self.weights = weights

    def validate(self, n: int) -> None:
        if self.floor > 1.0 / (n - 1) + 1e-12:
            raise InvalidInputError(
                f"selection floor {self.floor} exceeds 1/(n-1) = {1.0 / (n - 1):.6g}"
            )

    def probabilities(self, state: Any) -> np.ndarray:
        n, floor, last = state.n, self.floor, state.last_mover
        eligible = [i for i in range(n) if i != last]
        probs = np.zeros(n)
        probs[eligible] = floor
        remaining = 1.0 - len(eligible) * floor

        if self.weights is not None:
            raw = np.asarray(self.weights(state), dtype=float)
            if raw.shape != (n,) or np.any(raw < 0) or not np.all(np.isfinite(raw)):
                raise InvalidInputError("selection weights must be n finite values >= 0")
            mass = raw[eligible]
            if mass.sum() > 0:
                share = mass / mass.sum()
            else:
                share = np.full(len(eligible), 1.0 / len(eligible))
            probs[eligible] += max(0.0, remaining) * share
            return probs / probs.sum()

        favoured = state.prior_mover
        if favoured is None or favoured == last:
            favoured = eligible[0]
        if last is None:
            probs[favoured] += remaining
        else:
            probs[last] = min(floor, max(0.0, remaining))
            probs[favoured] += remaining - probs[last]
        return probs / probs.sum()

    def choose(self, state: Any, cfg: Optional[ContestConfig] = None) -> int:
        return int(state.rng.choice(state.n, p=self.probabilities(state)))

    def describe(self) -> dict:
        return {"kind": self.name, "floor": self.floor, "weighted": self.weights is not None}


class ExplicitSchedule(SelectionPolicy):
    """Movers read from a list indexed by t; ``repeat`` cycles the list."""

    name = "schedule"

    def __init__(self, schedule: Sequence[int], repeat: bool = False):
        self.schedule = [int(i) for i in schedule]
        if repeat and not self.schedule:
            raise InvalidInputError("a repeating schedule cannot be empty")
        self.repeat = repeat

    def validate(self, n: int) -> None:
        bad = [i for i in self.schedule if not 0 <= i < n]
        if bad:
            raise InvalidInputError(f"schedule entries outside [0, {n}): {bad[:5]}")

    def choose(self, state: Any, cfg: Optional[ContestConfig] = None) -> int:
        k = state.t
        if self.repeat:
            return self.schedule[k % len(self.schedule)]
        if k >= len(self.schedule):
            raise ScheduleExhausted(f"schedule of length {len(self.schedule)} ended at t={k}")
        return self.schedule[k]

    def describe(self) -> dict:
        return {"kind": self.name, "length": len(self.schedule), "repeat": self.repeat}


class BestCaseGreedy(SelectionPolicy):
    """Round robin through warm-up, then the larger-side deviation rule."""

    name = "best_case"

    def choose(self, state: Any, cfg: Optional[ContestConfig] = None) -> int:
        from app.processors.br_dynamics.warmup import best_case_greedy_mover

        if cfg is None:
            raise InvalidInputError("best-case selection needs the contest configuration")
        return best_case_greedy_mover(cfg, state)
