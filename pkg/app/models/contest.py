"""
Contest configuration and output profiles.
"""

import math
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence, Tuple, Union

import numpy as np

from app.config.settings import settings
from app.models.cost import CostSpec
from app.utils.exceptions import InvalidInputError

ProfileLike = Union["Profile", Sequence[float], np.ndarray]


@dataclass(frozen=True)
class Profile:
    """Non-negative output vector x with read-only storage."""

    x: np.ndarray

    def __post_init__(self) -> None:
        arr = np.array(self.x, dtype=float, copy=True).reshape(-1)
        if arr.size == 0:
            raise InvalidInputError("profile must contain at least one output")
        if not np.all(np.isfinite(arr)):
            raise InvalidInputError(f"profile entries must be finite: {arr.tolist()}")
        if np.any(arr < 0):
            raise InvalidInputError(f"profile entries must be >= 0: {arr.tolist()}")
        arr.flags.writeable = False
        object.__setattr__(self, "x", arr)

    @classmethod
    def of(cls, values: ProfileLike) -> "Profile":
        return values if isinstance(values, Profile) else cls(np.asarray(values))

    @classmethod
    def ones(cls, n: int) -> "Profile":
        return cls(np.ones(n))

    @property
    def n(self) -> int:
        return int(self.x.size)

    @property
    def s(self) -> float:
        return math.fsum(self.x)

    def s_minus(self, i: int) -> float:
        # non-negative terms keep fsum(x) - x_i >= 0
        return max(0.0, math.fsum(self.x) - float(self.x[i]))

    def replace(self, i: int, value: float) -> "Profile":
        arr = self.x.copy()
        arr[i] = value
        return Profile(arr)

    def tolist(self) -> list:
        return [float(v) for v in self.x]

    def __len__(self) -> int:
        return self.n

    def __getitem__(self, i: int) -> float:
        return float(self.x[i])

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Profile):
            return NotImplemented
        return bool(np.array_equal(self.x, other.x))

    def __hash__(self) -> int:
        return hash(self.x.tobytes())


@dataclass(frozen=True)
class ContestConfig:
    """n agents with per-agent costs c_i.

    ``base_cost`` is the cost c with c'(1) = 1 from which the homogeneous
    normalized costs c_i = ((n-1)/n**2) c were built.
    """

    n: int
    costs: Tuple[CostSpec, ...]
    a: float = settings.default_a
    normalized: bool = False
    base_cost: Optional[CostSpec] = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "costs", tuple(self.costs))
        if self.n < 2:
            raise InvalidInputError(f"a contest needs n >= 2 agents, got {self.n}")
        if len(self.costs) != self.n:
            raise InvalidInputError(
                f"expected {self.n} cost functions, got {len(self.costs)}"
            )
        if not 0 < self.a < 1:
            raise InvalidInputError(f"BR-to-zero constant must lie in (0, 1), got {self.a}")
        if self.normalized:
            if self.base_cost is None or not self.is_homogeneous:
                raise InvalidInputError("normalized contests must be homogeneous")
            slope = float(self.base_cost.derivative(1.0))
            if abs(slope - 1.0) > 1e-9:
                raise InvalidInputError(f"normalized base cost needs c'(1) = 1, got {slope}")

    @classmethod
    def homogeneous(
        cls,
        n: int,
        base_cost: CostSpec,
        a: Optional[float] = None,
        normalized: bool = True,
    ) -> "ContestConfig":
        """Identical agents with c_i = ((n-1)/n**2) * base_cost."""
        if n < 2:
            raise InvalidInputError(f"a contest needs n >= 2 agents, got {n}")
        agent_cost = base_cost.scaled((n - 1) / n**2)
        return cls(
            n=n,
            costs=tuple(agent_cost for _ in range(n)),
            a=settings.default_a if a is None else a,
            normalized=normalized,
            base_cost=base_cost,
        )

    @classmethod
    def heterogeneous(
        cls, costs: Iterable[CostSpec], a: Optional[float] = None
    ) -> "ContestConfig":
        costs = tuple(costs)
        return cls(
            n=len(costs),
            costs=costs,
            a=settings.default_a if a is None else a,
        )

    @property
    def is_homogeneous(self) -> bool:
        first = self.costs[0]
        # callbacks are not comparable, so custom costs must be the same object
        return all(
            c is first or (first.has_closed_form and c == first) for c in self.costs[1:]
        )

    @property
    def kappa(self) -> float:
        """n**2 / ((n-1) c'(0)); inf when c'(0) = 0."""
        base = self.base_cost if self.base_cost is not None else self.costs[0]
        slope = base.c_prime_at_zero
        if slope == 0.0:
            return math.inf
        return self.n**2 / ((self.n - 1) * slope)

    def validate_profile(self, x: ProfileLike) -> Profile:
        profile = Profile.of(x)
        if profile.n != self.n:
            raise InvalidInputError(
                f"profile has {profile.n} entries, contest has {self.n} agents"
            )
        return profile

    def check_agent(self, i: int) -> None:
        if not 0 <= i < self.n:
            raise InvalidInputError(f"agent index {i} outside [0, {self.n})")
