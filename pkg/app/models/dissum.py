"""
State of the discounted-sum dynamics.
"""

import math
from dataclasses import dataclass, field
from typing import Any, FrozenSet, Optional

import numpy as np

from app.utils.exceptions import InvalidInputError


@dataclass(frozen=True)
class DissumState:
    """z_t with the discount cap B and its beta policy."""

    z: np.ndarray
    B: float
    beta_policy: Any
    rng: np.random.Generator = field(compare=False, repr=False)
    t: int = 0
    last_mover: Optional[int] = None
    prior_mover: Optional[int] = None
    played: FrozenSet[int] = frozenset()

    def __post_init__(self) -> None:
        arr = np.array(self.z, dtype=float, copy=True).reshape(-1)
        if arr.size == 0 or not np.all(np.isfinite(arr)):
            raise InvalidInputError("discounted-sum state needs finite entries")
        if not (0.0 <= self.B < 1.0):
            raise InvalidInputError(f"discount cap must satisfy 0 <= B < 1, got {self.B}")
        arr.flags.writeable = False
        object.__setattr__(self, "z", arr)

    @property
    def n(self) -> int:
        return int(self.z.size)

    @property
    def sigma(self) -> float:
        return math.fsum(self.z)

    def sigma_minus(self, i: int) -> float:
        return math.fsum(np.delete(self.z, i))
