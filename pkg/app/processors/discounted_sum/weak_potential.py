"""
Weak potential of the discounted-sum dynamics and the larger-side pick rule.
"""

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np


@dataclass(frozen=True)
class PotentialValue:
    V: float
    W: float

    @property
    def f(self) -> float:
        return max(self.V, self.W)

    @property
    def l1(self) -> float:
        return self.V + self.W


def potential(z: Sequence[float]) -> PotentialValue:
    """V = sum of positive entries, W = -(sum of non-positive entries).

    Zeros belong to the negative side.
    """
    arr = np.asarray(z, dtype=float)
    return PotentialValue(
        V=math.fsum(arr[arr > 0]),
        W=-math.fsum(arr[arr <= 0]) + 0.0,
    )


def larger_side_pick(z: Sequence[float], exclude: Optional[int] = None) -> int:
    """Largest-magnitude entry on the side with the larger total.

    Ties between sides go to the positive side, ties between entries to the
    lowest index. Falls back to all admissible indices when the side is
    empty after exclusion.
    """
    arr = np.asarray(z, dtype=float)
    value = potential(arr)
    side = arr > 0 if value.V >= value.W else arr <= 0
    admissible = np.ones(arr.size, dtype=bool)
    if exclude is not None and arr.size > 1:
        admissible[exclude] = False
    candidates = side & admissible
    if not candidates.any():
        candidates = admissible
    magnitude = np.where(candidates, np.abs(arr), -1.0)
    return int(np.argmax(magnitude))
