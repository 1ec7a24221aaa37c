"""
Discount-coefficient policies: each emits beta in [0, B] for the moving coordinate.
"""

from abc import ABC, abstractmethod
from typing import Any, Callable, Optional

import numpy as np

from app.utils.exceptions import BetaContractError, InvalidInputError


class BetaPolicy(ABC):
    name: str = "beta"
    # True when the emitted value ignores the rng; re-selecting the last
    # mover then cannot change z
    deterministic: bool = True

    @abstractmethod
    def beta(self, z: np.ndarray, i: int, B: float, rng: np.random.Generator) -> float:
        raise NotImplementedError

    def describe(self) -> dict:
        return {"kind": self.name}


class ConstantBeta(BetaPolicy):
    """A fixed coefficient; defaults to B itself."""

    name = "constant"

    def __init__(self, value: Optional[float] = None):
        if value is not None and value < 0:
            raise InvalidInputError(f"constant beta must be >= 0, got {value}")
        self.value = value

    def beta(self, z: np.ndarray, i: int, B: float, rng: np.random.Generator) -> float:
        return B if self.value is None else self.value

    def describe(self) -> dict:
        return {"kind": self.name, "value": self.value}


class UniformBeta(BetaPolicy):
    """beta ~ U[0, B] independently per step."""

    name = "uniform"
    deterministic = False

    def beta(self, z: np.ndarray, i: int, B: float, rng: np.random.Generator) -> float:
        return float(rng.uniform(0.0, B))


class AdversarialMaxBeta(BetaPolicy):
    """Always B."""

    name = "adversarial_max"

    def beta(self, z: np.ndarray, i: int, B: float, rng: np.random.Generator) -> float:
        return B


class CallbackBeta(BetaPolicy):
    """User rule ``fn(z, i, rng) -> beta``; the result is checked against [0, B]."""

    name = "callback"
    deterministic = False

    def __init__(self, fn: Callable[[np.ndarray, int, np.random.Generator], Any]):
        self.fn = fn

    def beta(self, z: np.ndarray, i: int, B: float, rng: np.random.Generator) -> float:
        return float(self.fn(z, i, rng))


def checked_beta(
    policy: BetaPolicy, z: np.ndarray, i: int, B: float, rng: np.random.Generator
) -> float:
    value = policy.beta(z, i, B, rng)
    if not (0.0 <= value <= B):
        raise BetaContractError(
            f"{policy.name} policy emitted beta={value!r} outside [0, {B}] at coordinate {i}"
        )
    return value
