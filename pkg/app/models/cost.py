"""
Convex cost functions.

A ``CostSpec`` bundles c, c' and c'' for one agent. The power family
(linear, power, scaled-power) has closed forms and stays closed under the
scaling operations used for normalization; custom costs carry callbacks and
are validated by sampling when constructed.
"""

import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Any, Callable, Dict, Optional, Tuple

import numpy as np
from scipy.optimize import bisect

from app.config.settings import settings
from app.utils.exceptions import InvalidInputError, NumericalRangeError

ScalarFn = Callable[[Any], Any]


class CostKind(str, Enum):
    LINEAR = "linear"
    POWER = "power"
    SCALED_POWER = "scaled-power"
    CUSTOM = "custom"


def _power(z: Any, r: float) -> Any:
    """z**r with 0**0 == 1 and overflow mapped to inf."""
    if r == 0.0:
        return np.ones_like(z, dtype=float) if isinstance(z, np.ndarray) else 1.0
    try:
        return z**r
    except OverflowError:
        return math.inf


@dataclass(frozen=True)
class CostSpec:
    """Cost c with c(0) = 0, c' > 0 on z > 0 and c'' >= 0.

    For the power family ``coeff`` and ``r`` describe the marginal cost
    c'(z) = coeff * z**r, so c(z) = coeff * z**(r+1) / (r+1).
    """

    kind: CostKind
    r: float = 0.0
    coeff: float = 1.0
    value_fn: Optional[ScalarFn] = field(default=None, compare=False, repr=False)
    derivative_fn: Optional[ScalarFn] = field(default=None, compare=False, repr=False)
    second_fn: Optional[ScalarFn] = field(default=None, compare=False, repr=False)
    lipschitz_K: Optional[float] = None
    lipschitz_interval: Optional[Tuple[float, float]] = None
    name: str = ""

    def __post_init__(self) -> None:
        if self.kind is CostKind.CUSTOM:
            if (
                self.value_fn is None
                or self.derivative_fn is None
                or self.second_fn is None
            ):
                raise InvalidInputError(
                    "custom costs need value, derivative and second-derivative callbacks"
                )
            self._validate_by_sampling()
            return
        if not (math.isfinite(self.coeff) and self.coeff > 0):
            raise InvalidInputError(f"cost coefficient must be > 0, got {self.coeff}")
        if not (math.isfinite(self.r) and self.r >= 0):
            raise InvalidInputError(f"cost exponent must be >= 0, got {self.r}")
        if self.kind is CostKind.LINEAR and self.r != 0.0:
            raise InvalidInputError("linear costs have exponent 0")

    # ------------------------------------------------------------------ factories

    @classmethod
    def linear(cls, coeff: float = 1.0) -> "CostSpec":
        return cls(kind=CostKind.LINEAR, r=0.0, coeff=coeff)

    @classmethod
    def power(cls, r: float) -> "CostSpec":
        """c'(z) = z**r."""
        return cls(kind=CostKind.POWER, r=r, coeff=1.0)

    @classmethod
    def scaled_power(cls, k: float, r: float) -> "CostSpec":
        """c'(z) = k * z**r."""
        return cls(kind=CostKind.SCALED_POWER, r=r, coeff=k)

    @classmethod
    def monomial(cls, p: float, coeff: float = 1.0) -> "CostSpec":
        """c(z) = coeff * z**p for p >= 1."""
        if p < 1:
            raise InvalidInputError(f"monomial cost needs p >= 1 for convexity, got {p}")
        return cls.scaled_power(coeff * p, p - 1.0)

    @classmethod
    def custom(
        cls,
        value: ScalarFn,
        derivative: ScalarFn,
        second_derivative: ScalarFn,
        name: str = "custom",
    ) -> "CostSpec":
        return cls(
            kind=CostKind.CUSTOM,
            value_fn=value,
            derivative_fn=derivative,
            second_fn=second_derivative,
            name=name,
        )

    # ----------------------------------------------------------------- evaluation

    def value(self, z: Any) -> Any:
        if self.kind is CostKind.CUSTOM:
            return self.value_fn(z)  # type: ignore[misc]
        return self.coeff * _power(z, self.r + 1.0) / (self.r + 1.0)

    def derivative(self, z: Any) -> Any:
        if self.kind is CostKind.CUSTOM:
            return self.derivative_fn(z)  # type: ignore[misc]
        return self.coeff * _power(z, self.r)

    def second_derivative(self, z: Any) -> Any:
        if self.kind is CostKind.CUSTOM:
            return self.second_fn(z)  # type: ignore[misc]
        if self.r == 0.0:
            return np.zeros_like(z, dtype=float) if isinstance(z, np.ndarray) else 0.0
        if self.r < 1.0 and not isinstance(z, np.ndarray) and z == 0:
            return math.inf
        return self.coeff * self.r * _power(z, self.r - 1.0)

    @property
    def c_prime_at_zero(self) -> float:
        if self.kind is CostKind.CUSTOM:
            return float(self.derivative(0.0))
        return self.coeff if self.r == 0.0 else 0.0

    @property
    def has_closed_form(self) -> bool:
        return self.kind is not CostKind.CUSTOM

    # ------------------------------------------------------------- transformations

    def scaled(self, factor: float) -> "CostSpec":
        """factor * c."""
        if not (math.isfinite(factor) and factor > 0):
            raise InvalidInputError(f"scale factor must be > 0, got {factor}")
        if self.has_closed_form:
            return replace(
                self,
                kind=self.kind if factor == 1.0 else _scaled_kind(self),
                coeff=self.coeff * factor,
                lipschitz_K=None,
                lipschitz_interval=None,
            )
        value, derivative, second = self.value_fn, self.derivative_fn, self.second_fn
        return CostSpec.custom(
            lambda z: factor * value(z),  # type: ignore[misc]
            lambda z: factor * derivative(z),  # type: ignore[misc]
            lambda z: factor * second(z),  # type: ignore[misc]
            name=f"{factor:g}*{self.name}",
        )

    def rescaled_argument(self, gamma: float) -> "CostSpec":
        """x -> c(gamma * x)."""
        if not (math.isfinite(gamma) and gamma > 0):
            raise InvalidInputError(f"argument scale must be > 0, got {gamma}")
        if self.has_closed_form:
            coeff = self.coeff * gamma ** (self.r + 1.0)
            return replace(
                self,
                kind=self.kind if gamma == 1.0 else _scaled_kind(self),
                coeff=coeff,
                lipschitz_K=None,
                lipschitz_interval=None,
            )
        value, derivative, second = self.value_fn, self.derivative_fn, self.second_fn
        return CostSpec.custom(
            lambda x: value(gamma * x),  # type: ignore[misc]
            lambda x: gamma * derivative(gamma * x),  # type: ignore[misc]
            lambda x: gamma * gamma * second(gamma * x),  # type: ignore[misc]
            name=f"{self.name}({gamma:g}x)",
        )

    def with_lipschitz(self, lo: float, hi: float) -> "CostSpec":
        """Attach the Lipschitz constant of c on [lo, hi], i.e. c'(hi)."""
        if not (0 <= lo <= hi and math.isfinite(hi)):
            raise InvalidInputError(f"invalid Lipschitz interval [{lo}, {hi}]")
        return replace(
            self, lipschitz_K=float(self.derivative(hi)), lipschitz_interval=(lo, hi)
        )

    def inverse_derivative(self, y: float) -> float:
        """Smallest z >= 0 with c'(z) = y; 0 if c'(0) >= y, inf if never reached."""
        if not math.isfinite(y):
            raise InvalidInputError(f"inverse derivative needs a finite level, got {y}")
        if self.c_prime_at_zero >= y:
            return 0.0
        if self.has_closed_form:
            if self.r == 0.0:
                return math.inf
            return float((y / self.coeff) ** (1.0 / self.r))

        hi = 1.0
        for _ in range(settings.br_max_doublings):
            if self.derivative(hi) >= y:
                break
            hi *= 2.0
        else:
            return math.inf
        return float(
            bisect(
                lambda z: float(self.derivative(z)) - y,
                0.0,
                hi,
                xtol=settings.br_xtol,
                rtol=settings.br_rtol,
                maxiter=settings.br_max_iter,
            )
        )

    # -------------------------------------------------------------- serialization

    def to_dict(self) -> Dict[str, Any]:
        if self.kind is CostKind.CUSTOM:
            raise InvalidInputError("custom costs are not JSON serializable")
        data: Dict[str, Any] = {"kind": self.kind.value, "r": self.r, "coeff": self.coeff}
        if self.lipschitz_interval is not None:
            data["lipschitz_interval"] = list(self.lipschitz_interval)
        return data

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "CostSpec":
        kind = data.get("kind")
        coeff = float(data.get("coeff", 1.0))
        if kind == CostKind.LINEAR.value:
            spec = cls.linear(coeff)
        elif kind in (CostKind.POWER.value, CostKind.SCALED_POWER.value):
            spec = cls(kind=CostKind(kind), r=float(data.get("r", 0.0)), coeff=coeff)
        elif kind == "monomial":
            spec = cls.monomial(float(data["p"]), coeff)
        else:
            raise InvalidInputError(f"unknown cost kind: {kind!r}")
        interval = data.get("lipschitz_interval")
        if interval is not None:
            spec = spec.with_lipschitz(float(interval[0]), float(interval[1]))
        return spec

    # ------------------------------------------------------------------ validation

    def _validate_by_sampling(self) -> None:
        """Fail fast on callbacks violating the convex-cost assumptions."""
        grid = np.linspace(0.0, settings.cost_check_upper, settings.cost_check_samples)
        h = settings.cost_check_step
        try:
            c0 = float(self.value(0.0))
            values = np.array([float(self.value(z)) for z in grid])
            firsts = np.array([float(self.derivative(z)) for z in grid])
            seconds = np.array([float(self.second_derivative(z)) for z in grid])
        except (ArithmeticError, ValueError, TypeError) as exc:
            raise InvalidInputError(f"cost callbacks failed on [0, 10]: {exc}") from exc

        if not np.all(np.isfinite(values)) or not np.all(np.isfinite(firsts)):
            raise InvalidInputError("cost callbacks must be finite on [0, 10]")
        if abs(c0) > 1e-12:
            raise InvalidInputError(f"cost must satisfy c(0) = 0, got {c0}")
        if firsts[0] < 0 or np.any(firsts[1:] <= 0):
            raise InvalidInputError("cost must be increasing (c' > 0)")
        if np.any(seconds < -1e-12) or np.any(np.diff(firsts) < -1e-12 * np.abs(firsts[1:])):
            raise InvalidInputError("cost must be convex (c'' >= 0)")

        for z, first in zip(grid[1:], firsts[1:]):
            if z <= h:
                continue
            central = (float(self.value(z + h)) - float(self.value(z - h))) / (2 * h)
            if abs(central - first) > settings.cost_check_rtol * max(abs(first), 1.0):
                raise InvalidInputError(
                    f"derivative callback inconsistent with value at z={z:.6g}: "
                    f"{first:.12g} vs finite difference {central:.12g}"
                )


def _scaled_kind(cost: CostSpec) -> CostKind:
    return CostKind.LINEAR if cost.kind is CostKind.LINEAR else CostKind.SCALED_POWER


def check_convex_cost(cost: CostSpec) -> None:
    """Run the sampling checks on any cost, closed form or not."""
    cost._validate_by_sampling()
