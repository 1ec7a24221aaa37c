"""
Cost normalization and the change of variables for concave success functions.
"""

import math
from dataclasses import dataclass
from typing import Any, Callable, Tuple

import numpy as np
from scipy.optimize import bisect

from app.config.settings import settings
from app.models.cost import CostSpec
from app.utils.exceptions import InvalidInputError, NumericalRangeError
from app.utils.logger import get_logger

logger = get_logger("contest.normalization")

_LOG_LO = math.log(1e-300)
_LOG_HI = math.log(1e300)


def normalize_homogeneous(raw_cost: CostSpec, n: int) -> Tuple[CostSpec, float]:
    """Rescale a homogeneous cost so that the equilibrium sits at all ones.

    With c_hat = (n**2/(n-1)) * raw_cost, finds gamma solving
    c_hat'(gamma) = 1/gamma and returns (x -> c_hat(gamma * x), gamma).
    """
    if n < 2:
        raise InvalidInputError(f"normalization needs n >= 2, got {n}")
    c_hat = raw_cost.scaled(n**2 / (n - 1))

    def residual(log_gamma: float) -> float:
        gamma = math.exp(log_gamma)
        try:
            value = gamma * float(c_hat.derivative(gamma))
        except OverflowError:
            return math.inf
        return value - 1.0

    lo_value, hi_value = residual(_LOG_LO), residual(_LOG_HI)
    if not (lo_value < 0.0 < hi_value):
        raise NumericalRangeError(
            "normalization root not bracketed in [1e-300, 1e300] "
            f"(residuals {lo_value:.3g}, {hi_value:.3g})"
        )
    log_gamma = bisect(
        residual,
        _LOG_LO,
        _LOG_HI,
        xtol=settings.br_xtol,
        rtol=settings.br_rtol,
        maxiter=settings.br_max_iter,
    )
    gamma = math.exp(log_gamma)
    normalized = c_hat.rescaled_argument(gamma)
    logger.debug(f"normalized {raw_cost.kind.value} cost for n={n}: gamma={gamma:.17g}")
    return normalized, gamma


@dataclass(frozen=True)
class SuccessFunction:
    """Concave increasing f_hat with f_hat(0) = 0 and its first two derivatives."""

    value: Callable[[float], float]
    derivative: Callable[[float], float]
    second_derivative: Callable[[float], float]
    name: str = "custom"
    is_identity: bool = False

    @classmethod
    def identity(cls) -> "SuccessFunction":
        return cls(lambda x: x, lambda x: 1.0, lambda x: 0.0, "identity", True)

    @classmethod
    def linear(cls, k: float) -> "SuccessFunction":
        if k <= 0:
            raise InvalidInputError(f"linear success function needs k > 0, got {k}")
        return cls(lambda x: k * x, lambda x: k, lambda x: 0.0, f"{k:g}x")

    @classmethod
    def power(cls, g: float) -> "SuccessFunction":
        """x**g with 0 < g <= 1."""
        if not 0 < g <= 1:
            raise InvalidInputError(f"power success function needs 0 < g <= 1, got {g}")

        def derivative(x: float) -> float:
            if x == 0.0:
                return math.inf if g < 1 else 1.0
            return g * x ** (g - 1.0)

        def second(x: float) -> float:
            if g == 1.0:
                return 0.0
            if x == 0.0:
                return -math.inf
            return g * (g - 1.0) * x ** (g - 2.0)

        return cls(lambda x: x**g, derivative, second, f"x^{g:g}")

    def inverse(self, y: float) -> float:
        if y < 0 or not math.isfinite(y):
            raise InvalidInputError(f"success level must be finite and >= 0, got {y}")
        if y == 0.0:
            return 0.0
        hi = 1.0
        for _ in range(settings.br_max_doublings):
            if self.value(hi) >= y:
                break
            hi *= 2.0
        else:
            raise NumericalRangeError(f"success function never reaches {y}")
        return float(
            bisect(
                lambda x: self.value(x) - y,
                0.0,
                hi,
                xtol=settings.br_xtol,
                rtol=settings.br_rtol,
                maxiter=settings.br_max_iter,
            )
        )

    def check_monotone(self) -> None:
        grid = np.linspace(0.0, settings.cost_check_upper, settings.cost_check_samples)
        values = np.array([float(self.value(x)) for x in grid])
        if abs(values[0]) > 1e-12:
            raise InvalidInputError(f"success function needs f(0) = 0, got {values[0]}")
        if not np.all(np.diff(values) > 0):
            raise InvalidInputError(f"success function {self.name} is not increasing")


def logit_transform(f_hat: SuccessFunction, c_hat: CostSpec) -> CostSpec:
    """Cost in the output variable x = f_hat(y): c(x) = c_hat(f_hat^{-1}(x))."""
    f_hat.check_monotone()
    if f_hat.is_identity:
        return c_hat

    def value(x: Any) -> float:
        return float(c_hat.value(f_hat.inverse(float(x))))

    def derivative(x: Any) -> float:
        y = f_hat.inverse(float(x))
        return float(c_hat.derivative(y)) / float(f_hat.derivative(y))

    def second(x: Any) -> float:
        y = f_hat.inverse(float(x))
        slope = float(f_hat.derivative(y))
        if not math.isfinite(slope):
            # limit at the origin from the right
            h = settings.cost_check_step
            return (derivative(float(x) + h) - derivative(x)) / h
        return (
            float(c_hat.second_derivative(y)) / slope**2
            - float(c_hat.derivative(y)) * float(f_hat.second_derivative(y)) / slope**3
        )

    return CostSpec.custom(value, derivative, second, name=f"{c_hat.kind.value}∘{f_hat.name}⁻¹")
