"""
Convergence-rate predictors and least-squares fitting of measured step counts.

All logarithms are base 2. ``lglg(x)`` is clamped at 0 for x <= 2 so that
predictions stay finite and non-negative near the top of the eps range.
"""

import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from app.config.settings import settings
from app.utils.exceptions import FitError, InvalidInputError
from app.utils.logger import get_logger

logger = get_logger("analysis.rates")


def lglg(x: float) -> float:
    if not x > 2.0:
        return 0.0
    return math.log2(math.log2(x))


class RateModel(str, Enum):
    TWO_AGENT = "two_agent"
    TWO_AGENT_CURVED = "two_agent_curved"
    N_AGENT_RANDOM = "n_agent_random"
    N_AGENT_BEST = "n_agent_best"


@dataclass(frozen=True)
class RatePrediction:
    """A convergence bound with its free constants.

    ``predicted_steps(eps) = additive + multiplicative * shape(eps)``.
    The two-agent models only carry an additive constant.
    """

    model: RateModel
    gamma: float
    additive: float = 0.0
    multiplicative: float = 1.0
    p: Optional[float] = None
    q: Optional[float] = None
    n: Optional[int] = None
    L: Optional[float] = None
    K: float = 1.0
    delta: float = 0.05

    def __post_init__(self) -> None:
        if not (0.0 < self.gamma <= 1.0):
            raise InvalidInputError(f"gamma must lie in (0, 1], got {self.gamma}")
        if self.model is RateModel.TWO_AGENT_CURVED:
            if self.p is None or self.q is None or not (0.0 <= self.q <= self.p):
                raise InvalidInputError(
                    f"curved model needs 0 <= q <= p, got p={self.p} q={self.q}"
                )
        if self.model in (RateModel.N_AGENT_RANDOM, RateModel.N_AGENT_BEST):
            if self.n is None or self.n < 3:
                raise InvalidInputError(f"n-agent models need n >= 3, got {self.n}")
            if not self.K > 0:
                raise InvalidInputError(f"Lipschitz constant must be > 0, got {self.K}")
        if self.model is RateModel.N_AGENT_RANDOM:
            assert self.n is not None
            if self.L is None or not (0.0 < self.L <= 1.0 / (self.n - 1)):
                raise InvalidInputError(f"selection floor must lie in (0, 1/(n-1)], got {self.L}")
            if not 0.0 < self.delta < 1.0:
                raise InvalidInputError(f"delta must lie in (0, 1), got {self.delta}")

    @classmethod
    def two_agent(cls, gamma: float, C: float = 0.0) -> "RatePrediction":
        return cls(RateModel.TWO_AGENT, gamma, additive=C)

    @classmethod
    def two_agent_curved(cls, gamma: float, p: float, q: float, C: float = 0.0) -> "RatePrediction":
        return cls(RateModel.TWO_AGENT_CURVED, gamma, additive=C, p=p, q=q)

    @classmethod
    def n_agent_random(
        cls,
        n: int,
        gamma: float,
        L: Optional[float] = None,
        K: float = 1.0,
        delta: float = 0.05,
        C: float = 0.0,
        M: float = 1.0,
    ) -> "RatePrediction":
        """Randomized selection; ``L`` defaults to the uniform floor 1/n."""
        return cls(
            RateModel.N_AGENT_RANDOM,
            gamma,
            additive=C,
            multiplicative=M,
            n=n,
            L=1.0 / n if L is None else L,
            K=K,
            delta=delta,
        )

    @classmethod
    def n_agent_best(
        cls, n: int, gamma: float, K: float = 1.0, C: float = 0.0, M: float = 1.0
    ) -> "RatePrediction":
        return cls(RateModel.N_AGENT_BEST, gamma, additive=C, multiplicative=M, n=n, K=K)

    @property
    def fits_multiplicative(self) -> bool:
        return self.model in (RateModel.N_AGENT_RANDOM, RateModel.N_AGENT_BEST)

    def shape(self, eps: float) -> float:
        if not 0.0 < eps < 1.0:
            raise InvalidInputError(f"eps must lie in (0, 1), got {eps}")
        warm = lglg(1.0 / self.gamma)
        if self.model is RateModel.TWO_AGENT:
            return lglg(1.0 / eps) + warm
        if self.model is RateModel.TWO_AGENT_CURVED:
            assert self.q is not None
            return lglg(1.0 / eps) + warm / math.log2(2.0 + self.q)
        assert self.n is not None
        n = self.n
        if self.model is RateModel.N_AGENT_RANDOM:
            assert self.L is not None
            L = self.L
            return warm / (n * L) + math.log2(n) / L**2 * math.log2(n * self.K / (eps * self.delta))
        return warm + n * math.log2(n * self.K / eps)

    def predicted_steps(self, eps: float) -> float:
        return self.additive + self.multiplicative * self.shape(eps)

    def to_dict(self) -> Dict[str, Any]:
        data = {k: v for k, v in self.__dict__.items() if v is not None}
        data["model"] = self.model.value
        return data


def predict_steps(pred: RatePrediction, eps: float) -> float:
    return pred.predicted_steps(eps)


@dataclass(frozen=True)
class FitReport:
    prediction: RatePrediction
    additive: float
    multiplicative: float
    residuals: Tuple[float, ...]
    max_residual: float
    poor_fit: bool
    points: Tuple[Tuple[float, float], ...] = field(default=(), repr=False)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "model": self.prediction.model.value,
            "additive": self.additive,
            "multiplicative": self.multiplicative,
            "residuals": list(self.residuals),
            "max_residual": self.max_residual,
            "poor_fit": self.poor_fit,
            "points": [list(p) for p in self.points],
        }


def fit_rate(
    measured: Sequence[Tuple[float, float]],
    model: RatePrediction,
    tolerance: Optional[float] = None,
) -> FitReport:
    """Least-squares fit of the model's free constants to (eps, steps) pairs.

    Two-agent models fit only the additive constant; n-agent models also
    fit the multiplicative one. ``poor_fit`` is set when some residual
    exceeds ``tolerance`` (default ``settings.fit_residual_tolerance``).
    """
    points = [(float(e), float(s)) for e, s in measured]
    if len(points) < 3:
        raise FitError(f"fitting needs at least 3 points, got {len(points)}")
    eps = np.array([e for e, _ in points])
    steps = np.array([s for _, s in points])
    if np.any(np.diff(eps) >= 0):
        raise FitError("eps values must be strictly decreasing")
    if np.any(eps <= 0) or np.any(eps >= 1) or not np.all(np.isfinite(steps)):
        raise FitError("eps must lie in (0, 1) and steps must be finite")

    shapes = np.array([model.shape(e) for e in eps])
    if model.fits_multiplicative:
        design = np.column_stack([np.ones_like(shapes), shapes])
        target = steps
    else:
        design = np.ones((len(points), 1))
        target = steps - shapes
    solution, _, rank, _ = np.linalg.lstsq(design, target, rcond=None)
    if rank < design.shape[1]:
        raise FitError(f"{model.model.value} fit is singular on this data")

    additive = float(solution[0])
    multiplicative = float(solution[1]) if model.fits_multiplicative else 1.0
    fitted = replace(model, additive=additive, multiplicative=multiplicative)
    residuals = tuple(float(s - fitted.predicted_steps(e)) for e, s in points)
    max_residual = max(abs(r) for r in residuals)
    limit = settings.fit_residual_tolerance if tolerance is None else tolerance
    report = FitReport(
        prediction=fitted,
        additive=additive,
        multiplicative=multiplicative,
        residuals=residuals,
        max_residual=max_residual,
        poor_fit=max_residual > limit,
        points=tuple(points),
    )
    if report.poor_fit:
        logger.warning(
            f"{model.model.value} fit is poor: max residual {max_residual:.3g} > {limit:g}"
        )
    return report


def curved_warm_phase_window(gamma: float, p: float, q: float) -> Tuple[float, float]:
    """Bounds on the first t with z_t >= 1/2 for a start z_0 = gamma <= 1/2.

    The cost satisfies z^p <= c'(z) <= z^q on [0, 1] with p >= q. z_t stays
    below 1/2 before the lower end and is at least 1/2 from the upper end on.
    """
    if not 0.0 < gamma <= 0.5:
        raise InvalidInputError(f"warm phase starts from gamma in (0, 1/2], got {gamma}")
    if not 0.0 <= q <= p:
        raise InvalidInputError(f"curvature bounds need 0 <= q <= p, got p={p} q={q}")
    warm = lglg(1.0 / gamma)
    return warm / math.log2(2.0 + p) - math.log2(5.0), warm / math.log2(2.0 + q)


def steps_to_reach(z_seq: Sequence[float], level: float) -> Optional[int]:
    """First index t with z_t >= level; None if never reached."""
    hits = np.flatnonzero(np.asarray(z_seq, dtype=float) >= level)
    return int(hits[0]) if hits.size else None


def eps_doubling_gaps(steps_by_eps: Sequence[Tuple[float, int]]) -> List[int]:
    """steps(eps_{k+1}) - steps(eps_k) for consecutive measured pairs."""
    ordered = sorted(steps_by_eps, key=lambda p: -p[0])
    return [int(b[1] - a[1]) for a, b in zip(ordered, ordered[1:])]
