"""
Tullock contest utilities, the numerical best-response solver and
approximate-equilibrium certification.
"""

import math
from dataclasses import dataclass
from typing import Optional, Tuple

from scipy.optimize import bisect

from app.config.settings import settings
from app.models.contest import ContestConfig, Profile, ProfileLike
from app.models.cost import CostSpec
from app.utils.exceptions import (
    InvalidInputError,
    NumericalRangeError,
    UnsupportedContestError,
)


def agent_utility(cost: CostSpec, n: int, z: float, s_minus: float) -> float:
    """Utility of playing z against opponents' total s_minus."""
    total = z + s_minus
    if total == 0.0:
        return 1.0 / n - float(cost.value(0.0))
    return z / total - float(cost.value(z))


def utility(cfg: ContestConfig, i: int, x: ProfileLike) -> float:
    profile = cfg.validate_profile(x)
    cfg.check_agent(i)
    return agent_utility(cfg.costs[i], cfg.n, profile[i], profile.s_minus(i))


def _marginal(z: float, cost: CostSpec, s_minus: float) -> float:
    total = z + s_minus
    return s_minus / (total * total) - float(cost.derivative(z))


def utility_derivative(cfg: ContestConfig, i: int, z: float, s_minus: float) -> float:
    cfg.check_agent(i)
    if not (math.isfinite(s_minus) and s_minus > 0):
        raise InvalidInputError(f"utility derivative needs s_minus > 0, got {s_minus}")
    if not (math.isfinite(z) and z >= 0):
        raise InvalidInputError(f"output must be finite and >= 0, got {z}")
    return _marginal(z, cfg.costs[i], s_minus)


def solve_best_response(cost: CostSpec, s_minus: float, a: float) -> float:
    """Root of the strictly decreasing marginal utility, found by bisection.

    The upper bracket doubles from 1 until the marginal utility turns
    negative; the bracket is closed once its width is within
    ~1e-13 * max(1, z).
    """
    if s_minus == 0.0:
        return a
    if _marginal(0.0, cost, s_minus) <= 0.0:
        return 0.0

    lo, hi = 0.0, 1.0
    for _ in range(settings.br_max_doublings + 1):
        value = _marginal(hi, cost, s_minus)
        if value < 0.0:
            break
        if value == 0.0:
            return hi
        lo, hi = hi, hi * 2.0
    else:
        raise NumericalRangeError(
            f"best response not bracketed below 2**{settings.br_max_doublings} "
            f"(s_minus={s_minus})"
        )

    return float(
        bisect(
            _marginal,
            lo,
            hi,
            args=(cost, s_minus),
            xtol=settings.br_xtol,
            rtol=settings.br_rtol,
            maxiter=settings.br_max_iter,
        )
    )


def best_response(cfg: ContestConfig, i: int, s_minus: float) -> float:
    cfg.check_agent(i)
    if not (math.isfinite(s_minus) and s_minus >= 0):
        raise InvalidInputError(
            f"opponents' total must be finite and >= 0, got {s_minus}"
        )
    return solve_best_response(cfg.costs[i], s_minus, cfg.a)


def best_response_linear_closed_form(n: int, s_minus: float) -> float:
    """Best response for normalized linear costs: max(0, n*sqrt(s/(n-1)) - s)."""
    if n < 2:
        raise InvalidInputError(f"closed form needs n >= 2, got {n}")
    if not (math.isfinite(s_minus) and s_minus > 0):
        raise InvalidInputError(f"closed form needs s_minus > 0, got {s_minus}")
    return max(0.0, n * math.sqrt(s_minus / (n - 1)) - s_minus)


@dataclass(frozen=True)
class AgentSlack:
    agent: int
    output: float
    s_minus: float
    best_response: float
    utility: float
    best_utility: float
    ratio: Optional[float]
    satisfied: bool
    vacuous: bool


@dataclass(frozen=True)
class EquilibriumReport:
    eps: float
    holds: bool
    agents: Tuple[AgentSlack, ...]

    def __bool__(self) -> bool:
        return self.holds

    @property
    def worst_ratio(self) -> Optional[float]:
        ratios = [a.ratio for a in self.agents if a.ratio is not None]
        return min(ratios) if ratios else None

    @property
    def worst_gap(self) -> float:
        """Largest relative utility shortfall 1 - u(x_i)/u(BR_i)."""
        ratio = self.worst_ratio
        return 0.0 if ratio is None else max(0.0, 1.0 - ratio)

    def to_dict(self) -> dict:
        return {
            "eps": self.eps,
            "holds": self.holds,
            "agents": [a.__dict__ for a in self.agents],
        }


def _tolerates(u_x: float, u_best: float, eps: float) -> bool:
    return u_x >= (1.0 - eps) * u_best - settings.equilibrium_rel_slack * abs(u_best)


def _agent_slack(cfg: ContestConfig, profile: Profile, i: int, eps: float) -> AgentSlack:
    cost = cfg.costs[i]
    xi = profile[i]
    s_minus = profile.s_minus(i)
    br = solve_best_response(cost, s_minus, cfg.a)
    u_x = agent_utility(cost, cfg.n, xi, s_minus)
    u_best = agent_utility(cost, cfg.n, br, s_minus)
    satisfied = _tolerates(u_x, u_best, eps)
    if u_best <= 0.0:
        # no ratio when u(BR) <= 0; positive output against BR = 0 still fails
        return AgentSlack(i, xi, s_minus, br, u_x, u_best, None, satisfied, satisfied)
    return AgentSlack(i, xi, s_minus, br, u_x, u_best, u_x / u_best, satisfied, False)


def is_epsilon_equilibrium(
    cfg: ContestConfig, x: ProfileLike, eps: float
) -> EquilibriumReport:
    if not (math.isfinite(eps) and eps > 0):
        raise InvalidInputError(f"eps must be > 0, got {eps}")
    profile = cfg.validate_profile(x)
    agents = tuple(_agent_slack(cfg, profile, i, eps) for i in range(cfg.n))
    return EquilibriumReport(eps=eps, holds=all(a.satisfied for a in agents), agents=agents)


def _newton_trial(cost: CostSpec, xi: float, s_minus: float) -> float:
    total = xi + s_minus
    slope = s_minus / (total * total) - float(cost.derivative(xi))
    curvature = -2.0 * s_minus / (total * total * total) - float(
        cost.second_derivative(xi)
    )
    if not math.isfinite(curvature) or curvature >= 0.0:
        return xi
    return max(0.0, xi - slope / curvature)


def first_violator(cfg: ContestConfig, profile: Profile, eps: float) -> Optional[int]:
    """Lowest agent index that can gain more than a (1 - eps) factor, if any.

    Each agent is first screened with one Newton trial deviation; the
    screen only rejects when it exhibits a strictly better deviation, so the
    answer equals the one from ``is_epsilon_equilibrium``.
    """
    total = profile.s
    for i in range(cfg.n):
        cost = cfg.costs[i]
        xi = profile[i]
        s_minus = max(0.0, total - xi)
        if s_minus > 0.0:
            u_x = agent_utility(cost, cfg.n, xi, s_minus)
            trial = _newton_trial(cost, xi, s_minus)
            u_trial = agent_utility(cost, cfg.n, trial, s_minus)
            if u_trial > 0.0 and not _tolerates(u_x, u_trial, eps):
                return i
        if not _agent_slack(cfg, profile, i, eps).satisfied:
            return i
    return None


def equilibrium_profile(cfg: ContestConfig) -> Profile:
    if not (cfg.is_homogeneous and cfg.normalized):
        raise UnsupportedContestError(
            "closed-form equilibrium needs a homogeneous normalized contest; "
            "simulate the dynamics instead"
        )
    return Profile.ones(cfg.n)
