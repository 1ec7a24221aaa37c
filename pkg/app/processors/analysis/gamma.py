"""
Initial-state parameter gamma for the two-agent and n-agent bounds.
"""

import math
from dataclasses import dataclass, field
from typing import Any, Dict, Tuple

from app.models.contest import ContestConfig, ProfileLike
from app.processors.contest.core import solve_best_response
from app.utils.exceptions import UnsupportedContestError


@dataclass(frozen=True)
class GammaReport:
    gamma: float
    rule: str
    outputs: Tuple[float, ...] = field(default=())
    responses: Tuple[float, ...] = field(default=())

    def to_dict(self) -> Dict[str, Any]:
        return {
            "gamma": self.gamma,
            "rule": self.rule,
            "outputs": list(self.outputs),
            "responses": list(self.responses),
        }


def _require_normalized(cfg: ContestConfig) -> None:
    if not (cfg.is_homogeneous and cfg.normalized and cfg.base_cost is not None):
        raise UnsupportedContestError("gamma is defined for homogeneous normalized contests")


def gamma_two_agent(cfg: ContestConfig, x0_first_mover_opponent: float) -> GammaReport:
    """gamma from the output the first mover responds to.

    ``in_unit_interval`` when 0 < x < 1, ``inverse_marginal`` when x > 1 and
    c'(0) < 4/x, ``at_equilibrium`` when x = 1, ``best_response_to_zero``
    otherwise. c is the base cost with c'(1) = 1.
    """
    _require_normalized(cfg)
    if cfg.n != 2:
        raise UnsupportedContestError(f"two-agent gamma needs n = 2, got n={cfg.n}")
    assert cfg.base_cost is not None
    x = float(x0_first_mover_opponent)
    if 0.0 < x < 1.0:
        return GammaReport(x, "in_unit_interval")
    if x == 1.0:
        return GammaReport(1.0, "at_equilibrium")
    if x > 1.0 and cfg.base_cost.c_prime_at_zero < 4.0 / x:
        gamma = cfg.base_cost.inverse_derivative(1.0 / x)
        # c' never equals 1/x when c'(0) already exceeds it
        if 0.0 < gamma <= 1.0:
            return GammaReport(gamma, "inverse_marginal")
    return GammaReport(cfg.a, "best_response_to_zero")


def gamma_lower_bound_n(cfg: ContestConfig, x0: ProfileLike) -> GammaReport:
    """min({a} u A u B) with A the positive initial outputs.

    B holds BR(x_j + 1) when c'(0) = 0, else
    min((kappa - x_j)/4, BR((kappa + x_j)/4)) over x_j < kappa.
    """
    _require_normalized(cfg)
    if cfg.n < 3:
        raise UnsupportedContestError(f"gamma lower bound needs n >= 3, got n={cfg.n}")
    profile = cfg.validate_profile(x0)
    cost = cfg.costs[0]
    kappa = cfg.kappa

    outputs = tuple(float(v) for v in profile.x if v > 0)
    if math.isinf(kappa):
        responses = tuple(solve_best_response(cost, float(v) + 1.0, cfg.a) for v in profile.x)
        rule = "zero_marginal_cost"
    else:
        responses = tuple(
            min((kappa - v) / 4.0, solve_best_response(cost, (kappa + v) / 4.0, cfg.a))
            for v in (float(v) for v in profile.x)
            if v < kappa
        )
        rule = "positive_marginal_cost"
    gamma = min((cfg.a,) + outputs + responses)
    return GammaReport(gamma, rule, outputs, responses)
