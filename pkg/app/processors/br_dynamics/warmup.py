"""
Warm-up phase conditions and the best-case greedy mover.
"""

import math
from dataclasses import dataclass
from typing import Any, Optional

import numpy as np

from app.models.contest import ContestConfig, ProfileLike
from app.models.dynamics import Trace
from app.processors.contest.core import solve_best_response
from app.processors.discounted_sum.weak_potential import larger_side_pick
from app.utils.exceptions import UnsupportedContestError


@dataclass(frozen=True)
class WarmupReport:
    total: float
    kappa: float
    output_cap: float
    total_below_kappa: bool
    outputs_capped: bool
    two_positive: bool

    @property
    def holds(self) -> bool:
        return self.total_below_kappa and self.outputs_capped and self.two_positive

    def __bool__(self) -> bool:
        return self.holds


def _require_warmup_contest(cfg: ContestConfig) -> None:
    if not (cfg.is_homogeneous and cfg.normalized):
        raise UnsupportedContestError("warm-up is defined for homogeneous normalized contests")
    if cfg.n < 3:
        raise UnsupportedContestError(f"warm-up is defined for n >= 3, got n={cfg.n}")


def warmup_conditions(cfg: ContestConfig, x: np.ndarray) -> WarmupReport:
    n = cfg.n
    total = math.fsum(x)
    kappa = cfg.kappa
    cap = n**2 / (4 * (n - 1))
    return WarmupReport(
        total=total,
        kappa=kappa,
        output_cap=cap,
        total_below_kappa=total < kappa,
        outputs_capped=bool(np.all(x <= cap)),
        two_positive=int(np.count_nonzero(x > 0)) >= 2,
    )


def warmup_satisfied(cfg: ContestConfig, x: ProfileLike) -> WarmupReport:
    _require_warmup_contest(cfg)
    return warmup_conditions(cfg, cfg.validate_profile(x).x)


def warmup_completion_time(
    trace: Trace, cfg: Optional[ContestConfig] = None
) -> Optional[int]:
    """Smallest recorded t from which the warm-up conditions hold throughout.

    Returns None (absent) when the last recorded state is outside the
    warm-up region.
    """
    cfg = cfg or trace.contest
    if cfg is None:
        raise UnsupportedContestError("warm-up completion needs the contest configuration")
    _require_warmup_contest(cfg)
    completion: Optional[int] = None
    for k in range(len(trace) - 1, -1, -1):
        if not warmup_conditions(cfg, trace.states[k]).holds:
            break
        completion = int(trace.times[k])
    return completion


def greedy_deviation_mover(x: ProfileLike, exclude: Optional[int] = None) -> int:
    """Largest |x_i - 1| on the side of 1 with the larger total deviation."""
    arr = np.asarray(x.x if hasattr(x, "x") else x, dtype=float)
    return larger_side_pick(arr - 1.0, exclude=exclude)


def best_case_greedy_mover(cfg: ContestConfig, state: Any) -> int:
    if not (cfg.is_homogeneous and cfg.normalized):
        raise UnsupportedContestError("best-case selection needs a homogeneous normalized contest")
    n = cfg.n
    x = state.x.x
    in_warmup = len(state.played) < n or (n >= 3 and not warmup_conditions(cfg, x).holds)
    if in_warmup:
        return 0 if state.last_mover is None else (state.last_mover + 1) % n

    exclude = None
    last = state.last_mover
    if last is not None:
        s_minus = max(0.0, math.fsum(x) - float(x[last]))
        br = solve_best_response(cfg.costs[last], s_minus, cfg.a)
        if abs(br - x[last]) <= 1e-12 * max(1.0, abs(br)):
            exclude = last
    return greedy_deviation_mover(x, exclude=exclude)
