"""
Rate predictors, gamma, fitting, lemma checks and verification suites.
"""

from .gamma import GammaReport, gamma_lower_bound_n, gamma_two_agent
from .invariants import (
    StepCheck,
    br_trace_observers,
    check_trace,
    l1_bracket,
    merge_results,
    potential_monotone,
    replay,
    sign_contraction,
    two_agent_monotone,
    weak_potential_history,
)
from .lemmas import (
    CouponReport,
    PartitionWitness,
    coupon_all_played_time,
    epsilon_neighborhood_check,
    grid_best_response,
    partition_witness,
    reverse_lipschitz_check,
)
from .rates import (
    FitReport,
    RateModel,
    RatePrediction,
    curved_warm_phase_window,
    eps_doubling_gaps,
    fit_rate,
    lglg,
    predict_steps,
    steps_to_reach,
)
from .verify import VerifyReport, run_suite, suite_names

__all__ = [
    "CouponReport",
    "FitReport",
    "GammaReport",
    "PartitionWitness",
    "RateModel",
    "RatePrediction",
    "StepCheck",
    "VerifyReport",
    "br_trace_observers",
    "check_trace",
    "coupon_all_played_time",
    "curved_warm_phase_window",
    "eps_doubling_gaps",
    "epsilon_neighborhood_check",
    "fit_rate",
    "gamma_lower_bound_n",
    "gamma_two_agent",
    "grid_best_response",
    "l1_bracket",
    "lglg",
    "merge_results",
    "partition_witness",
    "potential_monotone",
    "predict_steps",
    "replay",
    "reverse_lipschitz_check",
    "run_suite",
    "sign_contraction",
    "steps_to_reach",
    "suite_names",
    "two_agent_monotone",
    "weak_potential_history",
]
