"""
Contest core: utilities, best responses, equilibria and cost transforms.
"""

from .core import (
    AgentSlack,
    EquilibriumReport,
    agent_utility,
    best_response,
    best_response_linear_closed_form,
    equilibrium_profile,
    first_violator,
    is_epsilon_equilibrium,
    solve_best_response,
    utility,
    utility_derivative,
)
from .normalization import SuccessFunction, logit_transform, normalize_homogeneous

__all__ = [
    "AgentSlack",
    "EquilibriumReport",
    "SuccessFunction",
    "agent_utility",
    "best_response",
    "best_response_linear_closed_form",
    "equilibrium_profile",
    "first_violator",
    "is_epsilon_equilibrium",
    "logit_transform",
    "normalize_homogeneous",
    "solve_best_response",
    "utility",
    "utility_derivative",
]
