"""
Discounted-sum dynamics, its weak potential and lower-bound instances.
"""

from .beta import (
    AdversarialMaxBeta,
    BetaPolicy,
    CallbackBeta,
    ConstantBeta,
    UniformBeta,
    checked_beta,
)
from .weak_potential import PotentialValue, larger_side_pick, potential
from .processor import (
    DissumBestCase,
    LowerBoundInstance,
    dissum_step,
    lower_bound_example,
    run_dissum,
    stall_example,
)

__all__ = [
    "AdversarialMaxBeta",
    "BetaPolicy",
    "CallbackBeta",
    "ConstantBeta",
    "DissumBestCase",
    "LowerBoundInstance",
    "PotentialValue",
    "UniformBeta",
    "checked_beta",
    "dissum_step",
    "larger_side_pick",
    "lower_bound_example",
    "potential",
    "run_dissum",
    "stall_example",
]
