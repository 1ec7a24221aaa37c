"""
Best-response dynamics: selection policies, runs, warm-up and cycles.
"""

from .cycles import (
    detect_cycle,
    find_cycle,
    heterogeneous_cycle_example,
    two_agent_z_sequence,
)
from .processor import StepEvent, StepObserver, initial_state, run, step
from .selection import (
    Alternating,
    BestCaseGreedy,
    ExplicitSchedule,
    FlooredRandom,
    RoundRobin,
    SelectionPolicy,
    UniformRandom,
)
from .warmup import (
    WarmupReport,
    best_case_greedy_mover,
    greedy_deviation_mover,
    warmup_completion_time,
    warmup_conditions,
    warmup_satisfied,
)

__all__ = [
    "Alternating",
    "BestCaseGreedy",
    "ExplicitSchedule",
    "FlooredRandom",
    "RoundRobin",
    "SelectionPolicy",
    "StepEvent",
    "StepObserver",
    "UniformRandom",
    "WarmupReport",
    "best_case_greedy_mover",
    "detect_cycle",
    "find_cycle",
    "greedy_deviation_mover",
    "heterogeneous_cycle_example",
    "initial_state",
    "run",
    "step",
    "two_agent_z_sequence",
    "warmup_completion_time",
    "warmup_conditions",
    "warmup_satisfied",
]
