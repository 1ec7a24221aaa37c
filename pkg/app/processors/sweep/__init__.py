"""
实验服务模块
单次运行、扫描与汇总
"""

from .entry import (
    RunOutcome,
    cycle_experiment,
    dissum_experiment,
    simulate_experiment,
    sweep_experiment,
    verify_suite,
)
from .service import EXIT_CODES, ExperimentService, exit_code_for, run_cell

__all__ = [
    "EXIT_CODES",
    "ExperimentService",
    "RunOutcome",
    "cycle_experiment",
    "dissum_experiment",
    "exit_code_for",
    "run_cell",
    "simulate_experiment",
    "sweep_experiment",
    "verify_suite",
]
