"""Solvers: joint subgradient descent, alternating minimization, rounding, KKT."""

from .alt import minimize_cache, optimize_power, solve_alt
from .common import SolveReport, SubSolverConfig, TraceRow, default_init
from .kkt import KKTResidual, check_kkt
from .rounding import round_cache, round_cache_trace
from .sub import solve_sub

__all__ = [
    "KKTResidual",
    "SolveReport",
    "SubSolverConfig",
    "TraceRow",
    "check_kkt",
    "default_init",
    "minimize_cache",
    "optimize_power",
    "round_cache",
    "round_cache_trace",
    "solve_alt",
    "solve_sub",
]
