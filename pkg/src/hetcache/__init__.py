"""Joint cache placement and transmit power optimization for wireless HetNets."""

from .baselines import BaselineResult, SlottedSimConfig, run_baseline
from .cost import (CachePlacement, RelaxedCache, Subgradient,
                   check_logpower_convexity, exact_cost, multilinear_cost,
                   relaxed_cost, subgradient, upper_bound_cost)
from .feasible import (CappedSimplexSpec, PowerSimplexSpec, cache_spec,
                       power_spec, project_cache, project_power)
from .oracle import BruteForceResult, brute_force_opt, fd_gradient
from .radio import INF_DELAY, PowerAllocation, delay_of_sinr, link_delay, sinr
from .solvers import (KKTResidual, SolveReport, SubSolverConfig, check_kkt,
                      default_init, round_cache, solve_alt, solve_sub)
from .topology import (Edge, GenParams, Node, NodeKind, Request, Scenario,
                       generate_scenario, scenario_from_json, scenario_to_json,
                       validate, zipf_pmf)

__version__ = "0.1.0"

__all__ = [
    "BaselineResult",
    "BruteForceResult",
    "CachePlacement",
    "CappedSimplexSpec",
    "Edge",
    "GenParams",
    "INF_DELAY",
    "KKTResidual",
    "Node",
    "NodeKind",
    "PowerAllocation",
    "PowerSimplexSpec",
    "RelaxedCache",
    "Request",
    "Scenario",
    "SlottedSimConfig",
    "SolveReport",
    "SubSolverConfig",
    "Subgradient",
    "brute_force_opt",
    "cache_spec",
    "check_kkt",
    "check_logpower_convexity",
    "default_init",
    "delay_of_sinr",
    "exact_cost",
    "fd_gradient",
    "generate_scenario",
    "link_delay",
    "multilinear_cost",
    "power_spec",
    "project_cache",
    "project_power",
    "relaxed_cost",
    "round_cache",
    "run_baseline",
    "scenario_from_json",
    "scenario_to_json",
    "sinr",
    "solve_alt",
    "solve_sub",
    "subgradient",
    "upper_bound_cost",
    "validate",
    "zipf_pmf",
]
