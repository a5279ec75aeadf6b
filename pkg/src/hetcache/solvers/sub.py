"""Joint projected subgradient descent over caching and power blocks."""

from __future__ import annotations

import time

import numpy as np

from ..cost import _relaxed_value_arrays, _subgradient_arrays, exact_cost
from ..feasible import cache_spec, power_spec, project_cache, project_power
from ..radio import demand_index, radio_index
from ..topology import Scenario
from .common import (SolveReport, SubSolverConfig, TraceRow, active_power_floor,
                     checked_init, demand_edge_weights, free_cache_mask)
from .kkt import check_kkt
from .rounding import round_cache


def solve_sub(scenario: Scenario, config: SubSolverConfig = SubSolverConfig(),
              init=None) -> SolveReport:
    """Minimize the relaxed cost by simultaneous projected subgradient steps.

    Step lengths follow the gap to a moving target: the best objective seen so
    far minus a decaying offset, divided by the squared subgradient norm of
    each block. The run stops once the best objective has improved by at most
    epsilon for `stall_iters` consecutive iterations, then rounds the caching
    marginals at the final powers.
    """
    ridx, didx = radio_index(scenario), demand_index(scenario)
    cspec, pspec = cache_spec(scenario), power_spec(scenario)
    y_mask = free_cache_mask(scenario)
    base_w = demand_edge_weights(scenario)

    y, svec = checked_init(scenario, init)
    svec = active_power_floor(scenario, svec, base_w)

    t0 = time.perf_counter()
    objective = _relaxed_value_arrays(ridx, didx, y, svec)
    if not np.isfinite(objective):
        raise RuntimeError(f"non-finite objective at the initial point: "
                           f"{objective!r}")
    epsilon, delta0 = config.resolve(objective)

    best = objective
    best_y, best_s = y.copy(), svec.copy()
    trace = [TraceRow(0, objective, best, 0.0, 0.0, 0.0)]
    iterates = [(y.copy(), svec.copy())] if config.keep_iterates else None
    stall = 0
    iteration = 0

    for iteration in range(1, config.max_iters + 1):
        sub = _subgradient_arrays(scenario, ridx, didx, y, svec)
        d_y = np.where(y_mask, sub.d_y, 0.0) * config.w_y
        d_s = sub.d_s * config.w_s

        # Target offset decaying like 1/sqrt(t): it vanishes and its series
        # diverges, and the per-step travel budget stays polynomial.
        delta = delta0 / np.sqrt(1.0 + iteration)
        gap = objective - (best - delta)

        step_y = 0.0
        ny2 = float(np.sum(d_y * d_y))
        if ny2 > 0.0:
            step_y = gap / ny2
            y = project_cache(y - step_y * d_y, cspec)

        step_s = 0.0
        ns2 = float(np.sum(d_s * d_s))
        if ns2 > 0.0:
            step_s = gap / ns2
            svec = project_power(svec - step_s * d_s, pspec)
            svec = active_power_floor(scenario, svec, base_w)

        objective = _relaxed_value_arrays(ridx, didx, y, svec)
        if not np.isfinite(objective):
            raise RuntimeError(
                f"non-finite objective at iteration {iteration}: "
                f"value={objective!r}, step_y={step_y:.3g}, step_s={step_s:.3g}")

        improvement = best - objective
        if objective < best:
            best = objective
            best_y, best_s = y.copy(), svec.copy()
        stall = stall + 1 if improvement <= epsilon else 0
        trace.append(TraceRow(iteration, objective, best, step_y, step_s,
                              time.perf_counter() - t0))
        if iterates is not None:
            iterates.append((y.copy(), svec.copy()))
        if stall >= config.stall_iters:
            break

    rounded = round_cache(scenario, best_y, best_s)
    report = SolveReport(
        method="sub",
        trace=trace,
        final_y=best_y,
        final_s=best_s,
        rounded_x=rounded,
        final_relaxed_cost=best,
        final_exact_cost=exact_cost(scenario, rounded, best_s),
        kkt=check_kkt(scenario, best_y, best_s),
        wall_time=time.perf_counter() - t0,
        iterations=iteration,
        iterates=iterates,
        edge_keys=ridx.keys,
    )
    return report
