"""Alternating block minimization: caching block, then power block, repeat."""

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

ARMIJO_C = 1e-4


def optimize_power(scenario: Scenario, y: np.ndarray, svec: np.ndarray,
                   tol: float = 1e-6, max_iters: int = 400,
                   on_improve=None) -> tuple[np.ndarray, float, int]:
    """Projected gradient descent with Armijo backtracking on the power block.

    The caching matrix is held fixed; every accepted step decreases the
    objective, so the block value is nonincreasing. `tol` is relative: the
    loop stops once an accepted step improves the value by less than
    tol * max(|value|, 1). Returns the final powers, their objective, and the
    number of accepted iterations.
    """
    ridx, didx = radio_index(scenario), demand_index(scenario)
    pspec = power_spec(scenario)
    base_w = demand_edge_weights(scenario)
    svec = active_power_floor(scenario, np.array(svec, copy=True), base_w)

    # The caching matrix is fixed for the whole block solve, so the per-edge
    # demand weights and the wired-hop constant are hoisted out of the loop.
    from ..cost import _shortfall_weights
    from ..radio import delay_of_sinr, delay_slope, sinr_vector
    hop_w = didx.hop_rate * _shortfall_weights(didx, y)
    wired = didx.hop_edge < 0
    wired_const = float(np.dot(hop_w[wired], didx.hop_fixed[wired]))
    edge_w = np.zeros(ridx.n_edges)
    np.add.at(edge_w, didx.hop_edge[~wired], hop_w[~wired])
    active = edge_w > 0.0

    def value_at(vec):
        return float(edge_w @ delay_of_sinr(sinr_vector(ridx, vec))) + wired_const

    def grad_at(vec):
        x = sinr_vector(ridx, vec)
        if np.any(active & (x <= 0.0)):
            e = int(np.argmax(active & (x <= 0.0)))
            raise ValueError(f"active link {ridx.keys[e]} has zero SINR")
        denom = ridx.noise + ridx.cross @ vec - ridx.gains * vec
        c = np.zeros(ridx.n_edges)
        c[active] = edge_w[active] * delay_slope(x[active]) / denom[active]
        q = c * x
        return ridx.gains * (c + q) - ridx.cross.T @ q

    value = value_at(svec)
    accepted = 0
    tiny_gains = 0
    eta_prev = None
    for _ in range(max_iters):
        grad = grad_at(svec)
        gnorm2 = float(np.sum(grad * grad))
        if gnorm2 <= 0.0:
            break
        # Bidirectional step search around the previously accepted step size:
        # double while the value keeps improving, otherwise halve to the
        # ladder's argmin. Across a delay cliff the gradient magnitude jumps
        # by many orders, so no absolute floor or ceiling is put on the step;
        # the trial budget alone bounds the work.
        scale = max(float(np.abs(svec).max()), 1.0)
        natural = 0.25 * scale / np.sqrt(gnorm2)
        eta = eta_prev if eta_prev is not None else natural

        def attempt(step):
            trial = project_power(svec - step * grad, pspec)
            trial = active_power_floor(scenario, trial, base_w)
            return trial, value_at(trial)

        best_trial = None
        best_value = value
        best_eta = eta
        trial, trial_value = attempt(eta)
        if trial_value < value:
            best_trial, best_value, best_eta = trial, trial_value, eta
            for _ in range(40):  # expand while strictly improving
                eta *= 2.0
                trial, trial_value = attempt(eta)
                if trial_value < best_value:
                    best_trial, best_value, best_eta = trial, trial_value, eta
                else:
                    break
        else:
            worsened = 0
            for _ in range(60):  # contract toward the argmin
                eta *= 0.5
                trial, trial_value = attempt(eta)
                if trial_value < best_value:
                    best_trial, best_value, best_eta = trial, trial_value, eta
                    worsened = 0
                elif best_trial is not None:
                    worsened += 1
                    if worsened >= 2:
                        break
        if best_trial is None:
            break
        move = best_trial - svec
        decrease = float(np.dot(grad, move))
        # Sufficient decrease along the projection arc; near the delay
        # saturation sentinel the analytic slope overstates the drop, so a
        # plain strict decrease is also accepted there.
        sufficient = best_value <= value + ARMIJO_C * decrease
        saturated = -decrease > 10.0 * max(value, 1.0)
        if not (sufficient or saturated):
            break
        gain = value - best_value
        svec, value = best_trial, best_value
        eta_prev = best_eta
        accepted += 1
        if on_improve is not None:
            on_improve(value)
        # Progress-based stop: two consecutive accepted steps below tolerance
        # mean the descent rate has genuinely flattened (a single tiny step
        # can be an artifact of a shrunken ladder choice).
        tiny_gains = tiny_gains + 1 if gain <= tol * max(abs(value), 1.0) else 0
        if tiny_gains >= 2:
            break
    return svec, value, accepted


def minimize_cache(scenario: Scenario, y0: np.ndarray, svec: np.ndarray,
                   tol: float = 1e-8, max_iters: int = 2000,
                   stall_iters: int = 60, delta0: float | None = None,
                   on_improve=None) -> tuple[np.ndarray, float, int]:
    """Projected subgradient descent on the caching block at fixed powers.

    The block objective is convex piecewise linear in the marginals, so the
    best iterate converges to the block minimum; the best point is returned.
    `tol` is relative to the running best value.
    """
    ridx, didx = radio_index(scenario), demand_index(scenario)
    cspec = cache_spec(scenario)
    y_mask = free_cache_mask(scenario)
    y = np.array(y0, copy=True)
    value = _relaxed_value_arrays(ridx, didx, y, svec)
    best, best_y = value, y.copy()
    if delta0 is None:
        delta0 = max(1e-2 * value, 1e-12)
    stall = 0
    it = 0
    for it in range(1, max_iters + 1):
        d_y = np.where(y_mask, _subgradient_arrays(
            scenario, ridx, didx, y, svec).d_y, 0.0)
        ny2 = float(np.sum(d_y * d_y))
        if ny2 <= 0.0:
            break
        gap = value - (best - delta0 / np.sqrt(1.0 + it))
        y = project_cache(y - (gap / ny2) * d_y, cspec)
        value = _relaxed_value_arrays(ridx, didx, y, svec)
        improvement = best - value
        if value < best:
            best, best_y = value, y.copy()
            if on_improve is not None:
                on_improve(best)
        stall = stall + 1 if improvement <= tol * max(abs(best), 1.0) else 0
        if stall >= stall_iters:
            break
    return best_y, best, it


def solve_alt(scenario: Scenario, config: SubSolverConfig = SubSolverConfig(),
              init=None) -> SolveReport:
    """Alternate exact-as-possible block minimizations until the outer
    objective stops improving, then round the caching marginals."""
    ridx, didx = radio_index(scenario), demand_index(scenario)
    base_w = demand_edge_weights(scenario)

    y, svec = checked_init(scenario, init)
    svec = active_power_floor(scenario, svec, base_w)

    t0 = time.perf_counter()
    value = _relaxed_value_arrays(ridx, didx, y, svec)
    if not np.isfinite(value):
        raise RuntimeError(f"non-finite objective at the initial point: {value!r}")
    epsilon, delta0 = config.resolve(value)
    inner_tol = max(0.1 * epsilon / max(value, 1.0), 1e-13)

    trace = [TraceRow(0, value, value, 0.0, 0.0, 0.0)]
    counter = [0]

    def record(val, phase):
        counter[0] += 1
        trace.append(TraceRow(counter[0], val, min(val, trace[-1].best),
                              0.0, 0.0, time.perf_counter() - t0, phase))

    outer = 0
    for outer in range(1, config.max_iters + 1):
        y, y_value, _ = minimize_cache(
            scenario, y, svec, inner_tol, delta0=delta0 / outer,
            on_improve=lambda v: record(v, "cache"))
        svec, s_value, _ = optimize_power(
            scenario, y, svec, inner_tol,
            on_improve=lambda v: record(v, "power"))
        improvement = value - s_value
        value = s_value
        if improvement <= epsilon:
            break

    rounded = round_cache(scenario, y, svec)
    return SolveReport(
        method="alt",
        trace=trace,
        final_y=y,
        final_s=svec,
        rounded_x=rounded,
        final_relaxed_cost=value,
        final_exact_cost=exact_cost(scenario, rounded, svec),
        kkt=check_kkt(scenario, y, svec),
        wall_time=time.perf_counter() - t0,
        iterations=outer,
        iterates=None,
        edge_keys=ridx.keys,
    )
