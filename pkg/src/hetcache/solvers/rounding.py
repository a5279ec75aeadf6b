"""Pairwise mass-transfer rounding of fractional caching marginals."""

from __future__ import annotations

import numpy as np

from ..cost import CachePlacement, _as_matrix, _as_svec, _survival_weights, \
    hop_delay_vector
from ..feasible import cache_spec, placement_violation
from ..radio import demand_index, radio_index
from ..topology import Scenario

FRAC_TOL = 1e-9


def _multilinear_given_delays(didx, hop_delays, y) -> float:
    return float(np.dot(didx.hop_rate * _survival_weights(didx, y), hop_delays))


def round_cache_trace(scenario: Scenario, Y, S) -> tuple[CachePlacement, list]:
    """Rounding with a per-step log of (fractional_count, multilinear_cost)."""
    y = np.array(_as_matrix(Y), dtype=float, copy=True)
    svec = _as_svec(scenario, S)
    ridx, didx = radio_index(scenario), demand_index(scenario)
    hop_d = hop_delay_vector(ridx, didx, svec)

    def fractional(row):
        return [i for i in range(y.shape[1])
                if FRAC_TOL < row[i] < 1.0 - FRAC_TOL]

    def frac_count():
        return int(((y > FRAC_TOL) & (y < 1.0 - FRAC_TOL)).sum())

    steps = [(frac_count(), _multilinear_given_delays(didx, hop_d, y))]
    max_steps = y.size + 1
    for _ in range(max_steps):
        target = None
        for v in range(y.shape[0]):
            frac = fractional(y[v])
            if len(frac) >= 2:
                target = (v, frac[0], frac[1])
                break
        if target is None:
            break
        v, i, j = target
        a, b = y[v, i], y[v, j]
        up = min(1.0 - a, b)        # push mass j -> i
        down = min(a, 1.0 - b)      # push mass i -> j
        y_up = y.copy()
        y_up[v, i], y_up[v, j] = a + up, b - up
        y_down = y.copy()
        y_down[v, i], y_down[v, j] = a - down, b + down
        cost_up = _multilinear_given_delays(didx, hop_d, y_up)
        cost_down = _multilinear_given_delays(didx, hop_d, y_down)
        y = y_up if cost_up <= cost_down else y_down
        steps.append((frac_count(), min(cost_up, cost_down)))

    x = np.where(y >= 1.0 - FRAC_TOL, 1.0, 0.0)
    cspec = cache_spec(scenario)
    for v in range(x.shape[0]):
        x[v, list(cspec.pinned[v])] = 1.0
    placement = CachePlacement(x)
    bad = placement_violation(scenario, placement.x)
    if bad:
        raise RuntimeError(f"rounding produced an infeasible placement: {bad}")
    return placement, steps


def round_cache(scenario: Scenario, Y, S) -> CachePlacement:
    """Convert fractional marginals to a binary placement without increasing
    the multilinear cost.

    Integral per-node mass means fractional entries pair up; each step moves
    equal mass between the lowest-indexed fractional pair at the lowest-id
    node until one entry hits a bound, keeping the cheaper of the two extreme
    transfers. Every step removes at least one fractional entry.
    """
    placement, _steps = round_cache_trace(scenario, Y, S)
    return placement
