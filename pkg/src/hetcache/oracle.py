"""Brute-force ground truth for micro-instances: exhaustive placements, power
grid search, and finite-difference gradients."""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .cost import (CachePlacement, Subgradient, _as_matrix, _as_svec,
                   _survival_weights, hop_delay_vector, relaxed_cost)
from .feasible import cache_spec
from .radio import PowerAllocation, demand_index, radio_index
from .topology import Scenario

MAX_EVALS = 10_000_000
GRID_LEVELS = (0.25, 0.5, 0.75, 1.0)


@dataclass(frozen=True)
class BruteForceResult:
    placement: CachePlacement
    powers: PowerAllocation
    cost: float
    n_placements: int
    n_power_points: int


def _compositions(total: int, parts: int):
    """All nonnegative integer tuples of the given length summing to total."""
    if parts == 1:
        yield (total,)
        return
    for head in range(total + 1):
        for rest in _compositions(total - head, parts - 1):
            yield (head,) + rest


def _node_power_grid(budget: float, degree: int, resolution: int) -> np.ndarray:
    rows = [tuple(0.0 for _ in range(degree))]  # a silent node is attainable
    for level in GRID_LEVELS:
        scale = level * budget / resolution
        for comp in _compositions(resolution, degree):
            rows.append(tuple(c * scale for c in comp))
    uniq = sorted(set(rows))
    return np.array(uniq, dtype=float)


def _placements(scenario: Scenario) -> list[np.ndarray]:
    """Every maximal feasible placement: pinned items plus exactly as many free
    items as capacity allows per node (extra cached items never raise the
    cost, so full caches are enumerated without loss)."""
    cspec = cache_spec(scenario)
    n_items = scenario.catalog_size
    per_node = []
    for v in range(scenario.n_nodes):
        pins = list(cspec.pinned[v])
        free = [i for i in range(n_items) if i not in pins]
        take = min(cspec.capacities[v] - len(pins), len(free))
        if take < 0:
            raise ValueError(f"node {v}: pinned items exceed capacity")
        per_node.append([tuple(pins) + combo
                         for combo in itertools.combinations(free, take)])
    out = []
    for choice in itertools.product(*per_node):
        x = np.zeros((scenario.n_nodes, n_items))
        for v, items in enumerate(choice):
            x[v, list(items)] = 1.0
        out.append(x)
    return out


def brute_force_opt(scenario: Scenario,
                    power_grid_resolution: int) -> BruteForceResult:
    """Exhaustive minimum of the exact cost over full placements and a per-node
    simplex lattice of powers (boundary plus interior budget levels)."""
    if power_grid_resolution < 1:
        raise ValueError("power grid resolution must be positive")
    ridx, didx = radio_index(scenario), demand_index(scenario)
    node_grids = []
    tx_order = sorted(ridx.tx_groups)
    for v in tx_order:
        ids = ridx.tx_groups[v]
        node_grids.append(_node_power_grid(scenario.nodes[v].power_budget,
                                           len(ids), power_grid_resolution))
    placements = _placements(scenario)
    n_power = int(np.prod([len(g) for g in node_grids])) if node_grids else 1
    total = n_power * len(placements)
    if total > MAX_EVALS:
        raise ValueError(f"instance too large for brute force: "
                         f"{len(placements)} placements x {n_power} power points"
                         f" = {total} evaluations")

    if node_grids:
        mesh = itertools.product(*(range(len(g)) for g in node_grids))
        svecs = np.zeros((n_power, ridx.n_edges))
        for row, combo in enumerate(mesh):
            for v, gi in zip(tx_order, combo):
                svecs[row, ridx.tx_groups[v]] = node_grids[tx_order.index(v)][gi]
    else:
        svecs = np.zeros((1, ridx.n_edges))

    hop_delays = np.empty((len(svecs), len(didx.hop_req)))
    for b in range(len(svecs)):
        hop_delays[b] = hop_delay_vector(ridx, didx, svecs[b])
    weights = np.stack([didx.hop_rate * _survival_weights(didx, x)
                        for x in placements], axis=1)
    costs = hop_delays @ weights  # (n_power, n_placements)
    flat = int(np.argmin(costs))
    b_star, p_star = np.unravel_index(flat, costs.shape)
    return BruteForceResult(
        placement=CachePlacement(placements[p_star]),
        powers=PowerAllocation.from_vector(scenario, svecs[b_star]),
        cost=float(costs[b_star, p_star]),
        n_placements=len(placements),
        n_power_points=len(svecs),
    )


def fd_gradient(scenario: Scenario, Y, S, h: float = 1e-6) -> Subgradient:
    """Central finite differences of the relaxed cost in every free caching
    coordinate and every power coordinate.

    Refuses points near the piecewise-linear kinks (any prefix mass within
    10h of 1) and requires enough budget headroom to probe powers; pinned
    caching entries are reported as NaN."""
    y = _as_matrix(Y)
    svec = np.array(_as_svec(scenario, S), copy=True)
    ridx, didx = radio_index(scenario), demand_index(scenario)
    for _start, _end, path, item, _rate in didx.req_rows:
        cums = np.cumsum(y[path[:-1], item])
        if np.any(np.abs(cums - 1.0) < 10.0 * h):
            raise ValueError("prefix mass within 10h of the kink at 1; "
                             "perturb the evaluation point")
    for v, ids in ridx.tx_groups.items():
        budget = scenario.nodes[v].power_budget
        if budget - float(svec[ids].sum()) < 2.0 * h:
            raise ValueError(f"node {v}: budget headroom below 2h; "
                             "use a strictly interior power point")
    if np.any(svec < h):
        raise ValueError("power coordinates below h; use an interior point")

    cspec = cache_spec(scenario)
    d_y = np.full_like(y, np.nan, dtype=float)
    for v in range(scenario.n_nodes):
        pins = set(cspec.pinned[v])
        for i in range(scenario.catalog_size):
            if i in pins:
                continue
            step = min(h, 0.25 * (1.0 + min(y[v, i], 1.0 - y[v, i])))
            hi = y.copy()
            lo = y.copy()
            hi[v, i] = min(y[v, i] + h, 1.0)
            lo[v, i] = max(y[v, i] - h, 0.0)
            span = hi[v, i] - lo[v, i]
            d_y[v, i] = (relaxed_cost(scenario, hi, svec)
                         - relaxed_cost(scenario, lo, svec)) / span

    d_s = np.empty(ridx.n_edges)
    for e in range(ridx.n_edges):
        hi = svec.copy()
        lo = svec.copy()
        hi[e] += h
        lo[e] -= h
        d_s[e] = (relaxed_cost(scenario, y, hi)
                  - relaxed_cost(scenario, y, lo)) / (2.0 * h)
    return Subgradient(d_y=d_y, d_s=d_s, edges=ridx.keys)
