"""Euclidean projections onto the power and relaxed-cache constraint sets."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .radio import radio_index
from .topology import Scenario

FEAS_TOL = 1e-9


@dataclass(frozen=True)
class PowerSimplexSpec:
    """Per-transmitter budget and the wireless-edge indices it owns."""

    budgets: tuple[float, ...]
    groups: tuple[tuple[int, ...], ...]
    n_edges: int


@dataclass(frozen=True)
class CappedSimplexSpec:
    """Per-node cache capacity, pinned items, and the [0,1] box."""

    capacities: tuple[int, ...]
    pinned: tuple[tuple[int, ...], ...]
    n_items: int


def power_spec(scenario: Scenario) -> PowerSimplexSpec:
    ridx = radio_index(scenario)
    budgets, groups = [], []
    for v in sorted(ridx.tx_groups):
        budgets.append(scenario.nodes[v].power_budget)
        groups.append(tuple(int(i) for i in ridx.tx_groups[v]))
    return PowerSimplexSpec(tuple(budgets), tuple(groups), ridx.n_edges)


def cache_spec(scenario: Scenario) -> CappedSimplexSpec:
    pinned = [[] for _ in scenario.nodes]
    for item, srcs in scenario.designated_sources.items():
        for v in srcs:
            pinned[v].append(item)
    caps = tuple(nd.cache_capacity for nd in scenario.nodes)
    return CappedSimplexSpec(caps, tuple(tuple(sorted(p)) for p in pinned),
                             scenario.catalog_size)


def project_simplex(v: np.ndarray, total: float) -> np.ndarray:
    """Nearest point of {x >= 0, sum x = total} by the sorted-threshold rule."""
    v = np.asarray(v, dtype=float)
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - total
    ind = np.arange(1, len(v) + 1)
    rho = np.nonzero(u - css / ind > 0)[0][-1]
    theta = css[rho] / (rho + 1)
    return np.maximum(v - theta, 0.0)


def project_power(raw: np.ndarray, spec: PowerSimplexSpec) -> np.ndarray:
    """Project per-edge powers onto each transmitter's budget set independently.

    Negative entries are clipped; a block is moved to its budget face only when
    the clipped block exceeds the budget.
    """
    out = np.array(raw, dtype=float, copy=True)
    if out.shape != (spec.n_edges,):
        raise ValueError(f"expected power vector of length {spec.n_edges}")
    for budget, idxs in zip(spec.budgets, spec.groups):
        ids = list(idxs)
        block = np.maximum(out[ids], 0.0)
        if block.sum() > budget:
            block = project_simplex(out[ids], budget)
        out[ids] = block
    return out


def _capped_bisect(values: np.ndarray, free: np.ndarray, totals: np.ndarray,
                   tol: float = 1e-12, max_iter: int = 200) -> np.ndarray:
    """Row-wise projection onto {0 <= y <= 1, sum y = total} over free entries.

    Bisection on the shift mu in clip(values - mu, 0, 1); sums are monotone in
    mu, and a final linear correction over strictly interior entries makes the
    row sums exact.
    """
    any_free = free.any(axis=1)
    vals = np.where(free, values, -np.inf)
    lo = np.where(any_free, np.where(free, values, np.inf).min(axis=1) - 1.0, 0.0)
    hi = np.where(any_free, vals.max(axis=1), 0.0)
    span = float((hi - lo).max(initial=0.0))
    iters = min(max_iter, max(1, int(np.ceil(np.log2(max(span, tol) / tol))) + 1))
    for _ in range(iters):
        mu = 0.5 * (lo + hi)
        y = np.clip(values - mu[:, None], 0.0, 1.0)
        sums = np.where(free, y, 0.0).sum(axis=1)
        below = sums > totals
        lo = np.where(below, mu, lo)
        hi = np.where(below, hi, mu)
    mu = 0.5 * (lo + hi)
    y = np.where(free, np.clip(values - mu[:, None], 0.0, 1.0), 0.0)
    interior = free & (y > 0.0) & (y < 1.0)
    n_int = interior.sum(axis=1)
    resid = totals - y.sum(axis=1)
    adjust = np.divide(resid, n_int, out=np.zeros_like(resid), where=n_int > 0)
    y = np.clip(y + np.where(interior, adjust[:, None], 0.0), 0.0, 1.0)
    return y


def _cache_structure(spec: CappedSimplexSpec):
    n_nodes = len(spec.capacities)
    free = np.ones((n_nodes, spec.n_items), dtype=bool)
    totals = np.empty(n_nodes)
    for v in range(n_nodes):
        pins = spec.pinned[v]
        free[v, list(pins)] = False
        b = spec.capacities[v] - len(pins)
        if b < 0:
            raise ValueError(f"node {v}: capacity {spec.capacities[v]} below "
                             f"{len(pins)} pinned items")
        if b > int(free[v].sum()):
            raise ValueError(f"node {v}: capacity leaves no feasible fill "
                             f"(needs {b} of {int(free[v].sum())} free items)")
        totals[v] = float(b)
    return free, totals


def project_cache(raw: np.ndarray, spec: CappedSimplexSpec) -> np.ndarray:
    """Project a node-by-item matrix onto the relaxed caching set: pinned
    entries at 1 and, per node, the free entries on the capped simplex of mass
    capacity - #pinned."""
    raw = np.asarray(raw, dtype=float)
    n_nodes = len(spec.capacities)
    if raw.shape != (n_nodes, spec.n_items):
        raise ValueError(f"expected matrix of shape ({n_nodes}, {spec.n_items})")
    free, totals = _cache_structure(spec)

    y = np.where(free, np.clip(raw, 0.0, 1.0), 0.0)
    # Rows whose box clip already meets the mass constraint are done; only the
    # rest need the shift search.
    work = np.abs(y.sum(axis=1) - totals) > 1e-13
    if work.any():
        y[work] = _capped_bisect(raw[work], free[work], totals[work])
    n_free = free.sum(axis=1)
    empty = totals <= 0.0
    full = totals >= n_free
    y[empty] = 0.0
    y = np.where(full[:, None] & free, 1.0, y)
    y = np.where(free, y, 0.0)
    for v in range(n_nodes):
        y[v, list(spec.pinned[v])] = 1.0
    return y


def power_violation(scenario: Scenario, svec: np.ndarray,
                    tol: float = 1e-7) -> str | None:
    """First violated power constraint, or None when feasible."""
    spec = power_spec(scenario)
    if np.min(svec, initial=0.0) < -tol:
        e = int(np.argmin(svec))
        return f"negative power {svec[e]:.3g} on edge index {e}"
    for budget, idxs in zip(spec.budgets, spec.groups):
        total = float(svec[list(idxs)].sum())
        if total > budget * (1.0 + 1e-12) + tol:
            return f"power budget exceeded: {total:.6g} > {budget:.6g}"
    return None


def placement_violation(scenario: Scenario, x: np.ndarray,
                        tol: float = 1e-9) -> str | None:
    """First violated binary-placement constraint, or None when feasible."""
    spec = cache_spec(scenario)
    x = np.asarray(x, dtype=float)
    if x.shape != (len(spec.capacities), spec.n_items):
        return f"placement shape {x.shape} does not match scenario"
    if np.abs(x - np.round(x)).max(initial=0.0) > tol:
        return "placement has fractional entries"
    for v in range(len(spec.capacities)):
        if x[v].sum() > spec.capacities[v] + tol:
            return f"node {v}: cached items exceed capacity {spec.capacities[v]}"
        for i in spec.pinned[v]:
            if x[v, i] < 1.0 - tol:
                return f"node {v}: designated source must store item {i}"
    return None


def relaxed_violation(scenario: Scenario, y: np.ndarray,
                      tol: float = 1e-7) -> str | None:
    """First violated box/pin constraint of the relaxed variables, or None.

    The per-node mass equality is checked by `cache_mass_violation`; cost
    evaluation is well defined on the whole box, which single-coordinate
    derivative probes rely on.
    """
    spec = cache_spec(scenario)
    y = np.asarray(y, dtype=float)
    if y.shape != (len(spec.capacities), spec.n_items):
        return f"matrix shape {y.shape} does not match scenario"
    if y.min(initial=0.0) < -tol or y.max(initial=0.0) > 1.0 + tol:
        return "relaxed entries must lie in [0, 1]"
    for v in range(len(spec.capacities)):
        for i in spec.pinned[v]:
            if y[v, i] < 1.0 - tol:
                return f"node {v}: designated source must keep item {i} at 1"
    return None


def cache_mass_violation(scenario: Scenario, y: np.ndarray,
                         tol: float = 1e-7) -> str | None:
    """Check the per-node equality: total relaxed mass equals the capacity."""
    spec = cache_spec(scenario)
    for v, cap in enumerate(spec.capacities):
        total = float(np.asarray(y)[v].sum())
        if abs(total - cap) > tol:
            return f"node {v}: relaxed mass {total:.6g} != capacity {cap}"
    return None
