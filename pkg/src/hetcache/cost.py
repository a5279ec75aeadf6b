"""Objective functions over placements and powers, and their (sub)gradients."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .feasible import placement_violation, power_violation, relaxed_violation
from .radio import (
    DemandIndex,
    PowerAllocation,
    RadioIndex,
    delay_curvature,
    delay_of_sinr,
    delay_slope,
    demand_index,
    radio_index,
    sinr_vector,
)
from .topology import Scenario


@dataclass(frozen=True)
class CachePlacement:
    """Binary node-by-item placement matrix."""

    x: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        x.flags.writeable = False
        object.__setattr__(self, "x", x)


@dataclass(frozen=True)
class RelaxedCache:
    """Fractional node-by-item caching marginals in [0, 1]."""

    y: np.ndarray

    def __post_init__(self):
        y = np.asarray(self.y, dtype=float)
        y.flags.writeable = False
        object.__setattr__(self, "y", y)


@dataclass(frozen=True)
class Subgradient:
    """A member of the caching subdifferential plus the exact power gradient.

    `edges` gives the wireless-link order of `d_s`. Entries of `d_y` at pinned
    coordinates are reported but carry no usable descent direction.
    """

    d_y: np.ndarray
    d_s: np.ndarray
    edges: tuple[tuple[int, int], ...]


def _as_matrix(arg) -> np.ndarray:
    if isinstance(arg, (CachePlacement, RelaxedCache)):
        return arg.x if isinstance(arg, CachePlacement) else arg.y
    return np.asarray(arg, dtype=float)


def _as_svec(scenario: Scenario, S) -> np.ndarray:
    if isinstance(S, PowerAllocation):
        return S.vector(scenario)
    return np.asarray(S, dtype=float)


def hop_delay_vector(ridx: RadioIndex, didx: DemandIndex,
                     svec: np.ndarray) -> np.ndarray:
    """Delay of every request hop: fixed for wired hops, SINR-based otherwise."""
    if ridx.n_edges == 0:
        return didx.hop_fixed.copy()
    delays = delay_of_sinr(sinr_vector(ridx, svec))
    gathered = delays[np.maximum(didx.hop_edge, 0)]
    return np.where(didx.hop_edge >= 0, gathered, didx.hop_fixed)


def _prefix_sums(didx: DemandIndex, y: np.ndarray) -> np.ndarray:
    """Running sum of y over each hop's path prefix (per-depth sweep)."""
    vals = y[didx.hop_new_node, didx.hop_item]
    for sel in didx.fwd_groups:
        vals[sel] += vals[sel - 1]
    return vals


def _survival_weights(didx: DemandIndex, y: np.ndarray) -> np.ndarray:
    """Per-hop probability that no path prefix node holds the item: running
    product of (1 - y) along each path."""
    w = 1.0 - y[didx.hop_new_node, didx.hop_item]
    for sel in didx.fwd_groups:
        w[sel] *= w[sel - 1]
    return w


def _shortfall_weights(didx: DemandIndex, y: np.ndarray) -> np.ndarray:
    """Per-hop weight 1 - min(1, running sum of y) along each path."""
    return 1.0 - np.minimum(1.0, _prefix_sums(didx, y))


def _weighted_total(didx: DemandIndex, hop_delays: np.ndarray,
                    weights: np.ndarray) -> float:
    return float(np.dot(didx.hop_rate * weights, hop_delays))


def exact_cost(scenario: Scenario, X, S) -> float:
    """Expected transmission delay of the binary placement: each hop is paid
    while no earlier path node stores the item."""
    x = _as_matrix(X)
    svec = _as_svec(scenario, S)
    bad = placement_violation(scenario, x) or power_violation(scenario, svec)
    if bad:
        raise ValueError(bad)
    ridx, didx = radio_index(scenario), demand_index(scenario)
    return _weighted_total(didx, hop_delay_vector(ridx, didx, svec),
                           _survival_weights(didx, x))


def multilinear_cost(scenario: Scenario, Y, S) -> float:
    """Expectation of the exact cost under independent per-entry caching
    probabilities; agrees with `exact_cost` on integral matrices."""
    y = _as_matrix(Y)
    svec = _as_svec(scenario, S)
    bad = relaxed_violation(scenario, y) or power_violation(scenario, svec)
    if bad:
        raise ValueError(bad)
    ridx, didx = radio_index(scenario), demand_index(scenario)
    return _weighted_total(didx, hop_delay_vector(ridx, didx, svec),
                           _survival_weights(didx, y))


def relaxed_cost(scenario: Scenario, Y, S) -> float:
    """Convex-in-caching surrogate: hop weights are 1 - min(1, prefix mass)."""
    y = _as_matrix(Y)
    svec = _as_svec(scenario, S)
    bad = relaxed_violation(scenario, y) or power_violation(scenario, svec)
    if bad:
        raise ValueError(bad)
    ridx, didx = radio_index(scenario), demand_index(scenario)
    return _weighted_total(didx, hop_delay_vector(ridx, didx, svec),
                           _shortfall_weights(didx, y))


def upper_bound_cost(scenario: Scenario, S) -> float:
    """Delay when every request is served end-to-end by its designated source."""
    svec = _as_svec(scenario, S)
    bad = power_violation(scenario, svec)
    if bad:
        raise ValueError(bad)
    ridx, didx = radio_index(scenario), demand_index(scenario)
    return _weighted_total(didx, hop_delay_vector(ridx, didx, svec),
                           np.ones(len(didx.hop_req)))


def _relaxed_value_arrays(ridx, didx, y, svec) -> float:
    """Relaxed cost without feasibility checks, for solver inner loops."""
    return _weighted_total(didx, hop_delay_vector(ridx, didx, svec),
                           _shortfall_weights(didx, y))


def _subgradient_arrays(scenario: Scenario, ridx: RadioIndex, didx: DemandIndex,
                        y: np.ndarray, svec: np.ndarray) -> Subgradient:
    hop_d = hop_delay_vector(ridx, didx, svec)
    cums = _prefix_sums(didx, y)
    g = 1.0 - np.minimum(1.0, cums)

    # Caching block: each hop with prefix mass < 1 pushes -rate*delay onto every
    # prefix node; at exactly 1 the zero element of the subdifferential is used.
    suffix = np.where(cums < 1.0, hop_d, 0.0) * didx.hop_rate
    for sel in didx.rev_groups:
        suffix[sel] += suffix[sel + 1]
    d_y = np.zeros(scenario.n_nodes * scenario.catalog_size)
    np.add.at(d_y, didx.hop_new_node * scenario.catalog_size + didx.hop_item,
              -suffix)
    d_y = d_y.reshape(scenario.n_nodes, scenario.catalog_size)

    # Power block: with per-link weight W_e, the chain rule over SINR gives
    #   d_s = G*(c + c*x) - cross^T (c*x),  c_e = W_e f'(x_e) / denom_e.
    w = np.zeros(ridx.n_edges)
    wireless = didx.hop_edge >= 0
    np.add.at(w, didx.hop_edge[wireless],
              (didx.hop_rate * g)[wireless])
    x = sinr_vector(ridx, svec)
    if np.any((w > 0.0) & (x <= 0.0)):
        e = int(np.argmax((w > 0.0) & (x <= 0.0)))
        raise ValueError(f"active link {ridx.keys[e]} has zero SINR")
    denom = ridx.noise + ridx.cross @ svec - ridx.gains * svec
    c = np.zeros(ridx.n_edges)
    mask = w > 0.0
    c[mask] = w[mask] * delay_slope(x[mask]) / denom[mask]
    q = c * x
    d_s = ridx.gains * (c + q) - ridx.cross.T @ q
    return Subgradient(d_y=d_y, d_s=d_s, edges=ridx.keys)


def subgradient(scenario: Scenario, Y, S) -> Subgradient:
    """Subgradient of the relaxed cost in the caching block and its exact
    gradient in the power block."""
    y = _as_matrix(Y)
    svec = _as_svec(scenario, S)
    bad = relaxed_violation(scenario, y) or power_violation(scenario, svec)
    if bad:
        raise ValueError(bad)
    return _subgradient_arrays(scenario, radio_index(scenario),
                               demand_index(scenario), y, svec)


def subgradient_bounds(scenario: Scenario, Y, S,
                       band: float = 1e-9) -> tuple[np.ndarray, np.ndarray]:
    """Per-coordinate bounds of the caching subdifferential.

    Hops whose prefix mass is within `band` of the saturation point contribute
    anywhere between their full weight and nothing, so each coordinate's
    attainable subgradient values form an interval [lo, hi]; off the kinks
    both bounds coincide with the single subgradient value.
    """
    y = _as_matrix(Y)
    svec = _as_svec(scenario, S)
    ridx, didx = radio_index(scenario), demand_index(scenario)
    hop_d = hop_delay_vector(ridx, didx, svec)
    cums = _prefix_sums(didx, y)

    def accumulate(active):
        suffix = np.where(active, hop_d, 0.0) * didx.hop_rate
        for sel in didx.rev_groups:
            suffix[sel] += suffix[sel + 1]
        flat = np.zeros(scenario.n_nodes * scenario.catalog_size)
        np.add.at(flat, didx.hop_new_node * scenario.catalog_size
                  + didx.hop_item, -suffix)
        return flat.reshape(scenario.n_nodes, scenario.catalog_size)

    hi = accumulate(cums < 1.0 - band)
    lo = accumulate(cums < 1.0 + band)
    return lo, hi


@dataclass(frozen=True)
class LogPowerConvexityReport:
    """Grid evaluation of the log-power convexity test for the delay curve."""

    xs: np.ndarray
    holds: np.ndarray
    margins: np.ndarray
    crossover: float | None
    single_crossing: bool


def check_logpower_convexity(xs, rel_tol: float = 0.05) -> LogPowerConvexityReport:
    """Evaluate, at each SINR sample, whether the delay curve passes the
    composition test that makes it convex in log powers:

        2 f'(x)^2 x / f(x) - f'(x) <= f''(x) x   (within rel_tol of the RHS).

    For the exact delay curve the two sides approach each other from the wrong
    side as x grows (the gap decays like 1/x relative), so the test is applied
    with a relative tolerance and the empirical crossover is reported.
    """
    xs = np.asarray(xs, dtype=float)
    if np.any(xs <= 0.0):
        raise ValueError("grid must be positive")
    f = delay_of_sinr(xs)
    fp = delay_slope(xs)
    fpp = delay_curvature(xs)
    lhs = 2.0 * fp * fp * xs / f - fp
    rhs = fpp * xs
    margins = rhs - lhs
    holds = lhs <= rhs + rel_tol * np.abs(rhs)
    if holds.all():
        crossover = float(xs[0])
    elif not holds.any():
        crossover = None
    else:
        last_fail = int(np.nonzero(~holds)[0][-1])
        crossover = float(xs[last_fail + 1]) if last_fail + 1 < len(xs) else None
    flips = int(np.count_nonzero(holds[1:] != holds[:-1]))
    return LogPowerConvexityReport(xs=xs, holds=holds, margins=margins,
                                   crossover=crossover,
                                   single_crossing=flips <= 1)
