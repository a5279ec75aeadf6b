"""Per-link SINR and transmission delay under mutually interfering transmissions."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .topology import Scenario

LN2 = math.log(2.0)

# Saturating stand-in for the infinite delay of a silent link. Solver arithmetic
# must stay finite, so 1/log2(1+0) is represented by this sentinel.
INF_DELAY = 1e18


@dataclass(frozen=True)
class PowerAllocation:
    """Transmit powers on wireless links, keyed by (tx, rx)."""

    s: dict[tuple[int, int], float]

    def vector(self, scenario: Scenario) -> np.ndarray:
        idx = radio_index(scenario)
        missing = set(self.s) - set(idx.keys)
        if missing:
            raise ValueError(f"unknown wireless edges in allocation: {sorted(missing)}")
        return np.array([self.s.get(k, 0.0) for k in idx.keys], dtype=float)

    @staticmethod
    def from_vector(scenario: Scenario, vec: np.ndarray) -> "PowerAllocation":
        idx = radio_index(scenario)
        if len(vec) != len(idx.keys):
            raise ValueError("power vector length does not match wireless edge count")
        return PowerAllocation({k: float(v) for k, v in zip(idx.keys, vec)})

    @staticmethod
    def uniform(scenario: Scenario) -> "PowerAllocation":
        """Every transmitter splits its budget evenly over its outgoing links."""
        idx = radio_index(scenario)
        vec = np.zeros(len(idx.keys))
        for v, edge_ids in idx.tx_groups.items():
            vec[edge_ids] = scenario.nodes[v].power_budget / len(edge_ids)
        return PowerAllocation.from_vector(scenario, vec)


@dataclass(frozen=True, eq=False)
class RadioIndex:
    """Precomputed wireless-link arrays for one (nodes, edges) pair.

    cross[e, e2] is the gain from the transmitter of link e2 to the receiver of
    link e, so the full interference at every receiver is `cross @ s`.
    """

    keys: tuple[tuple[int, int], ...]
    key_to_idx: dict[tuple[int, int], int]
    gains: np.ndarray
    noise: np.ndarray
    tx_nodes: np.ndarray
    rx_nodes: np.ndarray
    cross: np.ndarray
    tx_groups: dict[int, np.ndarray]

    @property
    def n_edges(self) -> int:
        return len(self.keys)


@dataclass(frozen=True, eq=False)
class DemandIndex:
    """Hop-level view of all requests: one row per (request, hop).

    Hops of one request are contiguous; `hop_new_node` is the path node that
    joins the prefix at that hop, so prefix sums/products reduce to short
    per-depth sweeps (`fwd_groups`) and suffix sums to reverse sweeps
    (`rev_groups`).
    """

    n_requests: int
    rates: np.ndarray
    hop_req: np.ndarray
    hop_edge: np.ndarray       # wireless edge index or -1 for wired hops
    hop_fixed: np.ndarray      # wired delay where hop_edge < 0, else 0
    hop_rate: np.ndarray
    hop_item: np.ndarray
    hop_new_node: np.ndarray   # path node revealed at this hop
    fwd_groups: tuple          # hop index arrays by depth > 0
    rev_groups: tuple          # hop index arrays with a same-request successor
    req_rows: tuple            # (start, end, path_nodes, item, rate) per request


_RADIO_CACHE: dict[tuple[int, int], tuple] = {}
_DEMAND_CACHE: dict[tuple[int, int], tuple] = {}
_CACHE_LIMIT = 128


def _memo(cache, key, anchor, build):
    hit = cache.get(key)
    if hit is not None:
        return hit[1]
    value = build()
    if len(cache) >= _CACHE_LIMIT:
        cache.pop(next(iter(cache)))
    cache[key] = (anchor, value)
    return value


def radio_index(scenario: Scenario) -> RadioIndex:
    key = (id(scenario.nodes), id(scenario.edges))
    return _memo(_RADIO_CACHE, key, (scenario.nodes, scenario.edges),
                 lambda: _build_radio_index(scenario))


def _build_radio_index(scenario: Scenario) -> RadioIndex:
    wireless = [e for e in scenario.edges if not e.wired]
    keys = tuple(e.key for e in wireless)
    key_to_idx = {k: i for i, k in enumerate(keys)}
    gains = np.array([e.gain for e in wireless], dtype=float)
    tx_nodes = np.array([e.tx for e in wireless], dtype=int)
    rx_nodes = np.array([e.rx for e in wireless], dtype=int)
    noise = np.array([scenario.nodes[e.rx].noise_power for e in wireless], dtype=float)
    m = len(wireless)
    cross = np.empty((m, m), dtype=float)
    for i in range(m):
        for j in range(m):
            cross[i, j] = scenario.gain(int(tx_nodes[j]), int(rx_nodes[i]))
    groups: dict[int, np.ndarray] = {}
    for i, v in enumerate(tx_nodes):
        groups.setdefault(int(v), []).append(i)
    groups = {v: np.array(ids, dtype=int) for v, ids in groups.items()}
    return RadioIndex(keys, key_to_idx, gains, noise, tx_nodes, rx_nodes, cross, groups)


def demand_index(scenario: Scenario) -> DemandIndex:
    key = (id(scenario.requests), id(scenario.edges))
    return _memo(_DEMAND_CACHE, key, (scenario.requests, scenario.edges),
                 lambda: _build_demand_index(scenario))


def _build_demand_index(scenario: Scenario) -> DemandIndex:
    ridx = radio_index(scenario)
    emap = scenario.edge_map()
    hop_req, hop_edge, hop_fixed, hop_rate, hop_item = [], [], [], [], []
    hop_new_node, hop_depth, hop_has_next = [], [], []
    req_rows = []
    for r_id, req in enumerate(scenario.requests):
        start = len(hop_req)
        path = np.array(req.path, dtype=int)
        n_hops = len(req.path) - 1
        for k in range(n_hops):
            key = (req.path[k + 1], req.path[k])
            edge = emap.get(key)
            if edge is None:
                raise ValueError(f"request {r_id}: missing response edge {key}")
            hop_req.append(r_id)
            if edge.wired:
                hop_edge.append(-1)
                hop_fixed.append(edge.wired_delay)
            else:
                hop_edge.append(ridx.key_to_idx[key])
                hop_fixed.append(0.0)
            hop_rate.append(req.rate)
            hop_item.append(req.item)
            hop_new_node.append(req.path[k])
            hop_depth.append(k)
            hop_has_next.append(k + 1 < n_hops)
        req_rows.append((start, len(hop_req), path, req.item, req.rate))
    depth = np.array(hop_depth, dtype=int)
    has_next = np.array(hop_has_next, dtype=bool)
    max_depth = int(depth.max(initial=0))
    fwd = tuple(np.nonzero(depth == d)[0] for d in range(1, max_depth + 1))
    rev = tuple(np.nonzero((depth == d) & has_next)[0]
                for d in reversed(range(max_depth + 1)))
    return DemandIndex(
        n_requests=len(scenario.requests),
        rates=np.array([r.rate for r in scenario.requests], dtype=float),
        hop_req=np.array(hop_req, dtype=int),
        hop_edge=np.array(hop_edge, dtype=int),
        hop_fixed=np.array(hop_fixed, dtype=float),
        hop_rate=np.array(hop_rate, dtype=float),
        hop_item=np.array(hop_item, dtype=int),
        hop_new_node=np.array(hop_new_node, dtype=int),
        fwd_groups=fwd,
        rev_groups=rev,
        req_rows=tuple(req_rows),
    )


def sinr_vector(ridx: RadioIndex, svec: np.ndarray) -> np.ndarray:
    """SINR on every wireless link: own received power over noise plus all other
    received power (other transmitters' totals and the same transmitter's other
    links)."""
    denom = ridx.noise + ridx.cross @ svec - ridx.gains * svec
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(svec > 0.0, ridx.gains * svec / denom, 0.0)
    return out


def delay_of_sinr(x):
    """Channel uses per bit at a given SINR: 1/log2(1+x), saturating at x=0."""
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore"):
        out = np.where(x > 0.0, LN2 / np.log1p(np.maximum(x, 0.0)), INF_DELAY)
    out = np.minimum(out, INF_DELAY)
    return out if out.ndim else float(out)


def delay_slope(x):
    """First derivative of the delay curve with respect to SINR (negative)."""
    x = np.asarray(x, dtype=float)
    l = np.log1p(x)
    out = -LN2 / ((1.0 + x) * l * l)
    return out if out.ndim else float(out)


def delay_curvature(x):
    """Second derivative of the delay curve with respect to SINR (positive)."""
    x = np.asarray(x, dtype=float)
    l = np.log1p(x)
    out = LN2 * (l + 2.0) / ((1.0 + x) ** 2 * l ** 3)
    return out if out.ndim else float(out)


def _edge_index(scenario: Scenario, edge: tuple[int, int]) -> int:
    ridx = radio_index(scenario)
    idx = ridx.key_to_idx.get(tuple(edge))
    if idx is None:
        raise ValueError(f"unknown wireless edge {tuple(edge)}")
    return idx


def sinr(scenario: Scenario, allocation: PowerAllocation, edge: tuple[int, int]) -> float:
    """SINR on one wireless link under the given allocation."""
    ridx = radio_index(scenario)
    idx = _edge_index(scenario, edge)
    svec = allocation.vector(scenario)
    return float(sinr_vector(ridx, svec)[idx])


def link_delay(scenario: Scenario, allocation: PowerAllocation,
               edge: tuple[int, int]) -> float:
    """Transmission delay of one link: fixed for wired, 1/log2(1+SINR) otherwise."""
    e = scenario.edge_map().get(tuple(edge))
    if e is None:
        raise ValueError(f"unknown edge {tuple(edge)}")
    if e.wired:
        return e.wired_delay
    return float(delay_of_sinr(sinr(scenario, allocation, edge)))
