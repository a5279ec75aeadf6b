"""Shared fixtures: hand-built scenarios, micro generators, feasible samplers."""

from __future__ import annotations

import numpy as np

from hetcache import GenParams, generate_scenario
from hetcache.feasible import cache_spec, power_spec, project_cache, project_power
from hetcache.topology import Edge, Node, NodeKind, Request, Scenario

# Far enough apart that position-derived cross gains are negligible against
# the explicit edge gains used in hand-built cases.
FAR = 1e9


def build_scenario(nodes, edges, requests, sources, catalog_size,
                   pathloss=3.0) -> Scenario:
    return Scenario(
        nodes=tuple(nodes),
        edges=tuple(edges),
        catalog_size=catalog_size,
        requests=tuple(requests),
        designated_sources={i: frozenset(v) for i, v in sources.items()},
        pathloss_exponent=pathloss,
    )


def node(i, kind, pos, cap=0, budget=1.0, noise=1.0) -> Node:
    return Node(i, kind, pos, cap, budget, noise)


def isolated_link_scenario(gain=1.0, noise=1.0, budget=1.0) -> Scenario:
    """One user served over a single wireless hop from a designated source."""
    nodes = [
        node(0, NodeKind.USER, (0.0, 0.0), noise=noise),
        node(1, NodeKind.SMALL_CELL, (1.0, 0.0), cap=1, budget=budget, noise=noise),
    ]
    edges = [Edge(1, 0, gain)]
    requests = [Request(0, (0, 1), 1.0)]
    return build_scenario(nodes, edges, requests, {0: {1}}, 1)


def two_hop_scenario(d1_wired=None, d2_wired=None, catalog=2) -> Scenario:
    """user <- mid <- root chain; hops can be pinned to fixed wired delays."""
    nodes = [
        node(0, NodeKind.USER, (0.0, 0.0)),
        node(1, NodeKind.SMALL_CELL, (1.0, 0.0), cap=0, budget=2.0),
        node(2, NodeKind.MACRO_CELL, (FAR, 0.0), cap=catalog, budget=2.0),
    ]
    if d1_wired is None:
        e1 = Edge(1, 0, 1.0)
    else:
        e1 = Edge(1, 0, 1.0, wired=True, wired_delay=d1_wired)
    if d2_wired is None:
        e2 = Edge(2, 1, 1.0)
    else:
        e2 = Edge(2, 1, 1.0, wired=True, wired_delay=d2_wired)
    requests = [Request(0, (0, 1, 2), 1.0)]
    sources = {i: {2} for i in range(catalog)}
    return build_scenario(nodes, edges=[e1, e2], requests=requests,
                          sources=sources, catalog_size=catalog)


def micro_params(**overrides) -> GenParams:
    """Small geometry so SINR values sit in a numerically friendly range."""
    base = dict(n_users=2, n_sc=1, catalog_size=3, zipf_gamma=0.4,
                c_sc=1, c_mc=2, power_budget=6.0, pathloss_exp=2.5,
                noise=1.0, mc_radius=3.0)
    base.update(overrides)
    return GenParams(**base)


def micro_scenario(seed=0, **overrides):
    return generate_scenario(seed, micro_params(**overrides))


def random_feasible_cache(scenario, rng) -> np.ndarray:
    spec = cache_spec(scenario)
    raw = rng.uniform(0.0, 1.0, (scenario.n_nodes, scenario.catalog_size))
    return project_cache(raw, spec)


def random_feasible_power(scenario, rng, lo=0.05, interior=1.0) -> np.ndarray:
    """Feasible powers, strictly positive, optionally pulled off the budget."""
    spec = power_spec(scenario)
    n_edges = spec.n_edges
    raw = np.zeros(n_edges)
    for budget, ids in zip(spec.budgets, spec.groups):
        ids = list(ids)
        share = rng.dirichlet(np.ones(len(ids))) * budget
        raw[ids] = np.maximum(share * interior, lo * budget / len(ids))
    return project_power(raw, spec)


def pin_mask(scenario) -> np.ndarray:
    spec = cache_spec(scenario)
    mask = np.zeros((scenario.n_nodes, scenario.catalog_size), dtype=bool)
    for v in range(scenario.n_nodes):
        mask[v, list(spec.pinned[v])] = True
    return mask
