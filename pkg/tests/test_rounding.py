import numpy as np

from hetcache import multilinear_cost, round_cache
from hetcache.feasible import placement_violation
from hetcache.solvers import round_cache_trace
from hetcache.topology import Edge, NodeKind, Request

from helpers import (build_scenario, micro_scenario, node,
                     random_feasible_cache, random_feasible_power)


def test_integral_input_unchanged():
    rng = np.random.default_rng(0)
    scenario = micro_scenario(0, n_users=3)
    svec = random_feasible_power(scenario, rng)
    y = np.round(random_feasible_cache(scenario, rng))
    # rounding a 0/1 matrix is a no-op up to the snap
    placement, steps = round_cache_trace(scenario, y, svec)
    assert len(steps) == 1
    assert np.array_equal(placement.x, y)


def test_path_relevant_item_wins():
    nodes = [
        node(0, NodeKind.USER, (0.0, 0.0)),
        node(1, NodeKind.SMALL_CELL, (1.0, 0.0), cap=1, budget=2.0),
        node(2, NodeKind.MACRO_CELL, (2.0, 0.0), cap=2, budget=2.0),
    ]
    edges = [Edge(1, 0, 1.0), Edge(2, 1, 1.0, wired=True, wired_delay=0.5)]
    scenario = build_scenario(nodes, edges, [Request(0, (0, 1, 2), 1.0)],
                              {0: {2}, 1: {2}}, 2)
    y = np.array([[0.0, 0.0], [0.5, 0.5], [1.0, 1.0]])
    svec = np.array([1.0])
    placement = round_cache(scenario, y, svec)
    assert placement.x[1, 0] == 1.0
    assert placement.x[1, 1] == 0.0


def test_rounding_never_increases_multilinear_cost():
    rng = np.random.default_rng(1)
    for seed in range(6):
        scenario = micro_scenario(seed, n_users=3, catalog_size=4, c_mc=2)
        for _ in range(20):
            y = random_feasible_cache(scenario, rng)
            svec = random_feasible_power(scenario, rng)
            placement, steps = round_cache_trace(scenario, y, svec)
            assert placement_violation(scenario, placement.x) is None
            counts = [c for c, _ in steps]
            costs = [c for _, c in steps]
            assert all(b < a for a, b in zip(counts, counts[1:]))
            assert all(b <= a + 1e-9 for a, b in zip(costs, costs[1:]))
            assert len(steps) - 1 <= scenario.n_nodes * scenario.catalog_size
            assert multilinear_cost(scenario, placement.x, svec) \
                <= multilinear_cost(scenario, y, svec) + 1e-9


def test_rounding_respects_capacity_exactly():
    rng = np.random.default_rng(2)
    scenario = micro_scenario(1, n_users=2, catalog_size=4, c_sc=2, c_mc=3)
    y = random_feasible_cache(scenario, rng)
    svec = random_feasible_power(scenario, rng)
    placement = round_cache(scenario, y, svec)
    for v, nd in enumerate(scenario.nodes):
        assert placement.x[v].sum() <= nd.cache_capacity + 1e-12
