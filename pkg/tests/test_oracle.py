import numpy as np
import pytest

from hetcache import brute_force_opt, exact_cost, fd_gradient
from hetcache.topology import Edge, NodeKind, Request

from helpers import (build_scenario, micro_scenario, node, pin_mask,
                     random_feasible_cache, random_feasible_power)


def test_zero_cost_placement_found():
    nodes = [
        node(0, NodeKind.USER, (0.0, 0.0), cap=1),
        node(1, NodeKind.SMALL_CELL, (1.0, 0.0), cap=1, budget=2.0),
    ]
    scenario = build_scenario(nodes, [Edge(1, 0, 1.0)],
                              [Request(0, (0, 1), 1.0)], {0: {1}}, 1)
    result = brute_force_opt(scenario, 4)
    assert result.cost == 0.0
    assert result.placement.x[0, 0] == 1.0


def test_rate_weighted_item_wins_middle_cache():
    nodes = [
        node(0, NodeKind.USER, (0.0, 0.0)),
        node(1, NodeKind.SMALL_CELL, (1.0, 0.0), cap=1, budget=2.0),
        node(2, NodeKind.MACRO_CELL, (2.0, 0.0), cap=2, budget=2.0),
    ]
    edges = [Edge(1, 0, 1.0, wired=True, wired_delay=1.0),
             Edge(2, 1, 1.0, wired=True, wired_delay=0.5)]
    requests = [Request(0, (0, 1, 2), 2.0), Request(1, (0, 1, 2), 1.0)]
    scenario = build_scenario(nodes, edges, requests, {0: {2}, 1: {2}}, 2)
    result = brute_force_opt(scenario, 3)
    assert result.placement.x[1, 0] == 1.0  # rate-2 item evicts the rate-1 item
    assert result.placement.x[1, 1] == 0.0
    # cost: both items pay hop 1; item 1 also pays the 0.5 backhaul hop
    assert result.cost == pytest.approx(2.0 * 1.0 + 1.0 * 1.0 + 1.0 * 0.5)


def test_oracle_invariant_under_relabeling():
    scenario = micro_scenario(2, n_users=2, catalog_size=2, c_sc=1, c_mc=1)
    perm = [1, 0, 2, 3, 4]  # swap the two users
    inverse = np.argsort(perm)
    nodes = []
    for new_id, old_id in enumerate(perm):
        old = scenario.nodes[old_id]
        nodes.append(node(new_id, old.kind, old.position, old.cache_capacity,
                          old.power_budget, old.noise_power))
    edges = [Edge(int(inverse[e.tx]), int(inverse[e.rx]), e.gain, e.wired,
                  e.wired_delay) for e in scenario.edges]
    requests = [Request(r.item, tuple(int(inverse[v]) for v in r.path), r.rate)
                for r in scenario.requests]
    sources = {i: {int(inverse[v]) for v in vs}
               for i, vs in scenario.designated_sources.items()}
    relabeled = build_scenario(nodes, edges, requests, sources,
                               scenario.catalog_size, scenario.pathloss_exponent)
    a = brute_force_opt(scenario, 4)
    b = brute_force_opt(relabeled, 4)
    assert a.cost == pytest.approx(b.cost, rel=1e-12)


def test_oracle_grid_refinement_never_worse():
    scenario = micro_scenario(4, n_users=2, catalog_size=2, c_sc=1, c_mc=1)
    coarse = brute_force_opt(scenario, 2)
    fine = brute_force_opt(scenario, 4)
    assert fine.cost <= coarse.cost + 1e-12


def test_oracle_result_is_feasible_and_reproducible():
    scenario = micro_scenario(6, n_users=2, catalog_size=2, c_sc=1, c_mc=1)
    a = brute_force_opt(scenario, 4)
    b = brute_force_opt(scenario, 4)
    assert a.cost == b.cost
    assert np.array_equal(a.placement.x, b.placement.x)
    assert a.cost == pytest.approx(
        exact_cost(scenario, a.placement, a.powers.vector(scenario)), rel=1e-12)


def test_oracle_size_guard():
    scenario = micro_scenario(0, n_users=3, n_sc=2, catalog_size=6,
                              c_sc=2, c_mc=3)
    with pytest.raises(ValueError, match="too large"):
        brute_force_opt(scenario, 40)


def test_fd_gradient_guards():
    rng = np.random.default_rng(0)
    scenario = micro_scenario(1)
    pins = pin_mask(scenario)
    y = random_feasible_cache(scenario, rng)
    svec = random_feasible_power(scenario, rng, interior=0.7)

    kinked = np.where(pins, 1.0, 0.0)
    req = scenario.requests[0]
    kinked[req.path[0], req.item] = 1.0  # prefix mass exactly 1
    with pytest.raises(ValueError, match="kink"):
        fd_gradient(scenario, kinked, svec)

    with pytest.raises(ValueError, match="headroom"):
        fd_gradient(scenario, np.where(pins, 1.0, 0.05),
                    random_feasible_power(scenario, rng, interior=1.0))


def test_fd_gradient_nan_on_pins_zero_on_saturated():
    rng = np.random.default_rng(1)
    scenario = micro_scenario(1)
    pins = pin_mask(scenario)
    y = np.where(pins, 1.0, 0.03)
    req = scenario.requests[0]
    # saturate the first request's prefixes well past the kink
    y[req.path[0], req.item] = 0.9
    y[req.path[1], req.item] = 0.9
    svec = random_feasible_power(scenario, rng, interior=0.7)
    fd = fd_gradient(scenario, y, svec)
    assert np.all(np.isnan(fd.d_y[pins]))
    assert fd.d_y[req.path[1], req.item] == pytest.approx(0.0, abs=1e-8)
