"""Shared solver plumbing: configuration, reports, initial points."""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from ..cost import CachePlacement
from ..feasible import cache_spec, project_cache
from ..radio import PowerAllocation, radio_index
from ..topology import Scenario


@dataclass(frozen=True)
class SubSolverConfig:
    """Settings for the projected subgradient solver.

    epsilon/delta0 of None are resolved at run time relative to the objective
    at the initial point. `stall_iters` is the number of consecutive
    iterations with best-objective improvement <= epsilon before stopping;
    oscillating subgradient steps make a single flat iteration meaningless.
    """

    epsilon: float | None = None
    max_iters: int = 4000
    delta0: float | None = None
    w_s: float = 1.0
    w_y: float = 1.0
    seed: int = 0
    stall_iters: int = 50
    keep_iterates: bool = False

    def resolve(self, initial_objective: float) -> tuple[float, float]:
        eps = self.epsilon if self.epsilon is not None \
            else max(1e-7 * max(initial_objective, 1.0), 1e-12)
        delta0 = self.delta0 if self.delta0 is not None \
            else max(5e-2 * initial_objective, 1e-12)
        if eps <= 0 or delta0 <= 0:
            raise ValueError("epsilon and delta0 must be positive")
        return eps, delta0


@dataclass(frozen=True)
class TraceRow:
    iteration: int
    objective: float
    best: float
    step_y: float
    step_s: float
    elapsed: float
    phase: str = "joint"


@dataclass
class SolveReport:
    """Outcome of one solver run: iterate trace, final point, rounded placement."""

    method: str
    trace: list[TraceRow]
    final_y: np.ndarray
    final_s: np.ndarray
    rounded_x: CachePlacement
    final_relaxed_cost: float
    final_exact_cost: float
    kkt: "object" = None
    wall_time: float = 0.0
    iterations: int = 0
    iterates: list | None = None
    edge_keys: tuple = ()

    def final_allocation(self, scenario: Scenario) -> PowerAllocation:
        return PowerAllocation.from_vector(scenario, self.final_s)

    def to_json(self) -> str:
        doc = {
            "method": self.method,
            "iterations": self.iterations,
            "wall_time": self.wall_time,
            "final_relaxed_cost": self.final_relaxed_cost,
            "final_exact_cost": self.final_exact_cost,
            "final_y": np.asarray(self.final_y).tolist(),
            "final_s": {f"{k[0]},{k[1]}": float(v)
                        for k, v in zip(self.edge_keys, self.final_s)},
            "rounded_x": np.asarray(self.rounded_x.x).astype(int).tolist(),
            "kkt": None if self.kkt is None else {
                "cache_residual": self.kkt.cache_residual,
                "power_residual": self.kkt.power_residual,
                "complementary_slackness": self.kkt.complementary_slackness,
                "directional_residual": self.kkt.directional_residual,
            },
            "trace": [
                {
                    "iteration": row.iteration,
                    "objective": row.objective,
                    "best": row.best,
                    "step_y": row.step_y,
                    "step_s": row.step_s,
                    "elapsed": row.elapsed,
                    "phase": row.phase,
                }
                for row in self.trace
            ],
        }
        return json.dumps(doc, indent=2)


def default_init(scenario: Scenario) -> tuple[np.ndarray, np.ndarray]:
    """Shared initial point: uniform cache fill (nearest feasible point to the
    all-zeros matrix) and an even power split per transmitter."""
    cspec = cache_spec(scenario)
    y0 = project_cache(np.zeros((scenario.n_nodes, scenario.catalog_size)), cspec)
    s0 = PowerAllocation.uniform(scenario).vector(scenario)
    return y0, s0


def checked_init(scenario: Scenario, init) -> tuple[np.ndarray, np.ndarray]:
    """Copy a caller-provided initial point, insisting it is feasible."""
    from ..feasible import power_violation, relaxed_violation

    if init is None:
        return default_init(scenario)
    y = np.array(np.asarray(init[0], dtype=float), copy=True)
    svec = np.array(np.asarray(init[1], dtype=float), copy=True)
    bad = relaxed_violation(scenario, y) or power_violation(scenario, svec)
    if bad:
        raise ValueError(f"infeasible initial point: {bad}")
    return y, svec


def free_cache_mask(scenario: Scenario) -> np.ndarray:
    """Coordinates of the relaxed matrix that carry a usable descent direction:
    pinned entries and rows whose mass constraint fixes every entry are
    excluded (the projection restores them regardless)."""
    cspec = cache_spec(scenario)
    mask = np.ones((scenario.n_nodes, scenario.catalog_size), dtype=bool)
    for v in range(scenario.n_nodes):
        pins = list(cspec.pinned[v])
        mask[v, pins] = False
        b = cspec.capacities[v] - len(pins)
        n_free = scenario.catalog_size - len(pins)
        if b <= 0 or b >= n_free:
            mask[v, :] = False
    return mask


def active_power_floor(scenario: Scenario, svec: np.ndarray,
                       weights: np.ndarray) -> np.ndarray:
    """Keep a vanishing power on links that still carry demand weight so the
    objective and its gradient stay finite; traded against the budget within
    each transmitter block."""
    ridx = radio_index(scenario)
    out = np.array(svec, copy=True)
    for v, ids in ridx.tx_groups.items():
        budget = scenario.nodes[v].power_budget
        # Deep enough to be negligible in the objective, shallow enough that
        # the delay on a parked link stays far from the saturation sentinel
        # (where the analytic gradient no longer matches the clipped value).
        floor = 1e-6 * budget / len(ids)
        need = (weights[ids] > 0.0) & (out[ids] < floor)
        if not need.any():
            continue
        block = out[ids]
        block = np.where(need, floor, block)
        excess = block.sum() - budget
        if excess > 0:
            donors = block > floor
            if donors.any():
                block[donors] -= excess / donors.sum()
                block = np.maximum(block, 0.0)
        out[ids] = block
    return out


def demand_edge_weights(scenario: Scenario) -> np.ndarray:
    """Total request rate carried per wireless edge, ignoring caching."""
    from ..radio import demand_index
    ridx = radio_index(scenario)
    didx = demand_index(scenario)
    w = np.zeros(ridx.n_edges)
    wireless = didx.hop_edge >= 0
    np.add.at(w, didx.hop_edge[wireless], didx.hop_rate[wireless])
    return w
