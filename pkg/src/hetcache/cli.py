"""Command line front end: scenario generation, runs, sweeps, traces."""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, fields

import numpy as np

from .baselines import POLICIES, SlottedSimConfig, run_baseline
from .oracle import brute_force_opt
from .solvers import SubSolverConfig, default_init, solve_alt, solve_sub
from .topology import (GenParams, Scenario, generate_scenario, scenario_from_json,
                       scenario_to_json, validate)

METHODS = ("SUB", "ALT", "POLRU", "POLFU", "POFIFO")
_POLICY_OF = {"POLRU": "lru", "POLFU": "lfu", "POFIFO": "fifo"}


@dataclass
class SweepResult:
    """Tabular (parameter, method, seed, delay) records plus timing columns."""

    parameter: str
    rows: list[dict]

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow([self.parameter, "method", "seed", "delay", "wall_time"])
        for row in self.rows:
            writer.writerow([row[self.parameter], row["method"], row["seed"],
                             repr(row["delay"]), f"{row['wall_time']:.3f}"])
        return buf.getvalue()


def _solver_config(args) -> SubSolverConfig:
    return SubSolverConfig(
        epsilon=args.epsilon,
        max_iters=args.max_iters,
        delta0=args.delta0,
        seed=getattr(args, "seed", 0) or 0,
    )


def run_method(scenario: Scenario, method: str,
               config: SubSolverConfig | None = None,
               sim: SlottedSimConfig | None = None) -> float:
    """Final exact delay of one method on one scenario."""
    method = method.upper()
    if method == "SUB":
        return solve_sub(scenario, config or SubSolverConfig()).final_exact_cost
    if method == "ALT":
        return solve_alt(scenario, config or SubSolverConfig()).final_exact_cost
    if method in _POLICY_OF:
        base = sim or SlottedSimConfig()
        cfg = SlottedSimConfig(policy=_POLICY_OF[method], n_slots=base.n_slots,
                               warmup_slots=base.warmup_slots, seed=base.seed)
        return run_baseline(scenario, cfg).mean_delay
    raise ValueError(f"unknown method {method!r}; expected one of {METHODS}")


def _sweep_cell(cell):
    kind, value, method, seed, params_dict, solver_kw, sim_kw = cell
    params = GenParams(**params_dict)
    scenario = generate_scenario(seed, params)
    t0 = time.perf_counter()
    delay = run_method(scenario, method,
                       config=SubSolverConfig(**solver_kw),
                       sim=SlottedSimConfig(**sim_kw))
    return {kind: value, "method": method, "seed": seed, "delay": delay,
            "wall_time": time.perf_counter() - t0}


def _run_cells(parameter, cells, jobs) -> SweepResult:
    if jobs > 1 and len(cells) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_sweep_cell, cells))
    else:
        rows = [_sweep_cell(c) for c in cells]
    rows.sort(key=lambda r: (r[parameter], r["method"], r["seed"]))
    return SweepResult(parameter, rows)


def sweep_cache_capacity(base: GenParams, c_sc_values, methods, seeds,
                         solver_kw=None, sim_kw=None, jobs: int = 1) -> SweepResult:
    """Delay versus small-cell capacity; the macro cell gets min(2*c_sc, 8)."""
    bad = [m for m in methods if m.upper() not in METHODS]
    if bad:
        raise ValueError(f"unknown methods {bad}; expected subset of {METHODS}")
    cells = []
    for c_sc in c_sc_values:
        params = GenParams(**{**_params_dict(base), "c_sc": int(c_sc),
                              "c_mc": min(2 * int(c_sc), 8)})
        for method in methods:
            for seed in seeds:
                cells.append(("c_sc", int(c_sc), method.upper(), int(seed),
                              _params_dict(params), solver_kw or {},
                              dict(sim_kw or {}, seed=int(seed))))
    return _run_cells("c_sc", cells, jobs)


def sweep_power_budget(base: GenParams, budgets, methods, seeds,
                       solver_kw=None, sim_kw=None, jobs: int = 1) -> SweepResult:
    """Delay versus the common per-node power budget."""
    bad = [m for m in methods if m.upper() not in METHODS]
    if bad:
        raise ValueError(f"unknown methods {bad}; expected subset of {METHODS}")
    cells = []
    for budget in budgets:
        params = GenParams(**{**_params_dict(base), "power_budget": float(budget)})
        for method in methods:
            for seed in seeds:
                cells.append(("power_budget", float(budget), method.upper(),
                              int(seed), _params_dict(params), solver_kw or {},
                              dict(sim_kw or {}, seed=int(seed))))
    return _run_cells("power_budget", cells, jobs)


def convergence_trace(scenario: Scenario, methods=("SUB", "ALT"),
                      config: SubSolverConfig | None = None) -> dict:
    """Wall-clock-stamped objective series for each method from a shared
    initial point."""
    init = default_init(scenario)
    cfg = config or SubSolverConfig()
    out = {}
    for method in methods:
        solve = solve_sub if method.upper() == "SUB" else solve_alt
        report = solve(scenario, cfg, init=(init[0].copy(), init[1].copy()))
        out[method.upper()] = {
            "series": [(row.elapsed, row.objective) for row in report.trace],
            "final_relaxed_cost": report.final_relaxed_cost,
            "final_exact_cost": report.final_exact_cost,
        }
    return out


def _params_dict(params: GenParams) -> dict:
    return {f.name: getattr(params, f.name) for f in fields(GenParams)}


def _add_gen_args(parser):
    parser.add_argument("--scenario", help="load a scenario JSON file")
    parser.add_argument("--seed", type=int, default=0)
    defaults = GenParams()
    parser.add_argument("--n-users", type=int, default=defaults.n_users)
    parser.add_argument("--n-sc", type=int, default=defaults.n_sc)
    parser.add_argument("--catalog", type=int, default=defaults.catalog_size)
    parser.add_argument("--gamma", type=float, default=defaults.zipf_gamma)
    parser.add_argument("--c-sc", type=int, default=defaults.c_sc)
    parser.add_argument("--c-mc", type=int, default=defaults.c_mc)
    parser.add_argument("--power-budget", type=float, default=defaults.power_budget)
    parser.add_argument("--pathloss", type=float, default=defaults.pathloss_exp)
    parser.add_argument("--noise", type=float, default=defaults.noise)
    parser.add_argument("--mc-radius", type=float, default=defaults.mc_radius)
    parser.add_argument("--d-mc", type=float, default=defaults.d_mc)
    parser.add_argument("--d-sc", type=float, default=defaults.d_sc)
    parser.add_argument("--params", help="JSON file of generator parameters "
                                         "(flags override file values)")


def _gen_params(args) -> GenParams:
    base = {}
    if args.params:
        with open(args.params) as fh:
            base = json.load(fh)
    flags = {
        "n_users": args.n_users, "n_sc": args.n_sc,
        "catalog_size": args.catalog, "zipf_gamma": args.gamma,
        "c_sc": args.c_sc, "c_mc": args.c_mc,
        "power_budget": args.power_budget, "pathloss_exp": args.pathloss,
        "noise": args.noise, "mc_radius": args.mc_radius,
        "d_mc": args.d_mc, "d_sc": args.d_sc,
    }
    defaults = _params_dict(GenParams())
    merged = dict(defaults)
    merged.update({k: v for k, v in base.items() if k in defaults})
    merged.update({k: v for k, v in flags.items() if v != defaults[k]})
    return GenParams(**merged)


def _load_scenario(args) -> Scenario:
    if args.scenario:
        with open(args.scenario) as fh:
            scenario = scenario_from_json(fh.read())
        problems = validate(scenario)
        if problems:
            raise ValueError("invalid scenario: " + "; ".join(problems))
        return scenario
    return generate_scenario(args.seed, _gen_params(args))


def _add_solver_args(parser):
    parser.add_argument("--epsilon", type=float, default=None)
    parser.add_argument("--max-iters", type=int, default=4000)
    parser.add_argument("--delta0", type=float, default=None)


def _write(text: str, out: str | None):
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hetcache")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="emit a scenario JSON")
    _add_gen_args(p)
    p.add_argument("--out")

    p = sub.add_parser("solve", help="run one solver on a scenario")
    _add_gen_args(p)
    _add_solver_args(p)
    p.add_argument("--method", choices=["sub", "alt"], default="sub")
    p.add_argument("--out")

    p = sub.add_parser("baseline", help="run a replacement-policy simulation")
    _add_gen_args(p)
    p.add_argument("--policy", choices=list(POLICIES), required=True)
    p.add_argument("--slots", type=int, default=200)
    p.add_argument("--warmup", type=int, default=50)
    p.add_argument("--sim-seed", type=int, default=0)
    p.add_argument("--out")

    p = sub.add_parser("oracle", help="brute-force a micro scenario")
    _add_gen_args(p)
    p.add_argument("--grid", type=int, default=4)
    p.add_argument("--out")

    p = sub.add_parser("sweep-cache", help="delay versus cache capacity")
    _add_gen_args(p)
    _add_solver_args(p)
    p.add_argument("--c-sc-values", default="1,2,3,4")
    p.add_argument("--methods", default="SUB,ALT,POLRU,POLFU,POFIFO")
    p.add_argument("--seeds", default="0,1,2,3,4")
    p.add_argument("--slots", type=int, default=200)
    p.add_argument("--warmup", type=int, default=50)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out")

    p = sub.add_parser("sweep-power", help="delay versus power budget")
    _add_gen_args(p)
    _add_solver_args(p)
    p.add_argument("--budgets", default="25,50,100,200")
    p.add_argument("--methods", default="SUB,ALT,POLRU,POLFU,POFIFO")
    p.add_argument("--seeds", default="0,1,2,3,4")
    p.add_argument("--slots", type=int, default=200)
    p.add_argument("--warmup", type=int, default=50)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out")

    p = sub.add_parser("trace", help="objective-versus-time series per method")
    _add_gen_args(p)
    _add_solver_args(p)
    p.add_argument("--methods", default="SUB,ALT")
    p.add_argument("--out")
    return parser


def _split(text: str) -> list[str]:
    return [t for t in (s.strip() for s in text.split(",")) if t]


def _dispatch(args) -> str:
    if args.command == "generate":
        return scenario_to_json(generate_scenario(args.seed, _gen_params(args)))

    if args.command == "solve":
        scenario = _load_scenario(args)
        solve = solve_sub if args.method == "sub" else solve_alt
        return solve(scenario, _solver_config(args)).to_json()

    if args.command == "baseline":
        scenario = _load_scenario(args)
        cfg = SlottedSimConfig(policy=args.policy, n_slots=args.slots,
                               warmup_slots=args.warmup, seed=args.sim_seed)
        result = run_baseline(scenario, cfg)
        return json.dumps({"policy": args.policy,
                           "mean_delay": result.mean_delay,
                           "slot_delays": result.slot_delays}, indent=2)

    if args.command == "oracle":
        scenario = _load_scenario(args)
        result = brute_force_opt(scenario, args.grid)
        return json.dumps({
            "cost": result.cost,
            "placement": np.asarray(result.placement.x).astype(int).tolist(),
            "powers": {f"{k[0]},{k[1]}": v for k, v in result.powers.s.items()},
            "n_placements": result.n_placements,
            "n_power_points": result.n_power_points,
        }, indent=2)

    if args.command in ("sweep-cache", "sweep-power"):
        params = _gen_params(args)
        methods = _split(args.methods)
        seeds = [int(s) for s in _split(args.seeds)]
        solver_kw = {"epsilon": args.epsilon, "max_iters": args.max_iters,
                     "delta0": args.delta0}
        sim_kw = {"n_slots": args.slots, "warmup_slots": args.warmup}
        if args.command == "sweep-cache":
            values = [int(v) for v in _split(args.c_sc_values)]
            result = sweep_cache_capacity(params, values, methods, seeds,
                                          solver_kw, sim_kw, jobs=args.jobs)
        else:
            values = [float(v) for v in _split(args.budgets)]
            result = sweep_power_budget(params, values, methods, seeds,
                                        solver_kw, sim_kw, jobs=args.jobs)
        return result.to_csv()

    if args.command == "trace":
        scenario = _load_scenario(args)
        out = convergence_trace(scenario, _split(args.methods),
                                _solver_config(args))
        return json.dumps(out, indent=2)

    raise ValueError(f"unknown command {args.command!r}")


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        _write(_dispatch(args), args.out)
        return 0
    except Exception as exc:  # surface a machine-readable failure
        sys.stdout.write(json.dumps(
            {"error": {"type": type(exc).__name__, "message": str(exc)}}) + "\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
