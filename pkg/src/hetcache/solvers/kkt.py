"""First-order optimality residuals for a candidate (caching, power) point."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..cost import subgradient
from ..feasible import cache_spec
from ..radio import radio_index
from ..topology import Scenario


@dataclass(frozen=True)
class KKTResidual:
    """Case-wise stationarity violations with estimated multipliers.

    cache_residual: per node, interior entries must share a common multiplier,
        entries at 0 must sit at or above it, entries at 1 at or below it.
    power_residual: per transmitter, links with positive power share a common
        negated multiplier when the budget binds and a zero gradient when it
        does not; silent links may not undercut the multiplier.
    complementary_slackness: multiplier-times-slack products.
    directional_residual: worst normalized descent rate along sampled feasible
        power directions (nonnegative at a stationary point).
    """

    cache_residual: float
    power_residual: float
    complementary_slackness: float
    directional_residual: float

    @property
    def max_residual(self) -> float:
        return max(self.cache_residual, self.power_residual,
                   self.complementary_slackness, self.directional_residual)


def _cache_residual(scenario, y, lo_d, hi_d, tol) -> float:
    """Per node: does any subdifferential selection admit a shared multiplier?

    Interior entries need the multiplier inside their attainable interval,
    entries at 0 need it at or below their upper bound, entries at 1 at or
    above their lower bound; the residual is how far those requirements are
    from intersecting.
    """
    cspec = cache_spec(scenario)
    worst = 0.0
    for v in range(scenario.n_nodes):
        pins = set(cspec.pinned[v])
        free = [i for i in range(scenario.catalog_size) if i not in pins]
        b = cspec.capacities[v] - len(pins)
        n_free = len(free)
        if n_free == 0 or b <= 0 or b >= n_free:
            continue  # the mass constraint fixes the whole row
        lo = lo_d[v, free]
        hi = hi_d[v, free]
        yv = y[v, free]
        interior = (yv > tol) & (yv < 1.0 - tol)
        at_zero = yv <= tol
        at_one = yv >= 1.0 - tol
        alpha_min, alpha_max = -np.inf, np.inf
        if interior.any():
            alpha_min = float(lo[interior].max())
            alpha_max = float(hi[interior].min())
        if at_one.any():
            alpha_min = max(alpha_min, float(lo[at_one].max()))
        if at_zero.any():
            alpha_max = min(alpha_max, float(hi[at_zero].min()))
        if np.isfinite(alpha_min) and np.isfinite(alpha_max):
            worst = max(worst, max(0.0, alpha_min - alpha_max))
    return worst


def _power_residuals(scenario, svec, d_s, tol) -> tuple[float, float]:
    ridx = radio_index(scenario)
    worst = 0.0
    slack_prod = 0.0
    for v, ids in ridx.tx_groups.items():
        budget = scenario.nodes[v].power_budget
        block = svec[ids]
        grads = d_s[ids]
        scale = max(1.0, budget)
        total = float(block.sum())
        tight = budget - total <= tol * scale
        active = block > tol * scale
        if tight and active.any():
            beta = float(np.median(-grads[active]))
        else:
            beta = 0.0
        res = max(0.0, -beta)
        if active.any():
            res = max(res, float(np.abs(grads[active] + beta).max()))
        inactive = ~active
        if inactive.any():
            res = max(res, float(np.maximum(-beta - grads[inactive], 0.0).max()))
        worst = max(worst, res)
        slack_prod = max(slack_prod, abs(beta * (budget - total)))
        if inactive.any():
            gammas = np.maximum(grads[inactive] + beta, 0.0)
            slack_prod = max(slack_prod, float((gammas * block[inactive]).max()))
    return worst, slack_prod


def _directional_residual(scenario, svec, d_s, n_directions, seed) -> float:
    ridx = radio_index(scenario)
    rng = np.random.default_rng(seed)
    scale = max(1.0, float(np.linalg.norm(d_s)))
    worst = 0.0
    for _ in range(n_directions):
        probe = np.zeros_like(svec)
        for v, ids in ridx.tx_groups.items():
            budget = scenario.nodes[v].power_budget
            probe[ids] = rng.dirichlet(np.ones(len(ids))) * budget * rng.uniform()
        direction = probe - svec
        norm = float(np.linalg.norm(direction))
        if norm <= 0.0:
            continue
        rate = float(np.dot(d_s, direction / norm))
        worst = max(worst, max(0.0, -rate) / scale)
    return worst


def check_kkt(scenario: Scenario, Y, S, tol: float = 1e-6,
              n_directions: int = 64, seed: int = 0,
              kink_band: float = 1e-6) -> KKTResidual:
    """Compute stationarity residuals at a feasible point. All residuals are
    nonnegative and vanish (up to tol-driven classification) at a local
    optimum of the relaxed objective. `kink_band` is the prefix-mass distance
    from the saturation point within which a hop's subdifferential is treated
    as multi-valued."""
    from ..cost import _as_matrix, _as_svec, subgradient_bounds

    y = _as_matrix(Y)
    svec = _as_svec(scenario, S)
    sub = subgradient(scenario, y, svec)
    lo_d, hi_d = subgradient_bounds(scenario, y, svec, band=kink_band)
    cache_res = _cache_residual(scenario, y, lo_d, hi_d, tol)
    power_res, slack = _power_residuals(scenario, svec, sub.d_s, tol)
    directional = _directional_residual(scenario, svec, sub.d_s,
                                        n_directions, seed)
    return KKTResidual(cache_residual=cache_res, power_residual=power_res,
                       complementary_slackness=slack,
                       directional_residual=directional)
