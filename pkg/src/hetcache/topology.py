"""HetNet scenarios: nodes, directed response links, requests, seeded generation."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, replace
from enum import Enum

import numpy as np

# Channel gains are r**-n; distances are clamped below so gains stay finite.
MIN_DISTANCE = 1.0


class NodeKind(str, Enum):
    USER = "user"
    SMALL_CELL = "small_cell"
    MACRO_CELL = "macro_cell"
    BACKBONE = "backbone"


@dataclass(frozen=True)
class Node:
    """A network node. Budget and noise are linear-scale watts."""

    id: int
    kind: NodeKind
    position: tuple[float, float]
    cache_capacity: int
    power_budget: float
    noise_power: float


@dataclass(frozen=True)
class Edge:
    """Directed transmission link tx -> rx, oriented in the response direction.

    Wired edges carry a fixed delay, consume no power budget and create no
    interference; wireless edges carry a positive channel gain.
    """

    tx: int
    rx: int
    gain: float
    wired: bool = False
    wired_delay: float = 0.0

    @property
    def key(self) -> tuple[int, int]:
        return (self.tx, self.rx)


@dataclass(frozen=True)
class Request:
    """An (item, path) demand. path[0] is the requesting user, path[-1] a source."""

    item: int
    path: tuple[int, ...]
    rate: float = 1.0


@dataclass(frozen=True, eq=False)
class Scenario:
    """Immutable network description. Node ids equal their index in `nodes`."""

    nodes: tuple[Node, ...]
    edges: tuple[Edge, ...]
    catalog_size: int
    requests: tuple[Request, ...]
    designated_sources: dict[int, frozenset[int]]
    pathloss_exponent: float
    params: dict | None = None

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    def edge_map(self) -> dict[tuple[int, int], Edge]:
        return {e.key: e for e in self.edges}

    def distance(self, a: int, b: int) -> float:
        pa, pb = self.nodes[a].position, self.nodes[b].position
        d = math.hypot(pa[0] - pb[0], pa[1] - pb[1])
        return max(d, MIN_DISTANCE)

    def gain(self, tx: int, rx: int) -> float:
        """Channel gain from any transmitter to any receiver.

        Uses the stored gain when (tx, rx) is a wireless edge, otherwise the
        power-law pathloss from positions. Needed because every transmission
        interferes at every receiver, not only along declared links.
        """
        edge = self.edge_map().get((tx, rx))
        if edge is not None and not edge.wired:
            return edge.gain
        return self.distance(tx, rx) ** (-self.pathloss_exponent)

    def with_requests(self, requests) -> "Scenario":
        return replace(self, requests=tuple(requests))


@dataclass(frozen=True)
class GenParams:
    """Knobs for the randomized scenario generator."""

    n_users: int = 30
    n_sc: int = 4
    catalog_size: int = 10
    zipf_gamma: float = 0.25
    c_sc: int = 2
    c_mc: int = 4
    power_budget: float = 100.0
    pathloss_exp: float = 3.7
    noise: float = 1.0
    mc_radius: float = 1000.0
    d_mc: float = 0.05
    d_sc: float = 0.1


def zipf_pmf(catalog_size: int, gamma: float) -> np.ndarray:
    """Popularity vector p_i proportional to (i+1)**-gamma over item ranks."""
    if catalog_size < 1:
        raise ValueError("catalog_size must be >= 1")
    if gamma < 0:
        raise ValueError("gamma must be >= 0")
    ranks = np.arange(1, catalog_size + 1, dtype=float)
    w = ranks ** (-gamma)
    return w / w.sum()


def _kmeanspp_seed(points: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    centers = [points[rng.integers(len(points))]]
    for _ in range(1, k):
        d2 = ((points[:, None, :] - np.asarray(centers)[None]) ** 2).sum(-1).min(axis=1)
        total = d2.sum()
        if total <= 0.0:
            centers.append(points[rng.integers(len(points))])
        else:
            centers.append(points[rng.choice(len(points), p=d2 / total)])
    return np.asarray(centers, dtype=float)


def _lloyd(points: np.ndarray, k: int, rng: np.random.Generator,
           iters: int = 50, tol: float = 1e-6) -> np.ndarray:
    """Centroidal placement: k-means fixed point seeded k-means++ style."""
    centers = _kmeanspp_seed(points, k, rng)
    scale = max(float(np.ptp(points)), 1.0)
    for _ in range(iters):
        assign = ((points[:, None, :] - centers[None]) ** 2).sum(-1).argmin(axis=1)
        new = centers.copy()
        for j in range(k):
            members = points[assign == j]
            if len(members):
                new[j] = members.mean(axis=0)
            else:
                # re-seed an empty cluster at the worst-assigned point
                far = int(((points - centers[assign]) ** 2).sum(-1).argmax())
                new[j] = points[far]
        move = float(np.sqrt(((new - centers) ** 2).sum(-1)).max())
        centers = new
        if move < tol * scale:
            break
    return centers


def generate_scenario(seed: int, params: GenParams = GenParams()) -> Scenario:
    """Build a randomized scenario: users uniform in the macro-cell disk, small
    cells placed by Lloyd's algorithm, one Zipf-drawn request per user routed
    user -> nearest attachment -> macro cell -> backbone.

    Deterministic given (seed, params).
    """
    p = params
    if p.n_users < 1 or p.n_sc < 1 or p.catalog_size < 1:
        raise ValueError("n_users, n_sc and catalog_size must be positive")
    if p.zipf_gamma < 0:
        raise ValueError("zipf_gamma must be >= 0")
    if p.pathloss_exp <= 2:
        raise ValueError("pathloss exponent must exceed 2")

    rng = np.random.default_rng(seed)
    radii = p.mc_radius * np.sqrt(rng.uniform(size=p.n_users))
    angles = rng.uniform(0.0, 2.0 * math.pi, size=p.n_users)
    user_pos = np.stack([radii * np.cos(angles), radii * np.sin(angles)], axis=1)
    if p.n_users > 1 and float(np.ptp(user_pos)) < 1e-9:
        raise ValueError("degenerate geometry: all users co-located")

    sc_pos = _lloyd(user_pos, p.n_sc, rng)
    pmf = zipf_pmf(p.catalog_size, p.zipf_gamma)
    items = rng.choice(p.catalog_size, size=p.n_users, p=pmf)

    mc_id = p.n_users + p.n_sc
    bb_id = mc_id + 1
    # a cache larger than the catalog is meaningless and would make the
    # relaxed mass equality infeasible
    c_sc = min(p.c_sc, p.catalog_size)
    c_mc = min(p.c_mc, p.catalog_size)
    nodes = []
    for u in range(p.n_users):
        nodes.append(Node(u, NodeKind.USER, tuple(map(float, user_pos[u])),
                          0, p.power_budget, p.noise))
    for j in range(p.n_sc):
        nodes.append(Node(p.n_users + j, NodeKind.SMALL_CELL,
                          tuple(map(float, sc_pos[j])), c_sc, p.power_budget, p.noise))
    nodes.append(Node(mc_id, NodeKind.MACRO_CELL, (0.0, 0.0),
                      c_mc, p.power_budget, p.noise))
    nodes.append(Node(bb_id, NodeKind.BACKBONE, (0.0, 0.0),
                      p.catalog_size, 0.0, p.noise))

    def dist(a, b):
        d = math.hypot(a[0] - b[0], a[1] - b[1])
        return max(d, MIN_DISTANCE)

    def wireless(tx, rx):
        r = dist(nodes[tx].position, nodes[rx].position)
        return Edge(tx, rx, r ** (-p.pathloss_exp))

    edges: dict[tuple[int, int], Edge] = {}
    requests = []
    for u in range(p.n_users):
        d_sc = np.sqrt(((sc_pos - user_pos[u]) ** 2).sum(axis=1))
        nearest_sc = int(d_sc.argmin())
        d_mc = math.hypot(*user_pos[u])
        if d_sc[nearest_sc] <= d_mc:
            sc_id = p.n_users + nearest_sc
            path = (u, sc_id, mc_id, bb_id)
            edges.setdefault((sc_id, u), wireless(sc_id, u))
            edges.setdefault((mc_id, sc_id), wireless(mc_id, sc_id))
        else:
            path = (u, mc_id, bb_id)
            edges.setdefault((mc_id, u), wireless(mc_id, u))
        edges.setdefault((bb_id, mc_id), Edge(bb_id, mc_id, 1.0, wired=True,
                                              wired_delay=p.d_mc))
        requests.append(Request(int(items[u]), path, 1.0))

    sources = {i: frozenset({bb_id}) for i in range(p.catalog_size)}
    params_dict = dict(asdict(p), seed=seed)
    return Scenario(
        nodes=tuple(nodes),
        edges=tuple(edges.values()),
        catalog_size=p.catalog_size,
        requests=tuple(requests),
        designated_sources=sources,
        pathloss_exponent=p.pathloss_exp,
        params=params_dict,
    )


def validate(scenario: Scenario) -> list[str]:
    """Check all structural invariants; returns one message per violation."""
    out: list[str] = []
    n = scenario.n_nodes
    for idx, node in enumerate(scenario.nodes):
        if node.id != idx:
            out.append(f"node at index {idx} has id {node.id}; ids must equal positions")
        if node.cache_capacity < 0:
            out.append(f"node {node.id}: negative cache capacity")
        if node.noise_power <= 0:
            out.append(f"node {node.id}: noise power must be positive")
    if scenario.catalog_size < 1:
        out.append("catalog_size must be >= 1")
    if scenario.pathloss_exponent <= 2:
        out.append("pathloss exponent must exceed 2")

    seen = set()
    wireless_tx = set()
    for e in scenario.edges:
        if not (0 <= e.tx < n and 0 <= e.rx < n):
            out.append(f"edge {e.key}: endpoint out of range")
            continue
        if e.tx == e.rx:
            out.append(f"edge {e.key}: self loop")
        if e.key in seen:
            out.append(f"edge {e.key}: duplicate")
        seen.add(e.key)
        if e.wired:
            if e.wired_delay < 0:
                out.append(f"edge {e.key}: negative wired delay")
        else:
            if e.gain <= 0:
                out.append(f"edge {e.key}: wireless gain must be positive")
            wireless_tx.add(e.tx)
    for v in wireless_tx:
        if scenario.nodes[v].power_budget <= 0:
            out.append(f"node {v}: zero power budget but outgoing wireless edges")

    pins: dict[int, int] = {}
    for item in range(scenario.catalog_size):
        srcs = scenario.designated_sources.get(item, frozenset())
        if not srcs:
            out.append(f"item {item}: empty designated-source set")
        for v in srcs:
            if not (0 <= v < n):
                out.append(f"item {item}: designated source {v} out of range")
            else:
                pins[v] = pins.get(v, 0) + 1
    for v, count in pins.items():
        if count > scenario.nodes[v].cache_capacity:
            out.append(f"node {v}: {count} pinned items exceed capacity "
                       f"{scenario.nodes[v].cache_capacity}")

    for ridx, r in enumerate(scenario.requests):
        if not (0 <= r.item < scenario.catalog_size):
            out.append(f"request {ridx}: item {r.item} outside catalog")
            continue
        if r.rate <= 0:
            out.append(f"request {ridx}: rate must be positive")
        if len(set(r.path)) != len(r.path):
            out.append(f"request {ridx}: path not simple")
        if any(not (0 <= v < n) for v in r.path):
            out.append(f"request {ridx}: path node out of range")
            continue
        if scenario.nodes[r.path[0]].kind is not NodeKind.USER:
            out.append(f"request {ridx}: path must start at a user")
        if r.path[-1] not in scenario.designated_sources.get(r.item, frozenset()):
            out.append(f"request {ridx}: path must end at a designated source of "
                       f"item {r.item}")
        for k in range(len(r.path) - 1):
            key = (r.path[k + 1], r.path[k])
            if key not in seen:
                out.append(f"request {ridx}: missing response edge {key}")
    return out


def scenario_to_json(scenario: Scenario) -> str:
    doc = {
        "catalog_size": scenario.catalog_size,
        "pathloss_exponent": scenario.pathloss_exponent,
        "params": scenario.params,
        "nodes": [
            {
                "id": nd.id,
                "kind": nd.kind.value,
                "position": list(nd.position),
                "cache_capacity": nd.cache_capacity,
                "power_budget": nd.power_budget,
                "noise_power": nd.noise_power,
            }
            for nd in scenario.nodes
        ],
        "edges": [
            {
                "tx": e.tx,
                "rx": e.rx,
                "gain": e.gain,
                "wired": e.wired,
                "wired_delay": e.wired_delay,
            }
            for e in scenario.edges
        ],
        "requests": [
            {"item": r.item, "path": list(r.path), "rate": r.rate}
            for r in scenario.requests
        ],
        "designated_sources": {
            str(i): sorted(scenario.designated_sources[i])
            for i in sorted(scenario.designated_sources)
        },
    }
    return json.dumps(doc, indent=2)


def scenario_from_json(text: str) -> Scenario:
    doc = json.loads(text)
    nodes = tuple(
        Node(nd["id"], NodeKind(nd["kind"]), tuple(nd["position"]),
             nd["cache_capacity"], nd["power_budget"], nd["noise_power"])
        for nd in doc["nodes"]
    )
    edges = tuple(
        Edge(e["tx"], e["rx"], e["gain"], e.get("wired", False),
             e.get("wired_delay", 0.0))
        for e in doc["edges"]
    )
    requests = tuple(
        Request(r["item"], tuple(r["path"]), r.get("rate", 1.0))
        for r in doc["requests"]
    )
    sources = {int(i): frozenset(v) for i, v in doc["designated_sources"].items()}
    return Scenario(
        nodes=nodes,
        edges=edges,
        catalog_size=doc["catalog_size"],
        requests=requests,
        designated_sources=sources,
        pathloss_exponent=doc["pathloss_exponent"],
        params=doc.get("params"),
    )
