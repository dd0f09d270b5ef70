"""Benchmark graphs with planted overlapping communities.

An LFR-style generator extended with bridge nodes: ``N_o`` randomly chosen
nodes belong to exactly ``p`` communities, every other node to one. Degrees
and community sizes follow truncated discrete power laws. Each node keeps a
fraction ``1 - mu`` (``1 - mu_o`` per community for bridges) of its degree
inside its communities; internal and external stubs are wired by separate
configuration models.
"""
from dataclasses import dataclass, asdict, field
import json
import math

import numpy as np

from .graph import Graph
from .stability import CommunityStructure, format_communities

RESTART_BUDGET = 10_000
PAIR_ATTEMPTS = 100
WIRING_ATTEMPTS = 100


class GeneratorError(RuntimeError):
    """Generation failed; ``stage`` names the step that ran out of retries."""

    def __init__(self, stage, message):
        self.stage = stage
        super().__init__(f"{stage}: {message}")


@dataclass
class GeneratorConfig:
    N: int
    n_c: int
    p: int = 1
    N_o: int = 0
    mu: float = 0.1
    mu_o: float = None
    gamma: float = 2.0
    beta: float = 1.0
    k_min: int = None
    k_max: int = None
    s_min: int = None
    s_max: int = None
    seed: int = 0

    def __post_init__(self):
        slots = self.N + (self.p - 1) * self.N_o
        mean_size = slots / max(self.n_c, 1)
        if self.mu_o is None:
            self.mu_o = max(self.mu, 1.0 - 1.0 / self.p)
        if self.s_min is None:
            self.s_min = max(3, int(math.floor(0.75 * mean_size)))
        if self.s_max is None:
            self.s_max = max(self.s_min, int(math.ceil(1.25 * mean_size)))
        # degrees below the smallest community size keep the internal-degree
        # cap |S_k| - 1 from leaking stubs outside
        if self.k_max is None:
            self.k_max = max(1, min(self.N - 1, self.s_min - 1))
        if self.k_min is None:
            self.k_min = max(1, min(self.k_max, (self.s_min + 1) // 2))
        self.validate()

    def validate(self):
        if self.N < 2 or self.n_c < 1 or self.p < 1:
            raise ValueError("need N >= 2, n_c >= 1, p >= 1")
        if not 0 <= self.N_o <= self.N:
            raise ValueError("N_o must lie in [0, N]")
        if self.N_o and self.p < 2:
            raise ValueError("bridge nodes need p >= 2")
        if not 1 <= self.k_min <= self.k_max:
            raise ValueError("need 1 <= k_min <= k_max")
        if not 1 <= self.s_min <= self.s_max:
            raise ValueError("need 1 <= s_min <= s_max")
        for name in ("mu", "mu_o"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1]")
        # a bridge node keeps (1 - mu_o) of its degree in each of p communities
        if self.N_o and self.p * (1.0 - self.mu_o) > 1.0 + 1e-12:
            raise ValueError(f"mu_o must be >= {1 - 1 / self.p:.4g} for p={self.p}")

    @property
    def slots(self):
        return self.N + (self.p - 1) * self.N_o

    def to_dict(self):
        return asdict(self)


@dataclass
class GroundTruth:
    communities: list
    bridge_nodes: frozenset
    n: int
    planned_sizes: list = field(default_factory=list)
    drawn_degrees: list = field(default_factory=list)

    def structure(self, p=None):
        p = p or max((sum(1 for c in self.communities if v in c)
                      for v in range(self.n)), default=1)
        return CommunityStructure(self.communities, self.n, len(self.communities), p)


def round_half_up(x):
    return int(math.floor(x + 0.5))


def sample_power_law(lo, hi, exponent, rng):
    """Integer in ``[lo, hi]`` with ``P(x) ~ x**-exponent`` by inverse CDF."""
    lo, hi = int(lo), int(hi)
    if lo < 1 or hi < lo:
        raise ValueError(f"power-law support needs 1 <= lo <= hi, got [{lo}, {hi}]")
    return int(_power_law_sampler(lo, hi, exponent)(rng))


def _power_law_sampler(lo, hi, exponent):
    support = np.arange(lo, hi + 1)
    cdf = np.cumsum(support.astype(np.float64) ** -float(exponent))
    cdf /= cdf[-1]

    def draw(rng, size=None):
        u = rng.random(size)
        return support[np.minimum(np.searchsorted(cdf, u, side="right"), support.size - 1)]
    return draw


def _draw_degrees(cfg, rng):
    draw = _power_law_sampler(cfg.k_min, cfg.k_max, cfg.gamma)
    for _ in range(RESTART_BUDGET):
        k = draw(rng, cfg.N).astype(np.int64)
        if k.sum() % 2 == 0:
            return k
    raise GeneratorError("degrees", "no even degree sum within the restart budget")


def _draw_sizes(cfg, rng):
    draw = _power_law_sampler(cfg.s_min, cfg.s_max, cfg.beta)
    target = cfg.slots
    for _ in range(RESTART_BUDGET):
        sizes = []
        total = 0
        while total < target:
            if target - total < cfg.s_min or len(sizes) >= cfg.n_c:
                break
            s = int(draw(rng))
            if total + s > target:
                s = target - total
            sizes.append(s)
            total += s
        if total == target and len(sizes) >= (cfg.p if cfg.N_o else 1):
            return sizes
    raise GeneratorError("community_sizes",
                         f"no size sequence summing to {target} with at most {cfg.n_c} "
                         f"communities in [{cfg.s_min}, {cfg.s_max}]")


def _assign(cfg, sizes, bridges, rng):
    n_com = len(sizes)
    comms = [set() for _ in range(n_com)]
    member_of = [set() for _ in range(cfg.N)]
    candidates = list(range(cfg.N))
    where = {v: t for t, v in enumerate(candidates)}

    def drop(v):
        t = where.pop(v)
        last = candidates.pop()
        if last != v:
            candidates[t] = last
            where[last] = t

    def add(v):
        if v not in where:
            where[v] = len(candidates)
            candidates.append(v)

    budget = RESTART_BUDGET * cfg.N
    steps = 0
    while candidates:
        steps += 1
        if steps > budget:
            raise GeneratorError("assignment", "nodes could not be placed within the step budget")
        i = candidates[int(rng.integers(len(candidates)))]
        k = int(rng.integers(n_com))
        if i in comms[k]:
            continue
        comms[k].add(i)
        member_of[i].add(k)
        if i not in bridges or len(member_of[i]) == cfg.p:
            drop(i)
        if len(comms[k]) > sizes[k]:
            evicted = sorted(comms[k])[int(rng.integers(len(comms[k])))]
            comms[k].discard(evicted)
            member_of[evicted].discard(k)
            add(evicted)
    return comms


def _wire(nodes, stubs_per_node, rng, existing):
    """Configuration model on ``nodes``; bad pairs are redrawn, then discarded."""
    stubs = []
    for v, d in zip(nodes, stubs_per_node):
        stubs.extend([v] * int(d))
    stubs = np.array(stubs, dtype=np.int64)
    rng.shuffle(stubs)
    pool = stubs.tolist()
    new_edges = []
    discarded = 0
    while len(pool) >= 2:
        a = pool.pop()
        ok = False
        for _ in range(PAIR_ATTEMPTS):
            t = int(rng.integers(len(pool)))
            b = pool[t]
            e = (a, b) if a < b else (b, a)
            if a != b and e not in existing:
                ok = True
                break
        pool[t] = pool[-1]
        pool.pop()
        if ok:
            existing.add(e)
            new_edges.append(e)
        else:
            discarded += 1
    return new_edges, discarded


def _wire_all(cfg, comms, bridges, degrees, rng):
    internal_total = np.zeros(cfg.N, dtype=np.int64)
    existing = set()
    discarded = 0
    for s in comms:
        nodes = sorted(s)
        frac = [(1.0 - (cfg.mu_o if v in bridges else cfg.mu)) for v in nodes]
        # per-community rounding can overshoot a bridge node's degree, so each
        # community only gets what is left of it
        k_int = [min(round_half_up(f * degrees[v]), len(nodes) - 1,
                     int(degrees[v] - internal_total[v])) for v, f in zip(nodes, frac)]
        if sum(k_int) % 2:
            positive = [t for t, d in enumerate(k_int) if d > 0]
            k_int[positive[int(rng.integers(len(positive)))]] -= 1
        _, lost = _wire(nodes, k_int, rng, existing)
        discarded += lost
        for v, d in zip(nodes, k_int):
            internal_total[v] += d
    external = np.maximum(degrees - internal_total, 0)
    if external.sum() % 2:
        positive = np.flatnonzero(external > 0)
        external[positive[int(rng.integers(positive.size))]] -= 1
    _, lost = _wire(list(range(cfg.N)), external.tolist(), rng, existing)
    return existing, discarded + lost


def generate(cfg):
    """Draw a benchmark graph; returns ``(Graph, GroundTruth)``."""
    cfg.validate()
    rng = np.random.default_rng(cfg.seed)
    degrees = _draw_degrees(cfg, rng)
    sizes = _draw_sizes(cfg, rng)
    if len(sizes) < cfg.p and cfg.N_o:
        raise GeneratorError("community_sizes", "fewer communities than p")
    bridges = frozenset(rng.choice(cfg.N, size=cfg.N_o, replace=False).tolist())
    comms = _assign(cfg, sizes, bridges, rng)

    # Isolated nodes cannot be written to an edge list, so the wiring is
    # redrawn until every node keeps at least one edge.
    for _ in range(WIRING_ATTEMPTS):
        existing, discarded = _wire_all(cfg, comms, bridges, degrees, rng)
        touched = np.zeros(cfg.N, dtype=bool)
        for a, b in existing:
            touched[a] = touched[b] = True
        if touched.all():
            break
    else:
        raise GeneratorError("wiring", "every wiring attempt left an isolated node")

    g = Graph(cfg.N, sorted(existing))
    truth = GroundTruth([frozenset(s) for s in comms], bridges, cfg.N,
                        planned_sizes=list(sizes), drawn_degrees=degrees.tolist())
    truth.discarded_pairs = discarded
    return g, truth


def measure_mixing(g, gt):
    """Mean fraction of edges leaving all of a node's communities.

    Returns ``(mu_hat, mu_o_hat)`` over non-bridge and bridge nodes with at
    least one edge; an empty group gives ``None``.
    """
    member_of = [set() for _ in range(g.n)]
    for k, s in enumerate(gt.communities):
        for v in s:
            member_of[v].add(k)
    plain = []
    bridge = []
    for i in range(g.n):
        nbrs = g.adjacency[i]
        if not nbrs:
            continue
        out = sum(1 for j in nbrs if not (member_of[i] & member_of[j]))
        (bridge if i in gt.bridge_nodes else plain).append(out / len(nbrs))
    mu_hat = float(np.mean(plain)) if plain else None
    mu_o_hat = float(np.mean(bridge)) if bridge else None
    return mu_hat, mu_o_hat


def write_instance(g, gt, cfg, prefix):
    """Write ``prefix.edges``, ``prefix.truth``, ``prefix.bridges``, ``prefix.json``.

    Returns the paths written.
    """
    from .graph import write_edge_list
    prefix = str(prefix)
    paths = {"graph": prefix + ".edges", "truth": prefix + ".truth",
             "bridges": prefix + ".bridges", "sidecar": prefix + ".json"}
    write_edge_list(g, paths["graph"])
    with open(paths["truth"], "w", encoding="utf-8") as fh:
        fh.write(format_communities(gt.structure(), g.labels))
    with open(paths["bridges"], "w", encoding="utf-8") as fh:
        fh.writelines(f"{g.labels[v]}\n" for v in sorted(gt.bridge_nodes))
    mu_hat, mu_o_hat = measure_mixing(g, gt)
    sidecar = {
        "config": cfg.to_dict(),
        "stats": {
            "n": g.n, "m": g.m,
            "community_sizes": [len(s) for s in gt.communities],
            "size_sum": sum(len(s) for s in gt.communities),
            "expected_size_sum": cfg.slots,
            "bridge_count": len(gt.bridge_nodes),
            "isolated_nodes": int(np.sum(g.degree == 0)),
            "discarded_pairs": getattr(gt, "discarded_pairs", 0),
            "mu_hat": mu_hat, "mu_o_hat": mu_o_hat,
        },
    }
    with open(paths["sidecar"], "w", encoding="utf-8") as fh:
        json.dump(sidecar, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return paths
