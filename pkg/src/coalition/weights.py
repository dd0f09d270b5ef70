"""Pairwise weights of the weighted graph community game.

Three variants share the :class:`WeightMatrix` container:

``raw``
    The topological weight of every node pair, built from the partition
    ratio ``P_ij = 1/k_i + 1/k_j`` and the neighbourhood ratio
    ``CN_ij = (common neighbours + 1) * P_ij``. All entries are >= 0.
``approx``
    Raw weights minus the weighted-modularity null term
    ``W_i W_j / (2W)`` with ``2W = sum_i W_i``.
``exact``
    Raw weights minus their exact expectation under the configuration
    model (see :func:`expected_weight_matrix`).
"""
from dataclasses import dataclass, field
import math

import numpy as np

from .null_model import NullModelContext

RAW = "raw"
APPROX = "approx"
EXACT = "exact"
VARIANTS = (RAW, APPROX, EXACT)


class WeightDomainError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class WeightMatrix:
    variant: str
    values: np.ndarray
    source_graph_fingerprint: str = ""
    labels: tuple = field(default=(), repr=False)

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown weight variant {self.variant!r}")
        v = np.array(self.values, dtype=np.float64)
        if v.ndim != 2 or v.shape[0] != v.shape[1]:
            raise ValueError("weight matrix must be square")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)
        if not self.labels:
            object.__setattr__(self, "labels", tuple(range(v.shape[0])))

    @property
    def n(self):
        return self.values.shape[0]

    def __getitem__(self, idx):
        return self.values[idx]


def as_array(w):
    """The float matrix behind ``w`` (a :class:`WeightMatrix` or array)."""
    if isinstance(w, WeightMatrix):
        return w.values
    return np.asarray(w, dtype=np.float64)


def partition_ratio(g, i, j):
    ki, kj = int(g.degree[i]), int(g.degree[j])
    if ki < 1 or kj < 1:
        raise WeightDomainError(f"partition ratio undefined for isolated node ({i}, {j})")
    return 1.0 / ki + 1.0 / kj


def _partition_matrix(k):
    inv = np.zeros(len(k), dtype=np.float64)
    nz = k > 0
    inv[nz] = 1.0 / k[nz]
    return inv[:, None] + inv[None, :]


def raw_weights(g):
    """Raw game weights for every node pair of ``g``."""
    k = np.asarray(g.degree)
    a = g.adjacency_matrix()
    common = a @ a
    part = _partition_matrix(k)
    cn = (common + 1) * part
    active = (k[:, None] >= 1) & (k[None, :] >= 1)
    leaf = (k[:, None] == 1) | (k[None, :] == 1)
    edge = a == 1

    w = np.zeros_like(part)
    non_edge = active & ~edge
    w[non_edge] = (cn[non_edge] - part[non_edge]) / 4.0
    leaf_edge = edge & leaf
    w[leaf_edge] = part[leaf_edge]
    core_edge = edge & ~leaf
    w[core_edge] = 2.0 * cn[core_edge] + part[core_edge]
    np.fill_diagonal(w, 0.0)
    return WeightMatrix(RAW, w, g.fingerprint(), g.labels)


def approx_modular_weights(g, w=None, normalizer="all_pairs"):
    """``W'_ij = W_ij - W_i W_j / (2W)``.

    ``W_i`` is the full row sum. ``normalizer`` picks ``W``: ``"all_pairs"``
    sums raw weights over every unordered node pair, so that ``2W`` equals the
    sum of all ``W_i`` as in weighted modularity; ``"edges"`` sums over graph
    edges only.
    """
    if w is None:
        w = raw_weights(g)
    raw = as_array(w)
    if g.m == 0:
        raise WeightDomainError("approximate modular weights need at least one edge")
    strength = raw.sum(axis=1)
    if normalizer == "all_pairs":
        total = float(np.triu(raw, k=1).sum())
    elif normalizer == "edges":
        e = np.asarray(g.edges)
        total = float(raw[e[:, 0], e[:, 1]].sum())
    else:
        raise ValueError(f"unknown normalizer {normalizer!r}")
    if total == 0.0:
        raise WeightDomainError("total weight is zero")
    out = raw - np.outer(strength, strength) / (2.0 * total)
    np.fill_diagonal(out, 0.0)
    return WeightMatrix(APPROX, out, g.fingerprint(), g.labels)


def _degree_tables(g, ctx):
    """Per-degree-pair sums of common-neighbour and triangle probabilities.

    Expected weights depend on the endpoints only through their degrees, so
    the third-node sums are taken once per distinct degree pair, weighting
    each third-node degree by how many nodes carry it and removing the two
    endpoints themselves.
    """
    k = np.asarray(g.degree)
    values, counts = np.unique(k, return_counts=True)
    count_of = dict(zip(values.tolist(), counts.tolist()))
    active = [d for d in values.tolist() if d >= 1]
    com_sum = {}
    tri_sum = {}
    for a in active:
        for b in active:
            if b < a:
                continue
            sc = []
            st = []
            for d, c in count_of.items():
                if d < 2:
                    continue
                c_eff = c - (d == a) - (d == b)
                if c_eff <= 0:
                    continue
                sc.append(c_eff * ctx._p_com(a, b, d, ctx.m))
                st.append(c_eff * ctx._p_tri(a, b, d, ctx.m))
            com_sum[a, b] = math.fsum(sc) if not ctx.exact else sum(sc)
            tri_sum[a, b] = math.fsum(st) if not ctx.exact else sum(st)
    return com_sum, tri_sum


def _expected_from_tables(ki, kj, ctx, com_sum, tri_sum):
    if ki < 1 or kj < 1:
        return 0.0
    a, b = (ki, kj) if ki <= kj else (kj, ki)
    part = 1.0 / ki + 1.0 / kj
    if ctx.exact:
        from fractions import Fraction
        part = Fraction(1, ki) + Fraction(1, kj)
    p_adj = ctx._p_adj(a, b, ctx.m)
    if ki == 1 or kj == 1:
        return part * com_sum[a, b] / 4 + part * p_adj
    return (part / 4 * (com_sum[a, b] - tri_sum[a, b])
            + 2 * part * tri_sum[a, b] + 3 * part * p_adj)


def expected_weight(g, ctx, i, j):
    """Expected raw weight of pair ``(i, j)`` under the configuration model.

    ``ctx`` is a :class:`~coalition.null_model.NullModelContext` built for
    ``g.m`` (pass ``None`` to create one). Pairs touching an isolated node
    have expectation 0.
    """
    if ctx is None:
        ctx = NullModelContext(g.m)
    if ctx.m != g.m:
        raise WeightDomainError(f"context built for m={ctx.m}, graph has m={g.m}")
    if i == j:
        return 0.0
    ki, kj = int(g.degree[i]), int(g.degree[j])
    if ki < 1 or kj < 1:
        return 0.0
    k = np.asarray(g.degree)
    terms_c = []
    terms_t = []
    for r in range(g.n):
        if r == i or r == j:
            continue
        kr = int(k[r])
        terms_c.append(ctx._p_com(ki, kj, kr, ctx.m))
        terms_t.append(ctx._p_tri(ki, kj, kr, ctx.m))
    acc = sum if ctx.exact else math.fsum
    sc, st = acc(terms_c), acc(terms_t)
    part = 1.0 / ki + 1.0 / kj
    if ctx.exact:
        from fractions import Fraction
        part = Fraction(1, ki) + Fraction(1, kj)
    p_adj = ctx._p_adj(ki, kj, ctx.m)
    if ki == 1 or kj == 1:
        return part * sc / 4 + part * p_adj
    return part / 4 * (sc - st) + 2 * part * st + 3 * part * p_adj


def expected_weight_matrix(g, ctx=None):
    """Matrix of expected raw weights (zero diagonal)."""
    if g.m == 0:
        raise WeightDomainError("expected weights need at least one edge")
    if ctx is None:
        ctx = NullModelContext(g.m)
    com_sum, tri_sum = _degree_tables(g, ctx)
    k = np.asarray(g.degree).tolist()
    distinct = sorted(set(k))
    cache = {}
    for a in distinct:
        for b in distinct:
            cache[a, b] = float(_expected_from_tables(a, b, ctx, com_sum, tri_sum))
    lookup = np.array([[cache[a, b] for b in distinct] for a in distinct])
    pos = np.searchsorted(distinct, k)
    out = lookup[np.ix_(pos, pos)]
    np.fill_diagonal(out, 0.0)
    return out


def exact_modular_weights(g, w=None, ctx=None):
    """``W*_ij = W_ij - E[W_ij]`` with the exact configuration-model expectation."""
    if w is None:
        w = raw_weights(g)
    expected = expected_weight_matrix(g, ctx)
    out = as_array(w) - expected
    np.fill_diagonal(out, 0.0)
    return WeightMatrix(EXACT, out, g.fingerprint(), g.labels)


def compute_weights(g, variant):
    if variant == RAW:
        return raw_weights(g)
    if variant == APPROX:
        return approx_modular_weights(g)
    if variant == EXACT:
        return exact_modular_weights(g)
    raise ValueError(f"unknown weight variant {variant!r}; expected one of {VARIANTS}")


def format_triples(w, labels=None, skip_zero=True):
    """Tab-separated ``i j w`` lines for every unordered pair ``i < j``."""
    values = as_array(w)
    if labels is None:
        labels = w.labels if isinstance(w, WeightMatrix) else range(values.shape[0])
    labels = list(labels)
    iu, ju = np.triu_indices(values.shape[0], k=1)
    lines = []
    for i, j in zip(iu.tolist(), ju.tolist()):
        x = float(values[i, j])
        if skip_zero and x == 0.0:
            continue
        lines.append(f"{labels[i]}\t{labels[j]}\t{x!r}\n")
    return "".join(lines)
