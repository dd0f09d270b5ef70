"""Shapley values, coalition stability and community-structure checks.

A coalition ``S`` is stable when no member gains by swinging to the
opposite coalition ``(V \\ S) + {i}``. With Shapley values
``phi_i(S) = 1/2 sum_{j in S, j != i} W_ij`` that reduces, per member, to::

    sum_{j in S, j != i} W_ij >= 1/2 sum_{j != i} W_ij
"""
from dataclasses import dataclass

import numpy as np

from .weights import as_array

STABILITY_TOL = 1e-9


class CommunityStructure:
    """A cover of ``0..n-1`` by up to ``n_c`` non-empty node sets.

    Coverage, the membership cap ``p``, non-inclusion and stability are not
    enforced here; :func:`validate_structure` reports them.
    """

    __slots__ = ("communities", "n", "n_c", "p", "membership")

    def __init__(self, communities, n, n_c=None, p=None):
        comms = []
        for c in communities:
            s = frozenset(int(v) for v in c)
            if not s:
                raise ValueError("empty communities are not allowed")
            if min(s) < 0 or max(s) >= n:
                raise IndexError(f"community {sorted(s)} has nodes outside 0..{n - 1}")
            comms.append(s)
        self.communities = tuple(comms)
        self.n = int(n)
        self.n_c = int(n_c) if n_c is not None else max(1, len(comms))
        self.p = int(p) if p is not None else self.n_c
        membership = [set() for _ in range(self.n)]
        for k, s in enumerate(comms):
            for v in s:
                membership[v].add(k)
        self.membership = tuple(frozenset(m) for m in membership)

    def __len__(self):
        return len(self.communities)

    def __iter__(self):
        return iter(self.communities)

    def membership_matrix(self):
        """``n x len(self)`` 0/1 matrix with a column per community."""
        m = np.zeros((self.n, len(self.communities)), dtype=np.int64)
        for k, s in enumerate(self.communities):
            m[list(s), k] = 1
        return m

    def comembership_counts(self):
        m = self.membership_matrix()
        return m @ m.T

    def bridge_nodes(self):
        return frozenset(i for i, c in enumerate(self.membership) if len(c) >= 2)

    def canonical(self):
        """Same structure with communities sorted by decreasing size, then members."""
        return CommunityStructure(canonical_order(self.communities), self.n, self.n_c, self.p)

    def key(self):
        return tuple(tuple(sorted(s)) for s in canonical_order(self.communities))

    def __eq__(self, other):
        return (isinstance(other, CommunityStructure) and self.n == other.n
                and set(self.communities) == set(other.communities))

    def __hash__(self):
        return hash((self.n, frozenset(self.communities)))

    def __repr__(self):
        return f"CommunityStructure({[sorted(s) for s in self.communities]}, n={self.n})"


def canonical_order(communities):
    return sorted((frozenset(c) for c in communities), key=lambda s: (-len(s), sorted(s)))


@dataclass(frozen=True)
class Violation:
    kind: str  # coverage | p_limit | inclusion | unstable | community_count
    detail: tuple

    def __str__(self):
        return f"{self.kind}{self.detail}"


def shapley_value(w, S, i):
    """Shapley value of ``i`` in the game restricted to coalition ``S``."""
    S = set(S)
    if i not in S:
        raise ValueError(f"node {i} is not a member of the coalition")
    v = as_array(w)
    others = [j for j in S if j != i]
    return 0.5 * float(v[i, others].sum()) if others else 0.0


def coalition_value(w, S):
    """Characteristic function: total weight inside ``S``."""
    idx = sorted(set(S))
    v = as_array(w)
    return 0.5 * float(v[np.ix_(idx, idx)].sum())


def unstable_members(w, S, tol=STABILITY_TOL):
    """Members of ``S`` for which the stability inequality fails."""
    v = as_array(w)
    idx = np.array(sorted(set(S)), dtype=np.int64)
    if idx.size == 0:
        return []
    inside = v[np.ix_(idx, idx)].sum(axis=1)
    half_total = 0.5 * v[idx].sum(axis=1)
    return idx[inside < half_total - tol].tolist()


def is_stable(w, S, tol=STABILITY_TOL):
    """True iff every member prefers ``S`` to the opposite coalition."""
    if not S:
        raise ValueError("stability is defined for non-empty coalitions")
    return not unstable_members(w, S, tol)


def validate_structure(w, pi, tol=STABILITY_TOL):
    """List every feasibility violation of ``pi`` (empty when feasible)."""
    out = []
    if len(pi.communities) > pi.n_c:
        out.append(Violation("community_count", (len(pi.communities), pi.n_c)))
    for i, c in enumerate(pi.membership):
        if not c:
            out.append(Violation("coverage", (i,)))
        elif len(c) > pi.p:
            out.append(Violation("p_limit", (i, len(c))))
    comms = pi.communities
    for k, a in enumerate(comms):
        for r, b in enumerate(comms):
            if k == r:
                continue
            # equal sets are reported once, on the lower index
            if a == b and k > r:
                continue
            if a <= b:
                out.append(Violation("inclusion", (k, r)))
    for k, s in enumerate(comms):
        bad = unstable_members(w, s, tol)
        if bad:
            out.append(Violation("unstable", (k, tuple(bad))))
    return out


def structure_objective(w, pi):
    """Total weight over pairs sharing at least one community (each pair once)."""
    v = as_array(w)
    co = pi.comembership_counts() > 0
    return float(np.triu(v * co, k=1).sum())


def shapley_sum_objective(w, pi):
    """Sum of Shapley values over all communities (pairs counted per shared community)."""
    v = as_array(w)
    co = pi.comembership_counts()
    return float(np.triu(v * co, k=1).sum())


def format_communities(pi, labels=None):
    """One community per line, space-separated labels, canonical order."""
    if labels is None:
        labels = range(pi.n)
    labels = list(labels)
    lines = []
    for s in canonical_order(pi.communities):
        lines.append(" ".join(str(labels[v]) for v in sorted(s)) + "\n")
    return "".join(lines)


def parse_communities(text, label_index=None):
    """Inverse of :func:`format_communities`; returns a list of node-id sets.

    ``label_index`` maps external labels to dense ids. Without it, labels
    are read as integers and used directly.
    """
    comms = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        members = set()
        for tok in line.split():
            try:
                lab = int(tok)
            except ValueError:
                raise ValueError(f"line {lineno}: bad node label {tok!r}") from None
            if label_index is not None:
                if lab not in label_index:
                    raise KeyError(f"line {lineno}: unknown node label {lab}")
                lab = label_index[lab]
            members.add(lab)
        comms.append(members)
    return comms
