"""Exact configuration-model probabilities and a stub-matching oracle.

In the configuration model every edge of a graph with ``m`` edges is cut into
two stubs and the ``2m`` stubs are paired uniformly at random. The three
probabilities below are inclusion-exclusion sums over sets of ``t`` disjoint
stub matches, each of which occurs with probability
``1 / ((2m-1)(2m-3)...(2m-2t+1))``:

* :func:`p_adjacency` - ``i`` and ``j`` joined by at least one match,
* :func:`p_common_neighbour` - ``r`` joined to both ``i`` and ``j``,
* :func:`p_triangle` - all three of the above pairs joined.

Float evaluation builds each term from the previous one with a
multiplicative recurrence and sums with :func:`math.fsum`. Passing
``exact=True`` switches to :class:`fractions.Fraction` arithmetic.
"""
import math
from fractions import Fraction
from functools import lru_cache
import threading

import numpy as np

EXACT_MAX_DEGREE = 64
ORACLE_MAX_EDGES = 6


class NullModelDomainError(ValueError):
    pass


def _coefficients(a, b, m, one):
    """Yield ``(t, C(a,t) C(b,t) t! / prod_{p<=t}(2m+1-2p))`` for t=1..min(a,b)."""
    top = min(a, b)
    if top <= 0:
        return
    term = one * a * b / (2 * m - 1)
    yield 1, term
    for t in range(1, top):
        term = term * ((a - t) * (b - t)) / ((t + 1) * (2 * m - 1 - 2 * t))
        yield t + 1, term


def _accumulate(terms, exact):
    if exact:
        return sum(terms, Fraction(0))
    return math.fsum(terms)


class NullModelContext:
    """Memoised probability tables for a graph with ``m`` edges.

    The tables are keyed on the integer arguments only, so one context can
    serve every pair of a graph. Writes are serialised by a lock; reads of an
    already-filled entry go through the dict without locking.
    """

    def __init__(self, m, exact=False):
        m = int(m)
        if m < 1:
            raise NullModelDomainError(f"m must be >= 1, got {m}")
        self.m = m
        self.exact = bool(exact)
        self._one = Fraction(1) if exact else 1.0
        self._zero = Fraction(0) if exact else 0.0
        self._adj = {}
        self._com = {}
        self._tri = {}
        self._lock = threading.Lock()

    def _store(self, table, key, value):
        with self._lock:
            table[key] = value
        return value

    # The private evaluators accept arguments that drifted out of range in the
    # recursions and return 0 for them (empty sums).

    def _p_adj(self, ki, kj, m):
        if ki <= 0 or kj <= 0 or m <= 0:
            return self._zero
        if ki > kj:
            ki, kj = kj, ki
        key = (ki, kj, m)
        hit = self._adj.get(key)
        if hit is not None:
            return hit
        terms = [(-1) ** (t + 1) * c for t, c in _coefficients(ki, kj, m, self._one)]
        return self._store(self._adj, key, _accumulate(terms, self.exact))

    def _p_com(self, ki, kj, kr, m):
        if ki <= 0 or kj <= 0 or kr <= 1 or m <= 0:
            return self._zero
        key = (ki, kj, kr, m)
        hit = self._com.get(key)
        if hit is not None:
            return hit
        # Inclusion-exclusion over t matches between j and r, conditioning the
        # i-r adjacency on the remaining stubs.
        terms = []
        for t, c in _coefficients(kj, kr, m, self._one):
            if t > kr - 1:
                break
            terms.append((-1) ** (t + 1) * self._p_adj(ki, kr - t, m - t) * c)
        return self._store(self._com, key, _accumulate(terms, self.exact))

    def _p_tri(self, ki, kj, kr, m):
        if ki <= 1 or kj <= 1 or kr <= 1 or m <= 0:
            return self._zero
        key = (ki, kj, kr, m)
        hit = self._tri.get(key)
        if hit is not None:
            return hit
        terms = []
        for t, c in _coefficients(ki, kj, m, self._one):
            if t > min(ki, kj) - 1:
                break
            terms.append((-1) ** (t + 1) * self._p_com(ki - t, kj - t, kr, m - t) * c)
        return self._store(self._tri, key, _accumulate(terms, self.exact))

    def p_adjacency(self, ki, kj):
        _check_degrees(self.m, ki, kj)
        return self._p_adj(int(ki), int(kj), self.m)

    def p_common_neighbour(self, ki, kj, kr):
        _check_degrees(self.m, ki, kj, kr)
        return self._p_com(int(ki), int(kj), int(kr), self.m)

    def p_triangle(self, ki, kj, kr):
        _check_degrees(self.m, ki, kj, kr)
        return self._p_tri(int(ki), int(kj), int(kr), self.m)


def _check_degrees(m, *degrees):
    for k in degrees:
        if int(k) != k or k < 0:
            raise NullModelDomainError(f"degrees must be non-negative integers, got {k}")
    if sum(degrees) > 2 * m:
        raise NullModelDomainError(
            f"degrees {degrees} need more than the 2m={2 * m} available stubs")


@lru_cache(maxsize=64)
def _context(m, exact):
    return NullModelContext(m, exact)


def _ctx_for(m, exact):
    if int(m) < 1:
        raise NullModelDomainError(f"m must be >= 1, got {m}")
    return _context(int(m), bool(exact))


def p_adjacency(ki, kj, m, exact=False):
    """Probability that two nodes of degrees ``ki``, ``kj`` are adjacent."""
    if exact:
        _check_exact(ki, kj)
    return _ctx_for(m, exact).p_adjacency(ki, kj)


def p_common_neighbour(ki, kj, kr, m, exact=False):
    """Probability that a node of degree ``kr`` neighbours both ``i`` and ``j``."""
    if exact:
        _check_exact(ki, kj, kr)
    return _ctx_for(m, exact).p_common_neighbour(ki, kj, kr)


def p_triangle(ki, kj, kr, m, exact=False):
    """Probability that ``i``, ``j``, ``r`` are pairwise adjacent."""
    if exact:
        _check_exact(ki, kj, kr)
    return _ctx_for(m, exact).p_triangle(ki, kj, kr)


def _check_exact(*degrees):
    if max(degrees) > EXACT_MAX_DEGREE:
        raise NullModelDomainError(
            f"exact mode is limited to degrees <= {EXACT_MAX_DEGREE}")


# --- enumeration oracle -------------------------------------------------------

def perfect_matchings(items):
    """Yield every perfect matching of ``items`` as a list of pairs."""
    items = list(items)
    if not items:
        yield []
        return
    first = items[0]
    for idx in range(1, len(items)):
        partner = items[idx]
        rest = items[1:idx] + items[idx + 1:]
        for tail in perfect_matchings(rest):
            yield [(first, partner)] + tail


def stub_owners(degree_sequence):
    owners = []
    for node, k in enumerate(degree_sequence):
        owners.extend([node] * int(k))
    return owners


def _check_enumerable(degree_sequence):
    degrees = [int(k) for k in degree_sequence]
    if any(k < 0 for k in degrees):
        raise NullModelDomainError("negative degree")
    total = sum(degrees)
    if total % 2:
        raise NullModelDomainError("degree sum must be even")
    m = total // 2
    if m > ORACLE_MAX_EDGES:
        raise NullModelDomainError(
            f"enumeration refused: m={m} exceeds the bound m <= {ORACLE_MAX_EDGES} "
            f"({math.prod(range(2 * m - 1, 0, -2))} matchings)")
    if m == 0:
        raise NullModelDomainError("degree sequence has no stubs")
    return degrees, m


def realizations(degree_sequence):
    """Yield the node-pair multiset of every stub matching.

    Each realization is a list of ``(u, v)`` node pairs (``u`` may equal ``v``
    for a self-loop). All ``(2m-1)!!`` matchings are produced, so each
    realization has equal probability.
    """
    degrees, _ = _check_enumerable(degree_sequence)
    owners = stub_owners(degrees)
    for matching in perfect_matchings(range(len(owners))):
        yield [(owners[a], owners[b]) for a, b in matching]


def realization_adjacency(pairs, n):
    """0/1 adjacency (multi-edges collapsed, self-loops dropped)."""
    adj = np.zeros((n, n), dtype=np.int64)
    for u, v in pairs:
        if u != v:
            adj[u, v] = 1
            adj[v, u] = 1
    return adj


def _event_holds(adj, event):
    kind = event[0]
    if kind == "adjacency":
        _, i, j = event
        return adj[i, j] == 1
    if kind == "common":
        _, i, j, r = event
        return adj[i, r] == 1 and adj[j, r] == 1
    if kind == "triangle":
        _, i, j, r = event
        return adj[i, r] == 1 and adj[j, r] == 1 and adj[i, j] == 1
    raise ValueError(f"unknown event {kind!r}")


def enumerate_matchings_oracle(degree_sequence, event):
    """Exact probability of ``event`` over all stub matchings.

    ``event`` is ``("adjacency", i, j)``, ``("common", i, j, r)`` or
    ``("triangle", i, j, r)``. Returns a :class:`~fractions.Fraction`.
    """
    degrees, _ = _check_enumerable(degree_sequence)
    n = len(degrees)
    hits = total = 0
    for pairs in realizations(degrees):
        total += 1
        if _event_holds(realization_adjacency(pairs, n), event):
            hits += 1
    return Fraction(hits, total)


def expected_match_count(degree_sequence, i, j):
    """Mean number of ``i``-``j`` stub matches over all matchings (exact)."""
    degrees, _ = _check_enumerable(degree_sequence)
    count = total = 0
    for pairs in realizations(degrees):
        total += 1
        count += sum(1 for u, v in pairs if {u, v} == {i, j} and u != v)
    return Fraction(count, total)


def matching_count(m):
    """``(2m)! / (2^m m!)``, the number of perfect matchings of 2m stubs."""
    return math.prod(range(2 * m - 1, 0, -2))


def all_event_probabilities(degree_sequence):
    """Oracle event frequencies for all node pairs/triples in one pass.

    Returns float arrays ``adjacency[i, j]``, ``common[i, j, r]`` and
    ``triangle[i, j, r]``.
    """
    degrees, _ = _check_enumerable(degree_sequence)
    n = len(degrees)
    adj_hits = np.zeros((n, n), dtype=np.int64)
    com_hits = np.zeros((n, n, n), dtype=np.int64)
    tri_hits = np.zeros((n, n, n), dtype=np.int64)
    total = 0
    for pairs in realizations(degrees):
        total += 1
        a = realization_adjacency(pairs, n)
        adj_hits += a
        c = np.einsum("ir,jr->ijr", a, a)
        com_hits += c
        tri_hits += c * a[:, :, None]
    return adj_hits / total, com_hits / total, tri_hits / total


__all__ = [
    "NullModelContext", "NullModelDomainError", "p_adjacency", "p_common_neighbour",
    "p_triangle", "enumerate_matchings_oracle", "expected_match_count", "realizations",
    "realization_adjacency", "perfect_matchings", "matching_count",
    "all_event_probabilities",
]
