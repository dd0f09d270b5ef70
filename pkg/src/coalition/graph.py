"""Undirected simple graphs and edge-list ingestion."""
import hashlib

import numpy as np


class EdgeListError(ValueError):
    """Malformed edge-list input."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class SelfLoopError(EdgeListError):
    pass


class Graph:
    """Immutable undirected simple graph on nodes ``0..n-1``.

    ``labels[i]`` is the external label of dense node ``i`` (defaults to
    ``i``). Construction collapses duplicate and reversed edges.
    """

    __slots__ = ("node_count", "edges", "adjacency", "degree", "labels", "_matrix")

    def __init__(self, node_count, edges, labels=None):
        node_count = int(node_count)
        if node_count < 1:
            raise ValueError("a graph needs at least one node")
        canon = set()
        for a, b in edges:
            a, b = int(a), int(b)
            if a == b:
                raise SelfLoopError(f"self-loop on node {a}")
            if not (0 <= a < node_count and 0 <= b < node_count):
                raise IndexError(f"edge ({a}, {b}) out of range for n={node_count}")
            canon.add((a, b) if a < b else (b, a))
        adjacency = [set() for _ in range(node_count)]
        for a, b in canon:
            adjacency[a].add(b)
            adjacency[b].add(a)
        self.node_count = node_count
        self.edges = tuple(sorted(canon))
        self.adjacency = tuple(frozenset(s) for s in adjacency)
        self.degree = np.array([len(s) for s in adjacency], dtype=np.int64)
        self.degree.flags.writeable = False
        if labels is None:
            labels = list(range(node_count))
        if len(labels) != node_count:
            raise ValueError("labels must have one entry per node")
        self.labels = tuple(labels)
        self._matrix = None

    @property
    def n(self):
        return self.node_count

    @property
    def edge_count(self):
        return len(self.edges)

    @property
    def m(self):
        return len(self.edges)

    def has_edge(self, i, j):
        return j in self.adjacency[i]

    def adjacency_matrix(self):
        """Dense 0/1 adjacency matrix (read-only, cached)."""
        if self._matrix is None:
            a = np.zeros((self.n, self.n), dtype=np.int64)
            if self.edges:
                e = np.asarray(self.edges)
                a[e[:, 0], e[:, 1]] = 1
                a[e[:, 1], e[:, 0]] = 1
            a.flags.writeable = False
            self._matrix = a
        return self._matrix

    def fingerprint(self):
        h = hashlib.sha256()
        h.update(str(self.n).encode())
        for a, b in self.edges:
            h.update(f";{a},{b}".encode())
        return h.hexdigest()[:16]

    def relabel(self, perm):
        """Graph with node ``i`` renamed ``perm[i]``."""
        perm = list(perm)
        labels = [None] * self.n
        for i, p in enumerate(perm):
            labels[p] = self.labels[i]
        return Graph(self.n, [(perm[a], perm[b]) for a, b in self.edges], labels)

    def labelled_edges(self):
        lab = self.labels
        return frozenset(frozenset((lab[a], lab[b])) for a, b in self.edges)

    # Equality is on external labels, so line order in the source file
    # (which drives the dense remap) does not matter.
    def __eq__(self, other):
        return (isinstance(other, Graph) and set(self.labels) == set(other.labels)
                and self.labelled_edges() == other.labelled_edges())

    def __hash__(self):
        return hash(self.labelled_edges())

    def __repr__(self):
        return f"Graph(n={self.n}, m={self.m})"


def load_edge_list(text):
    """Parse whitespace-separated ``u v`` lines into a :class:`Graph`.

    Lines starting with ``#`` and blank lines are skipped. A line holding a
    single id declares a node without adding an edge, so isolated nodes
    survive a round trip. Node ids are
    arbitrary non-negative integers remapped to ``0..n-1`` in order of first
    appearance; the original ids are kept in ``Graph.labels``.
    """
    index = {}
    labels = []
    edges = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) not in (1, 2):
            raise EdgeListError(f"expected one or two node ids, got {line!r}", lineno)
        try:
            ids = [int(t) for t in parts]
        except ValueError:
            raise EdgeListError(f"non-integer node id in {line!r}", lineno) from None
        if min(ids) < 0:
            raise EdgeListError(f"negative node id in {line!r}", lineno)
        if len(ids) == 2 and ids[0] == ids[1]:
            raise SelfLoopError(f"self-loop on node {ids[0]}", lineno)
        for x in ids:
            if x not in index:
                index[x] = len(labels)
                labels.append(x)
        if len(ids) == 2:
            edges.append((index[ids[0]], index[ids[1]]))
    if not labels:
        raise EdgeListError("edge list names no nodes")
    return Graph(len(labels), edges, labels)


def read_edge_list(path):
    with open(path, encoding="utf-8") as fh:
        return load_edge_list(fh.read())


def write_edge_list(g, path_or_file):
    lines = [f"{g.labels[a]} {g.labels[b]}\n" for a, b in g.edges]
    lines += [f"{g.labels[v]}\n" for v in range(g.n) if not g.adjacency[v]]
    if hasattr(path_or_file, "write"):
        path_or_file.writelines(lines)
    else:
        with open(path_or_file, "w", encoding="utf-8") as fh:
            fh.writelines(lines)


def common_neighbours(g, i, j):
    """Number of nodes adjacent to both ``i`` and ``j``."""
    n = g.n
    if not (0 <= i < n and 0 <= j < n):
        raise IndexError(f"node out of range: ({i}, {j}) for n={n}")
    if i == j:
        raise ValueError("common_neighbours needs two distinct nodes")
    return len(g.adjacency[i] & g.adjacency[j])


def bundled_path(name):
    """Path of a dataset shipped in ``coalition/data`` (e.g. ``"karate.txt"``)."""
    from importlib.resources import files
    return str(files("coalition") / "data" / name)


def karate_club():
    """Zachary's karate club, 34 nodes labelled 1..34, 78 edges."""
    return read_edge_list(bundled_path("karate.txt"))
