"""Objective-delta kernels for the local search.

Both kernels read the weight matrix ``W``, the co-membership counts
``cnt[i, j] = |C_i & C_j|`` and the 0/1 membership matrix ``M`` (nodes x
communities), and return the objective change of every Add/Remove and
every Swap and Relocate move. Feasibility is not checked here. A last
kernel scores how a membership change moves the stability deficit, which
the search's repair phase minimises.

Each kernel exists twice: a numba version with explicit loops and a numpy
version built from fancy indexing. ``COALITION_BACKEND`` selects one at import;
:func:`use_backend` switches at runtime.
"""
import numpy as np

from ._accel import njit, requested_backend, HAS_NUMBA


# --- numpy ------------------------------------------------------------------

def _single_deltas_numpy(W, cnt, M):
    inside = M.astype(bool)
    Mf = M.astype(np.float64)
    add = np.where(cnt == 0, W, 0.0) @ Mf
    rem = -(np.where(cnt == 1, W, 0.0) @ Mf)
    add[inside] = np.nan
    rem[~inside] = np.nan
    return add, rem


def _swap_deltas_numpy(W, cnt, M):
    n, K = M.shape
    inside = M.astype(bool)
    W0 = np.where(cnt == 0, W, 0.0)
    W1 = np.where(cnt == 1, W, 0.0)
    chunks = []
    for k in range(K):
        for k2 in range(k + 1, K):
            A = np.flatnonzero(inside[:, k] & ~inside[:, k2])
            B = np.flatnonzero(inside[:, k2] & ~inside[:, k])
            if A.size == 0 or B.size == 0:
                continue
            cross = W0[np.ix_(A, B)]
            # i in A moves k -> k2, i2 in B moves k2 -> k
            g_a = cross.sum(axis=1) - W1[np.ix_(A, A)].sum(axis=1)
            g_b = W0[np.ix_(B, A)].sum(axis=1) - W1[np.ix_(B, B)].sum(axis=1)
            delta = g_a[:, None] + g_b[None, :] - 2.0 * cross
            ii, jj = np.meshgrid(A, B, indexing="ij")
            chunks.append(np.column_stack([
                ii.ravel(), np.full(ii.size, k), jj.ravel(), np.full(ii.size, k2)]))
            chunks.append(delta.ravel())
    if not chunks:
        return np.empty((0, 4), dtype=np.int64), np.empty(0)
    moves = np.concatenate(chunks[0::2]).astype(np.int64)
    deltas = np.concatenate(chunks[1::2])
    return moves, deltas


def _relocate_deltas_numpy(W, cnt, M):
    n, K = M.shape
    inside = M.astype(bool)
    Mf = M.astype(np.float64)
    rem = -(np.where(cnt == 1, W, 0.0) @ Mf)
    chunks = []
    for k in range(K):
        # pairs that stay apart once i has left S_k
        gain = np.where(cnt - M[:, k][None, :] == 0, W, 0.0) @ Mf
        for k2 in range(K):
            if k2 == k:
                continue
            A = np.flatnonzero(inside[:, k] & ~inside[:, k2])
            if A.size == 0:
                continue
            chunks.append((np.column_stack([A, np.full(A.size, k), np.full(A.size, k2)]),
                           rem[A, k] + gain[A, k2]))
    if not chunks:
        return np.empty((0, 3), dtype=np.int64), np.empty(0)
    moves = np.concatenate([c[0] for c in chunks]).astype(np.int64)
    deltas = np.concatenate([c[1] for c in chunks])
    return moves, deltas


# --- numba ------------------------------------------------------------------

@njit(cache=True)
def _single_deltas_numba(W, cnt, M):
    n, K = M.shape
    add = np.full((n, K), np.nan)
    rem = np.full((n, K), np.nan)
    members = np.empty(n, dtype=np.int64)
    for k in range(K):
        size = 0
        for v in range(n):
            if M[v, k]:
                members[size] = v
                size += 1
        for i in range(n):
            s = 0.0
            if M[i, k]:
                for t in range(size):
                    j = members[t]
                    if j != i and cnt[i, j] == 1:
                        s += W[i, j]
                rem[i, k] = -s
            else:
                for t in range(size):
                    j = members[t]
                    if cnt[i, j] == 0:
                        s += W[i, j]
                add[i, k] = s
    return add, rem


@njit(cache=True)
def _swap_deltas_numba(W, cnt, M):
    n, K = M.shape
    total = 0
    for k in range(K):
        for k2 in range(k + 1, K):
            a = 0
            b = 0
            for v in range(n):
                if M[v, k] and not M[v, k2]:
                    a += 1
                elif M[v, k2] and not M[v, k]:
                    b += 1
            total += a * b
    moves = np.empty((total, 4), dtype=np.int64)
    deltas = np.empty(total)
    A = np.empty(n, dtype=np.int64)
    B = np.empty(n, dtype=np.int64)
    g_a = np.empty(n)
    g_b = np.empty(n)
    pos = 0
    for k in range(K):
        for k2 in range(k + 1, K):
            na = 0
            nb = 0
            for v in range(n):
                if M[v, k] and not M[v, k2]:
                    A[na] = v
                    na += 1
                elif M[v, k2] and not M[v, k]:
                    B[nb] = v
                    nb += 1
            if na == 0 or nb == 0:
                continue
            for x in range(na):
                i = A[x]
                s = 0.0
                for y in range(nb):
                    j = B[y]
                    if cnt[i, j] == 0:
                        s += W[i, j]
                for y in range(na):
                    j = A[y]
                    if j != i and cnt[i, j] == 1:
                        s -= W[i, j]
                g_a[x] = s
            for y in range(nb):
                i = B[y]
                s = 0.0
                for x in range(na):
                    j = A[x]
                    if cnt[i, j] == 0:
                        s += W[i, j]
                for x in range(nb):
                    j = B[x]
                    if j != i and cnt[i, j] == 1:
                        s -= W[i, j]
                g_b[y] = s
            for x in range(na):
                i = A[x]
                for y in range(nb):
                    j = B[y]
                    d = g_a[x] + g_b[y]
                    if cnt[i, j] == 0:
                        d -= 2.0 * W[i, j]
                    moves[pos, 0] = i
                    moves[pos, 1] = k
                    moves[pos, 2] = j
                    moves[pos, 3] = k2
                    deltas[pos] = d
                    pos += 1
    return moves, deltas


@njit(cache=True)
def _relocate_deltas_numba(W, cnt, M):
    n, K = M.shape
    total = 0
    for k in range(K):
        for k2 in range(K):
            if k2 == k:
                continue
            for v in range(n):
                if M[v, k] and not M[v, k2]:
                    total += 1
    moves = np.empty((total, 3), dtype=np.int64)
    deltas = np.empty(total)
    pos = 0
    for k in range(K):
        for k2 in range(K):
            if k2 == k:
                continue
            for i in range(n):
                if not M[i, k] or M[i, k2]:
                    continue
                d = 0.0
                for j in range(n):
                    if j == i:
                        continue
                    if M[j, k] and cnt[i, j] == 1:
                        d -= W[i, j]
                    if M[j, k2] and cnt[i, j] - M[j, k] == 0:
                        d += W[i, j]
                moves[pos, 0] = i
                moves[pos, 1] = k
                moves[pos, 2] = k2
                deltas[pos] = d
                pos += 1
    return moves, deltas


# --- stability deficit after a membership change --------------------------------
# A part (k, a, b) describes S_k losing node a and gaining node b (-1: none).
# The deficit of a community is sum over members u of max(0, half_u - tol - T_uk).

def _deficit_after_numpy(W, T, half, M, ks, outs, ins, tol):
    out = np.zeros(ks.size)
    for k in np.unique(ks):
        sel = np.flatnonzero(ks == k)
        mem = np.flatnonzero(M[:, k])
        a, b = outs[sel], ins[sel]
        has_a, has_b = a >= 0, b >= 0
        a0, b0 = np.where(has_a, a, 0), np.where(has_b, b, 0)
        gap = (half[mem] - tol - T[mem, k])[:, None]
        gap = gap + W[np.ix_(mem, a0)] * has_a - W[np.ix_(mem, b0)] * has_b
        gap[mem[:, None] == a[None, :]] = 0.0
        total = np.maximum(gap, 0.0).sum(axis=0)
        own = half[b0] - tol - T[b0, k] + W[b0, a0] * has_a
        out[sel] = total + np.where(has_b, np.maximum(own, 0.0), 0.0)
    return out


@njit(cache=True)
def _deficit_after_numba(W, T, half, M, ks, outs, ins, tol):
    n = M.shape[0]
    out = np.zeros(ks.size)
    for t in range(ks.size):
        k, a, b = ks[t], outs[t], ins[t]
        total = 0.0
        for u in range(n):
            if not M[u, k] or u == a:
                continue
            g = half[u] - tol - T[u, k]
            if a >= 0:
                g += W[u, a]
            if b >= 0:
                g -= W[u, b]
            if g > 0.0:
                total += g
        if b >= 0:
            g = half[b] - tol - T[b, k]
            if a >= 0:
                g += W[b, a]
            if g > 0.0:
                total += g
        out[t] = total
    return out


_IMPLS = {
    "numpy": (_single_deltas_numpy, _swap_deltas_numpy, _relocate_deltas_numpy,
              _deficit_after_numpy),
    "numba": (_single_deltas_numba, _swap_deltas_numba, _relocate_deltas_numba,
              _deficit_after_numba),
}
_backend = requested_backend()


def use_backend(name):
    """Switch kernel implementation; returns the previous backend name."""
    global _backend
    if name not in _IMPLS:
        raise ValueError(f"unknown backend {name!r}")
    if name == "numba" and not HAS_NUMBA:
        raise ImportError("numba is not installed")
    prev, _backend = _backend, name
    return prev


def current_backend():
    return _backend


def single_move_deltas(W, cnt, M):
    """Add deltas (``i`` outside ``S_k``) and Remove deltas (``i`` inside), NaN elsewhere."""
    return _IMPLS[_backend][0](W, cnt, M)


def relocate_move_deltas(W, cnt, M):
    """Rows ``(i, k, k2)``: ``i`` leaves ``S_k`` and joins ``S_k2`` in one step."""
    return _IMPLS[_backend][2](W, cnt, M)


def swap_move_deltas(W, cnt, M):
    """Rows ``(i, k, i2, k2)`` with ``k < k2``, ``i`` in ``S_k - S_k2``, ``i2`` in ``S_k2 - S_k``."""
    return _IMPLS[_backend][1](W, cnt, M)


def deficit_after(W, T, half, M, ks, outs, ins, tol):
    """Stability deficit of ``S_k - a + b`` for every part ``(ks[t], outs[t], ins[t])``.

    ``T[u, k]`` is the weight from ``u`` into ``S_k`` and ``half[u]`` half of
    ``u``'s total weight; ``-1`` in ``outs``/``ins`` means no node leaves/joins.
    """
    ks, outs, ins = (np.ascontiguousarray(x, dtype=np.int64) for x in (ks, outs, ins))
    return _IMPLS[_backend][3](W, T, half, M, ks, outs, ins, float(tol))
