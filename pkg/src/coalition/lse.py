"""Local stability exploration: steepest-ascent search over community covers.

Each iteration evaluates the neighbourhoods of the current structure:

Add(i, k)
    ``i`` joins ``S_k``.
Remove(i, k)
    ``i`` leaves ``S_k``.
Swap(i, k, i2, k2)
    ``i`` moves from ``S_k`` to ``S_k2`` while ``i2`` moves the other way.
Relocate(i, k, k2)
    ``i`` leaves ``S_k`` and joins ``S_k2`` in one step. Optional; see
    :attr:`LseConfig.relocate`.

The objective counts the weight of every co-member pair once, so a move
only changes it through pairs whose co-membership count crosses zero.
Those deltas come from :mod:`coalition.kernels`; feasibility is checked
incrementally, and only for candidates that could win.
"""
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
import json

import numpy as np

from . import kernels
from ._accel import thread_count
from .stability import (CommunityStructure, STABILITY_TOL, structure_objective,
                        validate_structure)
from .weights import as_array

RANDOM_ASSIGNMENT = "random_assignment"
DISJOINT_FIRST = "disjoint_first"
PROVIDED = "provided"
STRATEGIES = (RANDOM_ASSIGNMENT, DISJOINT_FIRST, PROVIDED)

ADD, REMOVE, SWAP, RELOCATE = 1, 2, 3, 4

# Moves whose delta is below this are treated as non-improving, so rounding
# noise cannot make a zero-gain move and its inverse cycle forever.
IMPROVEMENT_EPS = 1e-10
# Deltas this close to the best are ties, broken by the smallest move tuple.
TIE_EPS = 1e-12


class LseBootstrapError(RuntimeError):
    def __init__(self, message, diagnostics=()):
        super().__init__(message)
        self.diagnostics = list(diagnostics)


@dataclass(frozen=True, order=True)
class Move:
    """A move as its tuple: ``(i, k, 1)`` add, ``(i, k, 2)`` remove,
    ``(i, k, i2, k2, 3)`` swap with ``k < k2``, ``(i, k, k2, 4)`` relocate.

    ``delta`` does not take part in ordering.
    """
    key: tuple
    delta: float = field(default=0.0, compare=False)

    @property
    def kind(self):
        return {ADD: "add", REMOVE: "remove", SWAP: "swap", RELOCATE: "relocate"}[self.key[-1]]

    @classmethod
    def add(cls, i, k, delta=0.0):
        return cls((int(i), int(k), ADD), float(delta))

    @classmethod
    def remove(cls, i, k, delta=0.0):
        return cls((int(i), int(k), REMOVE), float(delta))

    @classmethod
    def swap(cls, i, k, i2, k2, delta=0.0):
        if k > k2:
            i, k, i2, k2 = i2, k2, i, k
        return cls((int(i), int(k), int(i2), int(k2), SWAP), float(delta))

    @classmethod
    def relocate(cls, i, k, k2, delta=0.0):
        return cls((int(i), int(k), int(k2), RELOCATE), float(delta))


@dataclass
class LseConfig:
    """Search settings.

    ``relocate`` enables the one-step Relocate move. ``None`` means "only
    when ``p == 1``": there Add breaks the membership cap and Remove breaks
    coverage, so without it only Swaps remain and community sizes can never
    change.
    """
    t_max: int = 10
    seed: int = 0
    start_strategy: str = RANDOM_ASSIGNMENT
    stability_tolerance: float = STABILITY_TOL
    bootstrap: bool = True
    initial: CommunityStructure = None
    relocate: bool = None
    max_iterations: int = 100_000
    record_trajectory: bool = False

    def __post_init__(self):
        if self.t_max < 1:
            raise ValueError("t_max must be >= 1")
        if self.start_strategy not in STRATEGIES:
            raise ValueError(f"unknown start strategy {self.start_strategy!r}")
        if self.start_strategy == PROVIDED and self.initial is None:
            raise ValueError("the provided strategy needs cfg.initial")

    def relocate_for(self, p):
        return (p == 1) if self.relocate is None else bool(self.relocate)


class _State:
    """Mutable structure with the running sums feasibility checks need.

    ``T[u, k]`` is the weight from ``u`` into ``S_k``; ``inter[k, r]`` is
    ``|S_k & S_r|``; ``cnt[i, j]`` counts the communities ``i`` and ``j``
    share (diagonal: memberships of ``i``).
    """

    def __init__(self, W, comms, p, tol, relocate=False):
        n = W.shape[0]
        K = len(comms)
        self.W = W
        self.n = n
        self.p = p
        self.tol = tol
        self.relocate = relocate
        self.half = 0.5 * W.sum(axis=1)
        M = np.zeros((n, K), dtype=np.int64)
        for k, s in enumerate(comms):
            M[sorted(s), k] = 1
        self.M = M
        self.cnt = M @ M.T
        self.T = W @ M.astype(np.float64)
        self.sizes = M.sum(axis=0)
        self.inter = M.T @ M
        self.objective = float(np.triu(W * (self.cnt > 0), k=1).sum())

    @property
    def K(self):
        return self.M.shape[1]

    def members(self, k):
        return np.flatnonzero(self.M[:, k])

    def structure(self, n_c):
        comms = [set(self.members(k).tolist()) for k in range(self.K)]
        return CommunityStructure([c for c in comms if c], self.n, n_c, self.p)

    def copy(self):
        other = object.__new__(_State)
        other.__dict__.update({k: (v.copy() if isinstance(v, np.ndarray) else v)
                               for k, v in self.__dict__.items()})
        other.W = self.W
        other.half = self.half
        return other

    def all_stable(self):
        for k in range(self.K):
            mem = self.members(k)
            if np.any(self.T[mem, k] < self.half[mem] - self.tol):
                return False
        return True

    def has_inclusion(self):
        for k in range(self.K):
            for r in range(self.K):
                if k != r and self.inter[k, r] == self.sizes[k]:
                    return True
        return False

    def feasible(self):
        return self.all_stable() and not self.has_inclusion()

    # -- feasibility of moves; stability only when check_stable ------------

    def _nested(self, k, new_size, new_inter, skip=()):
        for r in range(self.K):
            if r == k or r in skip:
                continue
            if new_inter[r] == self.sizes[r] or new_inter[r] == new_size:
                return True
        return False

    def _stays_stable(self, k, leaving=None, joining=None):
        """Members of ``S_k - leaving + joining`` all meet the stability bound."""
        W, T, half, tol = self.W, self.T, self.half, self.tol
        mem = self.members(k)
        t = T[mem, k].copy()
        if leaving is not None:
            t -= W[mem, leaving]
            keep = mem != leaving
            mem, t = mem[keep], t[keep]
        if joining is not None:
            t += W[mem, joining]
            own = T[joining, k] - (W[joining, leaving] if leaving is not None else 0.0)
            if own < half[joining] - tol:
                return False
        return not np.any(t < half[mem] - tol)

    def can_add(self, i, k, check_stable):
        if self.cnt[i, i] >= self.p:
            return False
        if self._nested(k, self.sizes[k] + 1, self.inter[k] + self.M[i]):
            return False
        return not check_stable or self._stays_stable(k, joining=i)

    def can_remove(self, i, k, check_stable):
        if self.cnt[i, i] <= 1 or self.sizes[k] <= 1:
            return False
        if self._nested(k, self.sizes[k] - 1, self.inter[k] - self.M[i]):
            return False
        return not check_stable or self._stays_stable(k, leaving=i)

    def can_swap(self, i, k, i2, k2, check_stable):
        size_k, size_k2 = self.sizes[k], self.sizes[k2]
        # S_k and S_k2 keep their sizes and their intersection
        common = self.inter[k, k2]
        if common == size_k or common == size_k2:
            return False
        if self._nested(k, size_k, self.inter[k] - self.M[i] + self.M[i2], skip=(k2,)):
            return False
        if self._nested(k2, size_k2, self.inter[k2] - self.M[i2] + self.M[i], skip=(k,)):
            return False
        if not check_stable:
            return True
        return (self._stays_stable(k, leaving=i, joining=i2)
                and self._stays_stable(k2, leaving=i2, joining=i))

    def can_relocate(self, i, k, k2, check_stable):
        if self.sizes[k] <= 1:
            return False
        size_k, size_k2 = self.sizes[k] - 1, self.sizes[k2] + 1
        common = self.inter[k, k2]  # i is not in S_k2
        if common == size_k or common == size_k2:
            return False
        if self._nested(k, size_k, self.inter[k] - self.M[i], skip=(k2,)):
            return False
        if self._nested(k2, size_k2, self.inter[k2] + self.M[i], skip=(k,)):
            return False
        if not check_stable:
            return True
        return self._stays_stable(k, leaving=i) and self._stays_stable(k2, joining=i)

    # -- updates -------------------------------------------------------------

    def _join(self, i, k):
        mem = self.members(k)
        self.cnt[i, mem] += 1
        self.cnt[mem, i] += 1
        self.cnt[i, i] += 1
        self.M[i, k] = 1
        self.T[:, k] += self.W[:, i]
        self.sizes[k] += 1
        row = self.M[i].copy()
        row[k] = 0
        self.inter[k] += row
        self.inter[:, k] += row
        self.inter[k, k] = self.sizes[k]

    def _leave(self, i, k):
        self.M[i, k] = 0
        mem = self.members(k)
        self.cnt[i, mem] -= 1
        self.cnt[mem, i] -= 1
        self.cnt[i, i] -= 1
        self.T[:, k] -= self.W[:, i]
        self.sizes[k] -= 1
        row = self.M[i].copy()
        row[k] = 0
        self.inter[k] -= row
        self.inter[:, k] -= row
        self.inter[k, k] = self.sizes[k]

    def apply(self, move):
        key = move.key
        kind = key[-1]
        if kind == ADD:
            self._join(key[0], key[1])
        elif kind == REMOVE:
            self._leave(key[0], key[1])
        elif kind == SWAP:
            i, k, i2, k2, _ = key
            self._leave(i, k)
            self._leave(i2, k2)
            self._join(i, k2)
            self._join(i2, k)
        else:
            i, k, k2, _ = key
            self._leave(i, k)
            self._join(i, k2)
        self.objective += move.delta

    # -- candidate generation -----------------------------------------------

    def candidates(self):
        """Structurally possible single-community moves (feasibility unchecked).

        Returns ``(rows, kind, deltas)`` blocks: ``rows`` holds the move key
        without its kind tag, one move per row.
        """
        W, cnt, M = self.W, self.cnt, self.M
        add, rem = kernels.single_move_deltas(W, cnt, M)
        blocks = []
        for kind, table in ((ADD, add), (REMOVE, rem)):
            ii, kk = np.nonzero(~np.isnan(table))
            blocks.append((np.stack([ii, kk], axis=1), kind, table[ii, kk]))
        if self.relocate:
            moves, deltas = kernels.relocate_move_deltas(W, cnt, M)
            blocks.append((moves, RELOCATE, deltas))
        return blocks

    def swap_candidates(self):
        moves, deltas = kernels.swap_move_deltas(self.W, self.cnt, self.M)
        return [(moves, SWAP, deltas)]

    def can(self, key, check_stable):
        kind = key[-1]
        if kind == ADD:
            return self.can_add(key[0], key[1], check_stable)
        if kind == REMOVE:
            return self.can_remove(key[0], key[1], check_stable)
        if kind == SWAP:
            return self.can_swap(key[0], key[1], key[2], key[3], check_stable)
        return self.can_relocate(key[0], key[1], key[2], check_stable)


def _ranked(blocks, floor):
    """Moves with ``delta > floor`` as ``(key, delta)``, best first.

    Deltas within ``TIE_EPS`` of a group's best are ties, ordered by key.
    Keys are only built for moves that pass the floor.
    """
    picked = []
    for rows, kind, deltas in blocks:
        deltas = np.asarray(deltas, dtype=np.float64)
        idx = np.flatnonzero(deltas > floor)
        if idx.size:
            rows = np.asarray(rows)[idx].tolist()
            picked.extend((tuple(r) + (kind,), d) for r, d in zip(rows, deltas[idx].tolist()))
    picked.sort(key=lambda kd: -kd[1])
    out = []
    start = 0
    while start < len(picked):
        top = picked[start][1]
        stop = start + 1
        while stop < len(picked) and picked[stop][1] >= top - TIE_EPS:
            stop += 1
        out.extend(sorted(picked[start:stop]))
        start = stop
    return out


def _best_feasible(state, blocks, check_stable, floor):
    for key, delta in _ranked(blocks, floor):
        if state.can(key, check_stable):
            return Move(key, delta)
    return None


def select_move(state, check_stable=True):
    """Steepest feasible move, or None at a local optimum.

    Add, Remove (and Relocate when enabled) compete directly; a Swap wins
    only when it beats ``max(0, best of those)`` strictly.
    """
    single = _best_feasible(state, state.candidates(), check_stable, IMPROVEMENT_EPS)
    floor = max(IMPROVEMENT_EPS, single.delta if single else 0.0)
    swap = _best_feasible(state, state.swap_candidates(), check_stable, floor)
    if swap is not None and swap.delta > floor:
        return swap
    return single


# --- public helpers on CommunityStructure -------------------------------------

def _state_for(w, pi, tol=STABILITY_TOL, relocate=False):
    W = np.array(as_array(w), dtype=np.float64)
    return _State(W, list(pi.communities), pi.p, tol, relocate)


def _all_feasible(state, check_stable):
    out = []
    for key, d in _ranked(state.candidates() + state.swap_candidates(), -np.inf):
        if state.can(key, check_stable):
            out.append(Move(key, d))
    return sorted(out)


def feasible_moves(w, pi, bootstrap=False, tol=STABILITY_TOL, relocate=False):
    """Every move that keeps ``pi`` feasible, with its delta, in key order.

    Feasible means coverage, the ``pi.p`` cap, non-inclusion and (unless
    ``bootstrap``) stability of every modified community.
    """
    return _all_feasible(_state_for(w, pi, tol, relocate), not bootstrap)


def move_delta(w, pi, mv):
    """Objective change of ``mv`` from the guarded co-membership sums."""
    W = as_array(w)
    memb = pi.membership
    comms = pi.communities

    def shared(a, b):
        return len(memb[a] & memb[b])
    key = mv.key
    kind = key[-1]
    if kind == ADD:
        i, k = key[0], key[1]
        return float(sum(W[i, j] for j in comms[k] if shared(i, j) == 0))
    if kind == REMOVE:
        i, k = key[0], key[1]
        return -float(sum(W[i, j] for j in comms[k] if j != i and shared(i, j) == 1))
    if kind == RELOCATE:
        i, k, k2, _ = key
        loss = sum(W[i, j] for j in comms[k] if j != i and shared(i, j) == 1)
        after = memb[i] - {k}
        gain = sum(W[i, j] for j in comms[k2] if not (after & memb[j]))
        return float(gain - loss)
    i, k, i2, k2, _ = key
    gain_i = sum(W[i, j] for j in comms[k2] if j != i2 and shared(i, j) == 0)
    gain_i2 = sum(W[i2, j] for j in comms[k] if j != i and shared(i2, j) == 0)
    loss_i = sum(W[i, j] for j in comms[k] if j != i and j not in comms[k2]
                 and shared(i, j) == 1)
    loss_i2 = sum(W[i2, j] for j in comms[k2] if j != i2 and j not in comms[k]
                  and shared(i2, j) == 1)
    return float(gain_i + gain_i2 - loss_i - loss_i2)


def apply_move(pi, mv):
    """New :class:`CommunityStructure` after ``mv`` (community order kept)."""
    comms = [set(s) for s in pi.communities]
    key = mv.key
    kind = key[-1]
    if kind == ADD:
        comms[key[1]].add(key[0])
    elif kind == REMOVE:
        comms[key[1]].discard(key[0])
    elif kind == SWAP:
        i, k, i2, k2, _ = key
        comms[k].discard(i)
        comms[k].add(i2)
        comms[k2].discard(i2)
        comms[k2].add(i)
    else:
        i, k, k2, _ = key
        comms[k].discard(i)
        comms[k2].add(i)
    return CommunityStructure([c for c in comms if c], pi.n, pi.n_c, pi.p)


# --- search -------------------------------------------------------------------

def initial_structure(g, w, n_c, p, strategy=RANDOM_ASSIGNMENT, seed=0, provided=None):
    """Starting structure for one run of the search.

    ``random_assignment`` puts every node in one uniformly drawn community
    and drops empty ones; the result may be unstable. ``disjoint_first`` runs
    the search with ``p = 1`` from such a start and returns its output.
    """
    n = as_array(w).shape[0]
    rng = np.random.default_rng(seed)
    if strategy == PROVIDED:
        if provided is None:
            raise ValueError("provided strategy needs a structure")
        return provided
    if strategy == RANDOM_ASSIGNMENT:
        labels = rng.integers(0, n_c, size=n)
        comms = [set(np.flatnonzero(labels == k).tolist()) for k in range(n_c)]
        return CommunityStructure([c for c in comms if c], n, n_c, p)
    if strategy == DISJOINT_FIRST:
        start = initial_structure(g, w, n_c, 1, RANDOM_ASSIGNMENT, rng)
        pi, _, _ = _search(as_array(w), start, n_c, 1, LseConfig(t_max=1), rng)
        return CommunityStructure(list(pi.communities), n, n_c, p)
    raise ValueError(f"unknown start strategy {strategy!r}")


def _bootstrap(state, cfg, diag, trajectory):
    """Drive ``state`` to its first feasible structure, or raise."""
    budget = 10 * state.n
    moves = 0
    repairing = False
    while not state.feasible():
        if moves >= budget:
            raise LseBootstrapError(f"no feasible structure within {budget} bootstrap moves",
                                    [dict(diag, status="bootstrap_failed",
                                          end_objective=state.objective)])
        mv = None if repairing else select_move(state, check_stable=False)
        if mv is None:
            repairing = True
            mv = _repair_move(state)
            diag["repair_moves"] += 1
        if mv is None:
            raise LseBootstrapError("bootstrap stalled without reaching a feasible structure",
                                    [dict(diag, status="bootstrap_stalled",
                                          end_objective=state.objective)])
        state.apply(mv)
        moves += 1
        diag["bootstrap_moves"] += 1
        if trajectory is not None:
            trajectory.append(state.objective)


def _search(W, start, n_c, p, cfg, seed):
    """One steepest-ascent run; returns (structure, objective, diagnostics).

    An infeasible start goes through a bootstrap of at most ``10 n`` moves:
    steepest ascent with stability unchecked and, once that stalls, repair
    moves that shrink the stability deficit. If that fails for ``p > 1`` and
    the start is a partition, the bootstrap is retried from the start with
    at most one community per node; a stable partition is feasible for any
    ``p``. The first feasible structure switches the search to fully
    checked moves under the real ``p``.
    """
    W = np.array(W, dtype=np.float64)
    tol = cfg.stability_tolerance
    state = _State(W, list(start.communities), p, tol, cfg.relocate_for(p))
    start_objective = state.objective
    diag = {"seed": _seed_repr(seed), "iterations": 0, "bootstrap_moves": 0,
            "repair_moves": 0, "start_objective": start_objective}
    trajectory = [start_objective] if cfg.record_trajectory else None

    if not state.feasible():
        if not cfg.bootstrap:
            raise LseBootstrapError("start structure is infeasible and bootstrap is off",
                                    [dict(diag, status="infeasible_start")])
        try:
            _bootstrap(state, cfg, diag, trajectory)
        except LseBootstrapError:
            if p == 1 or max(len(c) for c in start.membership) > 1:
                raise
            diag["bootstrap_fallback"] = True
            state = _State(W, list(start.communities), 1, tol, cfg.relocate_for(1))
            if trajectory is not None:
                trajectory.append(start_objective)
            _bootstrap(state, cfg, diag, trajectory)
            state.p = p
            state.relocate = cfg.relocate_for(p)
    diag["feasible_objective"] = state.objective

    while diag["iterations"] < cfg.max_iterations:
        mv = select_move(state, check_stable=True)
        if mv is None:
            break
        state.apply(mv)
        diag["iterations"] += 1
        if trajectory is not None:
            trajectory.append(state.objective)

    pi = state.structure(n_c)
    final = structure_objective(W, pi)
    if abs(final - state.objective) > 1e-6:
        raise RuntimeError(f"tracked objective {state.objective} drifted from {final}")
    diag["end_objective"] = final
    diag["status"] = "ok"
    if trajectory is not None:
        diag["trajectory"] = trajectory
    return pi, final, diag


def stability_deficit(state):
    """Total shortfall of members below their stability bound (0 iff all stable)."""
    return sum(_community_deficit(state, k) for k in range(state.K))


def _parts(rows, kind):
    """Communities touched by each move as ``(k, leaving, joining)`` columns."""
    rows = np.asarray(rows, dtype=np.int64)
    none = np.full(len(rows), -1, dtype=np.int64)
    if kind == ADD:
        return [(rows[:, 1], none, rows[:, 0])]
    if kind == REMOVE:
        return [(rows[:, 1], rows[:, 0], none)]
    if kind == RELOCATE:
        return [(rows[:, 1], rows[:, 0], none), (rows[:, 2], none, rows[:, 0])]
    return [(rows[:, 1], rows[:, 0], rows[:, 2]), (rows[:, 3], rows[:, 2], rows[:, 0])]


def deficit_changes(state, rows, kind):
    """Change of the total stability deficit for each move in ``rows``."""
    base = np.array([_community_deficit(state, k) for k in range(state.K)])
    change = np.zeros(len(rows))
    for ks, outs, ins in _parts(rows, kind):
        after = kernels.deficit_after(state.W, state.T, state.half, state.M,
                                      ks, outs, ins, state.tol)
        change += after - base[ks]
    return change


def _community_deficit(state, k):
    mem = state.members(k)
    return float(np.maximum(state.half[mem] - state.T[mem, k] - state.tol, 0.0).sum())


def _relevant_rows(state, blocks):
    """Keep moves that touch an unstable member or a community holding one."""
    unstable = (state.T < state.half[:, None] - state.tol) & (state.M == 1)
    troubled = unstable.any(axis=0)
    kept = []
    for rows, kind, deltas in blocks:
        rows = np.asarray(rows)
        if rows.size == 0:
            continue
        if kind == ADD:
            mask = troubled[rows[:, 1]]
        elif kind in (REMOVE, RELOCATE):
            mask = unstable[rows[:, 0], rows[:, 1]]
        else:
            mask = unstable[rows[:, 0], rows[:, 1]] | unstable[rows[:, 2], rows[:, 3]]
        kept.append((rows[mask], kind, np.asarray(deltas)[mask]))
    return kept


def _repair_move(state):
    """Move that lowers the stability deficit most (ties: larger delta, smaller key).

    Only moves that take a currently unstable member out of its community,
    or that add to a community with unstable members, are tried. Relocation
    is among them even when the search itself runs without it. The deficit
    strictly decreases along repair moves, so the phase cannot cycle.
    """
    blocks = state.candidates() + state.swap_candidates()
    if not state.relocate:
        moves, deltas = kernels.relocate_move_deltas(state.W, state.cnt, state.M)
        blocks.append((moves, RELOCATE, deltas))
    ranked = []
    for rows, kind, deltas in _relevant_rows(state, blocks):
        if len(rows) == 0:
            continue
        change = deficit_changes(state, rows, kind)
        keep = np.flatnonzero(change < -TIE_EPS)
        for t, r in zip(keep.tolist(), rows[keep].tolist()):
            ranked.append((change[t], -deltas[t], tuple(r) + (kind,)))
    ranked.sort()
    for change, neg_delta, key in ranked:
        if state.can(key, False):
            return Move(key, float(-neg_delta))
    return None


def _seed_repr(seed):
    if isinstance(seed, np.random.SeedSequence):
        return [int(seed.entropy) if seed.entropy is not None else None,
                list(seed.spawn_key)]
    if isinstance(seed, (int, np.integer)):
        return int(seed)
    return None


def _one_start(args):
    W, g, n_c, p, cfg, index, seq = args
    rng = np.random.default_rng(seq)
    try:
        if cfg.start_strategy == PROVIDED:
            start = cfg.initial
        else:
            start = initial_structure(g, W, n_c, p, cfg.start_strategy, rng)
        pi, value, diag = _search(W, start, n_c, p, cfg, seq)
    except LseBootstrapError as exc:
        diag = exc.diagnostics[0] if exc.diagnostics else {}
        diag = dict(diag, start_index=index, error=str(exc))
        return None, None, diag
    diag["start_index"] = index
    return pi, value, diag


def run_lse(w, g, n_c, p, cfg=None):
    """Multi-start search; returns ``(structure, objective, diagnostics)``.

    Start ``t`` draws from ``SeedSequence(cfg.seed).spawn(t_max)[t]``. The
    best objective wins; equal objectives go to the smaller canonical key.
    Starts that fail the bootstrap are recorded; if every start fails an
    :class:`LseBootstrapError` carries all diagnostics.
    """
    cfg = cfg or LseConfig()
    if n_c < 1 or p < 1:
        raise ValueError("n_c and p must be >= 1")
    W = np.array(as_array(w), dtype=np.float64)
    seqs = np.random.SeedSequence(cfg.seed).spawn(cfg.t_max)
    jobs = [(W, g, n_c, p, cfg, t, seqs[t]) for t in range(cfg.t_max)]
    workers = min(thread_count(), cfg.t_max)
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_one_start, jobs))
    else:
        results = [_one_start(job) for job in jobs]

    diagnostics = [r[2] for r in results]
    best = None
    for pi, value, _ in results:
        if pi is None:
            continue
        if best is None or value > best[1] + 1e-9 or (
                abs(value - best[1]) <= 1e-9 and pi.key() < best[0].key()):
            best = (pi, value)
    if best is None:
        raise LseBootstrapError(f"all {cfg.t_max} starts failed to reach a feasible structure",
                                diagnostics)
    pi = best[0].canonical()
    problems = validate_structure(W, pi, cfg.stability_tolerance)
    if problems:
        raise RuntimeError(f"search returned an infeasible structure: {problems}")
    return pi, best[1], diagnostics


def diagnostics_jsonl(diagnostics):
    """One JSON object per start, newline terminated."""
    return "".join(json.dumps(d, sort_keys=True, default=str) + "\n" for d in diagnostics)
