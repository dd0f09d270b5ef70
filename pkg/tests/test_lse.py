import numpy as np
import pytest
from hypothesis import assume, given, strategies as st

from coalition import kernels, lse
from coalition.graph import karate_club, load_edge_list
from coalition.lse import (ADD, REMOVE, SWAP, LseBootstrapError, LseConfig, Move,
                           apply_move, diagnostics_jsonl, feasible_moves, initial_structure,
                           move_delta, run_lse)
from coalition.milp import brute_force_optimum
from coalition.stability import (CommunityStructure, is_stable, structure_objective,
                                 validate_structure)
from coalition.weights import exact_modular_weights, raw_weights

from conftest import random_cover, random_graph, random_symmetric


def test_move_keys_and_order():
    assert Move.add(3, 1).key == (3, 1, ADD)
    assert Move.remove(3, 1).key == (3, 1, REMOVE)
    assert Move.swap(5, 2, 4, 0).key == (4, 0, 5, 2, SWAP)
    assert Move.relocate(1, 0, 2).kind == "relocate"
    assert sorted([Move.remove(0, 0, 9.0), Move.add(0, 0, -1.0)])[0].kind == "add"


def test_grand_coalition_with_p1_has_no_moves(path3):
    w = raw_weights(path3)
    pi = CommunityStructure([{0, 1, 2}], 3, 2, 1)
    assert feasible_moves(w, pi) == []
    assert feasible_moves(w, pi, relocate=True) == []


def test_add_present_iff_enlarged_community_stable():
    g = load_edge_list("0 1\n1 2\n0 2\n3 4\n4 5\n3 5\n2 3\n")
    W = exact_modular_weights(g).values
    pi = CommunityStructure([{0, 1, 2}, {3, 4, 5}], 6, 2, 2)
    assert validate_structure(W, pi) == []
    adds = {mv.key[:2] for mv in feasible_moves(W, pi) if mv.kind == "add"}
    for k, comm in enumerate(pi.communities):
        for i in set(range(6)) - comm:
            bigger = comm | {i}
            assert ((i, k) in adds) == is_stable(W, bigger)


def test_swaps_only_between_exclusive_members(rng):
    W = random_symmetric(7, rng)
    pi = random_cover(7, 3, 2, rng)
    for mv in feasible_moves(W, pi, bootstrap=True):
        if mv.kind == "swap":
            i, k, i2, k2, _ = mv.key
            assert k < k2
            assert i in pi.communities[k] and i not in pi.communities[k2]
            assert i2 in pi.communities[k2] and i2 not in pi.communities[k]


def test_add_with_full_overlap_has_zero_delta(rng):
    W = random_symmetric(5, rng)
    pi = CommunityStructure([{0, 1, 2}, {1, 3, 4}, {0, 2}], 5, 3, 3)
    assert move_delta(W, pi, Move.add(1, 2)) == pytest.approx(0.0)


def _feasible_instance(seed):
    rng = np.random.default_rng(seed)
    g = random_graph(8, 0.45, rng)
    W = exact_modular_weights(g).values
    try:
        pi, _, _ = run_lse(W, g, 3, 2, LseConfig(t_max=1, seed=seed))
    except LseBootstrapError:
        return W, None
    return W, pi


@given(st.integers(0, 10_000))
def test_feasible_moves_preserve_feasibility(seed):
    W, pi = _feasible_instance(seed)
    assume(pi is not None)
    for mv in feasible_moves(W, pi, relocate=True):
        after = apply_move(pi, mv)
        assert validate_structure(W, after) == [], mv
        assert mv.delta == pytest.approx(structure_objective(W, after) - structure_objective(W, pi),
                                         abs=1e-9)


@given(st.integers(0, 10_000))
def test_move_delta_matches_recomputation(seed):
    rng = np.random.default_rng(seed)
    W = random_symmetric(8, rng)
    pi = random_cover(8, 3, 2, rng)
    base = structure_objective(W, pi)
    for mv in feasible_moves(W, pi, bootstrap=True, relocate=True):
        want = structure_objective(W, apply_move(pi, mv)) - base
        assert abs(move_delta(W, pi, mv) - want) <= 1e-9
        assert abs(mv.delta - want) <= 1e-9


def test_remove_then_add_restores(rng):
    W = random_symmetric(6, rng)
    pi = CommunityStructure([{0, 1, 2, 3}, {3, 4, 5}], 6, 2, 2)
    rem = Move.remove(3, 0)
    mid = apply_move(pi, rem)
    back = Move.add(3, 0)
    assert move_delta(W, pi, rem) + move_delta(W, mid, back) == pytest.approx(0.0, abs=1e-12)
    assert apply_move(mid, back) == pi


def test_initial_structures(path3):
    g = karate_club()
    w = exact_modular_weights(g)
    a = initial_structure(g, w, 3, 2, seed=4)
    assert a == initial_structure(g, w, 3, 2, seed=4)
    assert all(len(c) == 1 for c in a.membership)
    d = initial_structure(g, w, 3, 2, lse.DISJOINT_FIRST, seed=4)
    assert all(len(c) == 1 for c in d.membership)
    assert validate_structure(w, d) == []
    with pytest.raises(ValueError):
        initial_structure(g, w, 3, 2, "greedy")


def test_config_validation():
    with pytest.raises(ValueError):
        LseConfig(t_max=0)
    with pytest.raises(ValueError):
        LseConfig(start_strategy=lse.PROVIDED)
    assert LseConfig().relocate_for(1) and not LseConfig().relocate_for(2)
    assert LseConfig(relocate=True).relocate_for(3)
    assert not LseConfig(relocate=False).relocate_for(1)


def test_run_lse_deterministic_and_valid():
    g = karate_club()
    w = exact_modular_weights(g)
    a = run_lse(w, g, 3, 2, LseConfig(t_max=3, seed=11))
    b = run_lse(w, g, 3, 2, LseConfig(t_max=3, seed=11))
    assert a[0] == b[0] and a[1] == b[1]
    assert validate_structure(w, a[0]) == []
    assert a[1] == pytest.approx(structure_objective(w, a[0]), abs=1e-6)
    assert len(a[2]) == 3 and all("end_objective" in d or "error" in d for d in a[2])
    lines = diagnostics_jsonl(a[2]).splitlines()
    assert len(lines) == 3


def test_p1_output_is_a_partition():
    g = karate_club()
    pi, _, _ = run_lse(exact_modular_weights(g), g, 4, 1, LseConfig(t_max=3))
    assert all(len(c) == 1 for c in pi.membership)


def test_objective_monotone_after_feasibility():
    g = karate_club()
    w = exact_modular_weights(g)
    _, _, diags = run_lse(w, g, 3, 2, LseConfig(t_max=4, record_trajectory=True))
    for d in diags:
        if "error" in d:
            continue
        tail = d["trajectory"][-(d["iterations"] + 1):]
        assert tail[0] == pytest.approx(d["feasible_objective"])
        assert all(b > a for a, b in zip(tail, tail[1:]))


def test_bootstrap_disabled_on_infeasible_start(path3):
    w = exact_modular_weights(path3)
    bad = CommunityStructure([{0, 2}, {1}], 3, 2, 1)
    assert validate_structure(w, bad) != []
    cfg = LseConfig(t_max=1, start_strategy=lse.PROVIDED, initial=bad, bootstrap=False)
    with pytest.raises(LseBootstrapError) as info:
        run_lse(w, path3, 2, 1, cfg)
    assert info.value.diagnostics and info.value.diagnostics[0]["status"] == "infeasible_start"


def test_provided_feasible_start_is_kept_when_optimal(path3):
    w = raw_weights(path3)
    grand = CommunityStructure([{0, 1, 2}], 3, 1, 1)
    cfg = LseConfig(t_max=1, start_strategy=lse.PROVIDED, initial=grand)
    pi, value, diags = run_lse(w, path3, 1, 1, cfg)
    assert pi == grand and diags[0]["iterations"] == 0


def test_never_exceeds_brute_force():
    rng = np.random.default_rng(5)
    for _ in range(15):
        g = random_graph(7, 0.4, rng)
        w = exact_modular_weights(g)
        _, best = brute_force_optimum(w, 2, 2)
        try:
            _, value, _ = run_lse(w, g, 2, 2, LseConfig(t_max=10, seed=int(rng.integers(1 << 30))))
        except LseBootstrapError:
            continue
        assert value <= best + 1e-9


class _FakeState:
    """Just enough of the search state for select_move."""

    def __init__(self, singles, swaps, infeasible=()):
        self._singles = singles
        self._swaps = swaps
        self._bad = set(infeasible)

    def candidates(self):
        return [(np.array([k[:2] for k, _ in self._singles]), ADD,
                 np.array([d for _, d in self._singles]))]

    def swap_candidates(self):
        return [(np.array([k[:4] for k, _ in self._swaps]), SWAP,
                 np.array([d for _, d in self._swaps]))]

    def can(self, key, check_stable):
        return key not in self._bad


def test_swap_must_strictly_beat_best_single():
    tie = _FakeState([((0, 1, ADD), 2.0)], [((0, 0, 1, 1, SWAP), 2.0)])
    assert lse.select_move(tie).key == (0, 1, ADD)
    better = _FakeState([((0, 1, ADD), 2.0)], [((0, 0, 1, 1, SWAP), 2.5)])
    assert lse.select_move(better).key == (0, 0, 1, 1, SWAP)
    none = _FakeState([((0, 1, ADD), -1.0)], [((0, 0, 1, 1, SWAP), -0.5)])
    assert lse.select_move(none) is None


def test_ties_go_to_smallest_key_and_infeasible_skipped():
    st_ = _FakeState([((3, 0, ADD), 1.0), ((1, 2, ADD), 1.0), ((0, 0, ADD), 0.5)],
                     [((0, 0, 1, 1, SWAP), 0.1)])
    assert lse.select_move(st_).key == (1, 2, ADD)
    blocked = _FakeState([((3, 0, ADD), 1.0), ((1, 2, ADD), 1.0)], [((0, 0, 1, 1, SWAP), 0.1)],
                         infeasible=[(1, 2, ADD), (3, 0, ADD)])
    assert lse.select_move(blocked).key == (0, 0, 1, 1, SWAP)


def test_backends_give_identical_search():
    if not kernels.HAS_NUMBA:
        pytest.skip("numba not installed")
    g = karate_club()
    w = exact_modular_weights(g)
    results = []
    for backend in ("numpy", "numba"):
        prev = kernels.use_backend(backend)
        try:
            results.append(run_lse(w, g, 3, 2, LseConfig(t_max=3, seed=2))[:2])
        finally:
            kernels.use_backend(prev)
    assert results[0][0] == results[1][0]
    assert results[0][1] == pytest.approx(results[1][1], abs=1e-9)


def test_process_pool_matches_serial(monkeypatch):
    g = karate_club()
    w = exact_modular_weights(g)
    serial = run_lse(w, g, 3, 2, LseConfig(t_max=2, seed=9))
    monkeypatch.setenv("COALITION_THREADS", "2")
    pooled = run_lse(w, g, 3, 2, LseConfig(t_max=2, seed=9))
    assert serial[0] == pooled[0] and serial[1] == pooled[1]
