"""End-to-end acceptance checks; each prints one PASS/FAIL line."""
import itertools
import time

import numpy as np
import pytest

from coalition.bench_gen import GeneratorConfig, generate
from coalition.graph import Graph, karate_club, load_edge_list
from coalition.lse import (LseBootstrapError, LseConfig, apply_move, feasible_moves, move_delta,
                           run_lse)
from coalition.metrics import confusion_rates, evaluate, omega_index, overlapping_nmi
from coalition.milp import (brute_force_optimum, build_f_sh_jk, build_f_sh_mod, export_lp,
                            import_solution)
from coalition.null_model import (all_event_probabilities, expected_match_count, p_adjacency,
                                  p_common_neighbour, p_triangle)
from coalition.stability import structure_objective
from coalition.weights import (approx_modular_weights, exact_modular_weights,
                               expected_weight_matrix, raw_weights)

from conftest import random_cover, random_graph, random_symmetric
from test_metrics import random_cover as random_metric_cover
from test_milp import solve_lp
from test_weights import oracle_expected_weights


@pytest.fixture
def report(capsys):
    def emit(name, ok, detail=""):
        with capsys.disabled():
            print(f"\n{'PASS' if ok else 'FAIL'} {name}: {detail}")
        assert ok, detail
    return emit


def _degree_sequences(rng, count, max_edges=5):
    seqs = []
    while len(seqs) < count:
        n = int(rng.integers(2, 7))
        seq = rng.integers(0, 5, size=n).tolist()
        total = sum(seq)
        if total % 2 == 0 and 2 <= total <= 2 * max_edges:
            seqs.append(seq)
    return seqs


def test_null_model_exactness(report):
    start = time.perf_counter()
    rng = np.random.default_rng(2024)
    worst = 0.0
    for seq in _degree_sequences(rng, 200):
        m = sum(seq) // 2
        adj, com, tri = all_event_probabilities(seq)
        for i, j in itertools.permutations(range(len(seq)), 2):
            worst = max(worst, abs(p_adjacency(seq[i], seq[j], m) - adj[i, j]))
            for r in set(range(len(seq))) - {i, j}:
                ki, kj, kr = seq[i], seq[j], seq[r]
                worst = max(worst, abs(p_common_neighbour(ki, kj, kr, m) - com[i, j, r]),
                            abs(p_triangle(ki, kj, kr, m) - tri[i, j, r]))
    elapsed = time.perf_counter() - start
    report("1 null-model exactness", worst <= 1e-9 and elapsed < 30,
           f"200 sequences, max error {worst:.2e}, {elapsed:.1f}s")


def test_expected_edge_identity(report):
    # every degree multiset with 2..6 nodes and m <= 5; the identity is label-free
    bad = cases = 0
    for n in range(2, 7):
        for seq in itertools.combinations_with_replacement(range(6), n):
            total = sum(seq)
            if total % 2 or not 2 <= total <= 10:
                continue
            m = total // 2
            for i, j in itertools.combinations(range(n), 2):
                cases += 1
                got = float(expected_match_count(seq, i, j))
                bad += abs(got - seq[i] * seq[j] / (2 * m - 1)) > 1e-12
    report("2 expected-edge identity", bad == 0, f"{cases} pairs, {bad} mismatches")


def test_expected_weight_exactness(report):
    rng = np.random.default_rng(77)
    graphs = [load_edge_list(t) for t in ("0 1\n1 2\n0 2\n", "0 1\n1 2\n", "0 1\n1 2\n2 3\n1 3\n",
                                           "0 1\n2 3\n", "0 1\n0 2\n0 3\n1 2\n",
                                           "0 1\n1 2\n2 3\n3 4\n4 0\n")]
    while len(graphs) < 25:
        n = int(rng.integers(3, 7))
        pairs = list(itertools.combinations(range(n), 2))
        m = int(rng.integers(1, min(5, len(pairs)) + 1))
        chosen = [pairs[t] for t in rng.choice(len(pairs), size=m, replace=False)]
        graphs.append(Graph(n, chosen))
    worst = 0.0
    for g in graphs:
        want = oracle_expected_weights(g.degree.tolist())
        got = expected_weight_matrix(g)
        worst = max(worst, float(np.max(np.abs(np.triu(got - want, 1)))))
    report("3 expected-weight exactness", worst <= 1e-9,
           f"{len(graphs)} graphs with m <= 5, max error {worst:.2e}")


@pytest.mark.parametrize("variant,n_c,target", [("exact", 3, 157.652), ("approx", 3, 122.578),
                                                ("exact", 4, 162.469)])
def test_karate_table(report, variant, n_c, target):
    g = karate_club()
    w = exact_modular_weights(g) if variant == "exact" else approx_modular_weights(g)
    start = time.perf_counter()
    pi, value, diags = run_lse(w, g, n_c, 2, LseConfig(t_max=10, seed=0))
    elapsed = time.perf_counter() - start
    hit = abs(value - target) <= 0.01 and elapsed < 120
    if n_c == 4 and not hit:
        # near-miss allowance: at least 162.0, reported with diagnostics
        hit = value >= 162.0 and elapsed < 120
    report(f"4 karate n_c={n_c} p=2 {variant}", hit,
           f"objective {value:.3f} (target {target}), {elapsed:.1f}s, "
           f"{len(pi.communities)} communities, bridges {sorted(pi.bridge_nodes())}")


def test_raw_degeneracy(report):
    start = time.perf_counter()
    hits = 0
    for s in range(40):
        rng = np.random.default_rng(s)
        n = 5 + s % 2
        g = random_graph(n, 0.4, rng)
        pi, _ = brute_force_optimum(raw_weights(g), 3, 3, "shapley_sum")
        hits += all(len(c) == n - 1 for c in pi.communities)
    elapsed = time.perf_counter() - start
    report("5 raw-weight degeneracy", hits >= 38 and elapsed < 300,
           f"{hits}/40 optima made of size n-1 communities, {elapsed:.1f}s")


def test_lse_optimality(report):
    matched = exceeded = failed = 0
    for s in range(100):
        rng = np.random.default_rng(1000 + s)
        n = int(rng.integers(5, 9))
        p = int(rng.integers(1, 3))
        g = random_graph(n, 0.4, rng)
        w = exact_modular_weights(g)
        _, best = brute_force_optimum(w, 2, p)
        try:
            _, value, _ = run_lse(w, g, 2, p, LseConfig(t_max=50, seed=s))
        except LseBootstrapError:
            failed += 1
            continue
        exceeded += value > best + 1e-9
        matched += abs(value - best) <= 1e-6
    report("6 LSE optimality", matched >= 80 and exceeded == 0,
           f"{matched}/100 matched brute force, {exceeded} exceeded, {failed} bootstrap failures")


def test_delta_correctness(report):
    checked = 0
    worst = 0.0
    seed = 0
    while checked < 10_000:
        rng = np.random.default_rng(seed)
        seed += 1
        n = int(rng.integers(4, 11))
        n_c = int(rng.integers(2, 5))
        p = int(rng.integers(1, n_c + 1))
        W = random_symmetric(n, rng)
        pi = random_cover(n, n_c, p, rng)
        base = structure_objective(W, pi)
        for mv in feasible_moves(W, pi, bootstrap=True, relocate=True):
            want = structure_objective(W, apply_move(pi, mv)) - base
            worst = max(worst, abs(move_delta(W, pi, mv) - want), abs(mv.delta - want))
            checked += 1
    report("7 delta correctness", worst <= 1e-9, f"{checked} moves, max error {worst:.2e}")


def test_generator_recovery(report):
    start = time.perf_counter()
    nmi, omega = [], []
    for s in range(20):
        g, truth = generate(GeneratorConfig(N=40, n_c=4, p=1, mu=0.1, seed=s))
        pi, _, _ = run_lse(exact_modular_weights(g), g, 4, 1, LseConfig(t_max=5, seed=s))
        r = evaluate(pi, truth.communities, truth.bridge_nodes, g.n)
        nmi.append(r.nmi)
        omega.append(r.omega)
    elapsed = time.perf_counter() - start
    ok = np.mean(nmi) >= 0.75 and np.mean(omega) >= 0.85 and elapsed < 600
    report("8 generator recovery", ok,
           f"mean NMI {np.mean(nmi):.3f}, mean Omega {np.mean(omega):.3f}, {elapsed:.1f}s")


def test_metric_identities(report):
    rng = np.random.default_rng(9)
    bad = 0
    for _ in range(50):
        n = int(rng.integers(3, 20))
        a = random_metric_cover(n, rng, max_comms=5)
        bad += max(abs(overlapping_nmi(a, a, n) - 1.0), abs(omega_index(a, a, n) - 1.0)) > 1e-12
    for _ in range(100):
        tp, tn, fp, fn = (int(x) for x in rng.integers(1, 50, size=4))
        r = confusion_rates(tp, tn, fp, fn)
        want = {"accuracy": (tp + tn) / (tp + tn + fp + fn), "tpr": tp / (tp + fn),
                "fpr": fp / (tn + fp), "precision": tp / (tp + fp),
                "f1": 2 * tp / (2 * tp + fp + fn)}
        want["auc"] = (1 - want["fpr"] + want["tpr"]) / 2
        bad += any(r[k] != v for k, v in want.items())
    report("9 metric identities", bad == 0, f"50 covers, 100 confusion tables, {bad} mismatches")


def test_milp_round_trip(report, tmp_path):
    reparsed = 0
    rng = np.random.default_rng(4)
    models = []
    for _ in range(3):
        g = random_graph(5, 0.5, rng)
        models += [build_f_sh_jk(raw_weights(g), 2), build_f_sh_mod(exact_modular_weights(g), 2, 2)]
    for model in models:
        _, _, _, h = solve_lp(export_lp(model), tmp_path)
        lp = h.getLp()
        reparsed += lp.num_col_ == len(model.variables) and lp.num_row_ == len(model.constraints)
    g = load_edge_list("0 1\n2 3\n")
    w = exact_modular_weights(g)
    model = build_f_sh_mod(w, 2, 1)
    sol = "x_0_1 1\nx_1_1 1\nx_2_1 0\nx_3_1 0\nx_0_2 0\nx_1_2 0\nx_2_2 1\nx_3_2 1\n"
    decoded = import_solution(model, sol)
    optimum, _ = brute_force_optimum(w, 2, 1)
    ok = reparsed == len(models) and decoded.structure == optimum and not decoded.violations
    report("10 MILP round trip", ok,
           f"{reparsed}/{len(models)} LP files re-parsed, 4-node solution decoded to "
           f"{[sorted(c) for c in decoded.structure.communities]}")
