import itertools
import json
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from coalition.metrics import (MetricsDomainError, MetricsReport, bridge_confusion,
                               confusion_rates, evaluate, omega_index, overlapping_nmi)
from coalition.stability import CommunityStructure


def _entropy(*probs):
    return -sum(p * math.log2(p) for p in probs if p > 0)


def reference_nmi(a, b, n):
    """Overlapping NMI written out node by node from binary membership vectors."""
    def cond(X, Y):
        total = 0.0
        for x in X:
            px = len(x) / n
            hx = _entropy(px, 1 - px)
            if hx == 0:
                continue
            best = hx
            for y in Y:
                c = [[0, 0], [0, 0]]
                for v in range(n):
                    c[v in x][v in y] += 1
                p = [[c[i][j] / n for j in (0, 1)] for i in (0, 1)]
                if _entropy(p[1][1]) + _entropy(p[0][0]) <= _entropy(p[0][1]) + _entropy(p[1][0]):
                    continue
                py = len(y) / n
                joint = _entropy(p[0][0], p[0][1], p[1][0], p[1][1])
                best = min(best, joint - _entropy(py, 1 - py))
            total += best / hx
        return total / len(X)
    return 1 - 0.5 * (cond(a, b) + cond(b, a))


def reference_omega(a, b, n):
    pairs = list(itertools.combinations(range(n), 2))

    def counts(cover):
        return [sum(1 for c in cover if i in c and j in c) for i, j in pairs]
    ta, tb = counts(a), counts(b)
    T = len(pairs)
    obs = sum(x == y for x, y in zip(ta, tb)) / T
    exp = sum(ta.count(j) * tb.count(j) for j in set(ta) | set(tb)) / T ** 2
    if exp == 1:
        return None
    return (obs - exp) / (1 - exp)


def random_cover(n, rng, max_comms=4):
    cover = []
    for _ in range(int(rng.integers(1, max_comms + 1))):
        members = set(np.flatnonzero(rng.random(n) < 0.4).tolist()) or {int(rng.integers(n))}
        cover.append(members)
    return cover


def test_identical_covers():
    a = [{0, 1, 2}, {2, 3}, {4, 5}]
    assert overlapping_nmi(a, a, 6) == pytest.approx(1.0)
    assert omega_index(a, a, 6) == pytest.approx(1.0)


def test_grand_coalition_vs_singletons():
    a = [set(range(4))]
    b = [{v} for v in range(4)]
    want = reference_nmi(a, b, 4)
    assert want == pytest.approx(0.5)
    assert overlapping_nmi(a, b, 4) == pytest.approx(want, abs=1e-12)
    assert overlapping_nmi(b, a, 4) == pytest.approx(want, abs=1e-12)


def test_omega_crossed_pairs():
    a = [{0, 1}, {2, 3}]
    b = [{0, 2}, {1, 3}]
    # obs = 2/6 (pairs 03 and 12 agree on zero), exp = (4*4 + 2*2)/36
    assert omega_index(a, b, 4) == pytest.approx((1 / 3 - 20 / 36) / (1 - 20 / 36))
    assert omega_index(a, b, 4) == pytest.approx(-0.5)


def test_omega_degenerate_convention():
    assert omega_index([{0}, {1}], [{0}, {1}], 2) == 1.0
    assert omega_index([{0, 1}], [{0}, {1}], 2) == 0.0


@given(st.integers(0, 100_000), st.integers(3, 9))
def test_matches_reference(seed, n):
    rng = np.random.default_rng(seed)
    a, b = random_cover(n, rng), random_cover(n, rng)
    assert overlapping_nmi(a, b, n) == pytest.approx(reference_nmi(a, b, n), abs=1e-9)
    ref = reference_omega(a, b, n)
    if ref is not None:
        assert omega_index(a, b, n) == pytest.approx(ref, abs=1e-9)


@given(st.integers(0, 100_000), st.integers(3, 9))
def test_symmetry_and_invariances(seed, n):
    rng = np.random.default_rng(seed)
    a, b = random_cover(n, rng), random_cover(n, rng)
    nmi, om = overlapping_nmi(a, b, n), omega_index(a, b, n)
    assert 0.0 <= nmi <= 1.0 and om <= 1.0 + 1e-12
    assert nmi == pytest.approx(overlapping_nmi(b, a, n), abs=1e-12)
    assert om == pytest.approx(omega_index(b, a, n), abs=1e-12)
    perm = rng.permutation(n)
    pa = [{int(perm[v]) for v in c} for c in reversed(a)]
    pb = [{int(perm[v]) for v in c} for c in b[::-1]]
    assert overlapping_nmi(pa, pb, n) == pytest.approx(nmi, abs=1e-12)
    assert omega_index(pa, pb, n) == pytest.approx(om, abs=1e-12)
    assert omega_index(a, a[::-1], n) == pytest.approx(1.0)
    assert overlapping_nmi(a, a, n) == pytest.approx(1.0)


def test_confusion_rates_substitution():
    r = confusion_rates(2, 6, 1, 1)
    assert r["accuracy"] == pytest.approx(0.8)
    assert r["tpr"] == pytest.approx(2 / 3)
    assert r["fpr"] == pytest.approx(1 / 7)
    assert r["precision"] == pytest.approx(2 / 3)
    assert r["f1"] == pytest.approx(2 / 3)
    assert r["auc"] == pytest.approx((1 - 1 / 7 + 2 / 3) / 2)


def test_zero_division_conventions():
    r = confusion_rates(0, 0, 0, 0)
    assert r["precision"] == r["tpr"] == r["fpr"] == r["f1"] == 0.0


def test_bridge_confusion_cases():
    pi = CommunityStructure([{0, 1, 2, 3}, {3, 4, 5, 6}], 10, 2, 2)
    perfect = bridge_confusion(pi, {3}, 10)
    assert (perfect.accuracy, perfect.auc, perfect.f1) == (1.0, 1.0, 1.0)
    none = bridge_confusion([{0, 1}, {2, 3}], {4, 5}, 10)
    assert (none.tpr, none.fpr, none.auc) == (0.0, 0.0, 0.5)
    mixed = bridge_confusion([{0, 1, 2, 9}, {1, 2, 3, 9}, {5, 6}], {1, 2, 4}, 10)
    assert (mixed.tp, mixed.tn, mixed.fp, mixed.fn) == (2, 6, 1, 1)
    assert mixed.tp + mixed.tn + mixed.fp + mixed.fn == 10


@given(st.integers(0, 20), st.integers(0, 20), st.integers(0, 20), st.integers(0, 20))
def test_f1_is_harmonic_mean(tp, tn, fp, fn):
    r = confusion_rates(tp, tn, fp, fn)
    for key in ("accuracy", "tpr", "fpr", "precision", "f1", "auc"):
        assert 0.0 <= r[key] <= 1.0
    if r["precision"] > 0 and r["tpr"] > 0:
        assert r["f1"] == pytest.approx(2 * r["precision"] * r["tpr"] / (r["precision"] + r["tpr"]))


def test_domain_errors():
    with pytest.raises(MetricsDomainError):
        overlapping_nmi([], [{0}], 2)
    with pytest.raises(MetricsDomainError):
        omega_index([set()], [{0}], 2)
    with pytest.raises(MetricsDomainError):
        overlapping_nmi([{0, 5}], [{0}], 3)
    with pytest.raises(MetricsDomainError):
        bridge_confusion(CommunityStructure([{0, 1}], 2), set(), 3)
    with pytest.raises(MetricsDomainError):
        bridge_confusion([{0, 1}], {7}, 3)


def test_report_json_keys():
    report = evaluate([{0, 1, 2}, {2, 3}], [{0, 1, 2}, {2, 3}], {2}, 4)
    data = json.loads(report.to_json())
    assert set(data) == {"nmi", "omega", "accuracy", "tpr", "fpr", "auc", "precision", "f1",
                         "tp", "tn", "fp", "fn"}
    assert data["nmi"] == pytest.approx(1.0) and data["omega"] == pytest.approx(1.0)
    assert isinstance(MetricsReport().to_dict(), dict)
