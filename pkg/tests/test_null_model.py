from fractions import Fraction
import itertools

import pytest
from hypothesis import given, strategies as st

from coalition.null_model import (NullModelContext, NullModelDomainError,
                                  all_event_probabilities, enumerate_matchings_oracle,
                                  expected_match_count, matching_count, p_adjacency,
                                  p_common_neighbour, p_triangle)


def test_adjacency_closed_forms():
    assert p_adjacency(1, 1, 2) == pytest.approx(1 / 3, abs=1e-15)
    assert p_adjacency(0, 5, 10) == 0.0
    assert p_adjacency(2, 2, 3) == pytest.approx(2 / 3, abs=1e-12)
    for m in range(1, 30):
        assert p_adjacency(1, 1, m) == pytest.approx(1 / (2 * m - 1), abs=1e-15)


def test_empty_sum_cases():
    assert p_common_neighbour(3, 0, 2, 5) == 0.0
    assert p_common_neighbour(3, 2, 1, 5) == 0.0
    assert p_triangle(1, 3, 3, 6) == 0.0


def test_exact_mode_returns_fractions():
    assert p_adjacency(2, 2, 3, exact=True) == Fraction(2, 3)
    assert isinstance(p_triangle(2, 2, 2, 3, exact=True), Fraction)


def test_triangle_degree_sequence_against_oracle():
    seq = [2, 2, 2]
    assert enumerate_matchings_oracle(seq, ("adjacency", 0, 1)) == Fraction(2, 3)
    com = enumerate_matchings_oracle(seq, ("common", 0, 1, 2))
    tri = enumerate_matchings_oracle(seq, ("triangle", 0, 1, 2))
    assert p_common_neighbour(2, 2, 2, 3, exact=True) == com
    assert p_triangle(2, 2, 2, 3, exact=True) == tri


def test_oracle_small_cases():
    assert enumerate_matchings_oracle([1, 1], ("adjacency", 0, 1)) == 1
    assert enumerate_matchings_oracle([1, 1, 1, 1], ("adjacency", 0, 1)) == Fraction(1, 3)
    assert matching_count(3) == 15


def test_oracle_refuses_large_inputs():
    with pytest.raises(NullModelDomainError, match="m <= 6"):
        enumerate_matchings_oracle([2] * 7, ("adjacency", 0, 1))
    with pytest.raises(NullModelDomainError):
        enumerate_matchings_oracle([1, 2], ("adjacency", 0, 1))


def test_domain_errors():
    with pytest.raises(NullModelDomainError):
        p_adjacency(-1, 2, 3)
    with pytest.raises(NullModelDomainError):
        p_adjacency(4, 4, 3)
    with pytest.raises(NullModelDomainError):
        p_adjacency(1, 1, 0)


def test_context_memoises():
    ctx = NullModelContext(7)
    a = ctx.p_common_neighbour(3, 2, 4)
    filled = len(ctx._com)
    assert filled > 0
    assert ctx.p_common_neighbour(3, 2, 4) == a
    assert len(ctx._com) == filled
    assert ctx.p_common_neighbour(2, 3, 4) == pytest.approx(a, abs=1e-12)
    assert a == p_common_neighbour(3, 2, 4, 7)


degree_seqs = st.lists(st.integers(0, 4), min_size=2, max_size=5).filter(
    lambda s: sum(s) % 2 == 0 and 2 <= sum(s) <= 8)


@given(degree_seqs)
def test_probabilities_match_enumeration(seq):
    m = sum(seq) // 2
    adj, com, tri = all_event_probabilities(seq)
    n = len(seq)
    for i, j in itertools.permutations(range(n), 2):
        assert abs(p_adjacency(seq[i], seq[j], m) - adj[i, j]) <= 1e-9
        for r in range(n):
            if r in (i, j):
                continue
            assert abs(p_common_neighbour(seq[i], seq[j], seq[r], m) - com[i, j, r]) <= 1e-9
            assert abs(p_triangle(seq[i], seq[j], seq[r], m) - tri[i, j, r]) <= 1e-9


@given(st.integers(0, 12), st.integers(0, 12), st.integers(0, 12), st.integers(1, 20))
def test_bounds_and_symmetry(ki, kj, kr, m):
    if ki + kj + kr > 2 * m:
        return
    a = p_adjacency(ki, kj, m)
    assert -1e-9 <= a <= 1 + 1e-9
    assert a == pytest.approx(p_adjacency(kj, ki, m), abs=1e-12)
    c = p_common_neighbour(ki, kj, kr, m)
    t = p_triangle(ki, kj, kr, m)
    assert -1e-9 <= t <= c + 1e-9
    assert c == pytest.approx(p_common_neighbour(kj, ki, kr, m), abs=1e-9)
    assert t == pytest.approx(p_triangle(kj, ki, kr, m), abs=1e-9)


@given(degree_seqs)
def test_expected_match_count_identity(seq):
    m = sum(seq) // 2
    for i, j in itertools.combinations(range(len(seq)), 2):
        assert expected_match_count(seq, i, j) == Fraction(seq[i] * seq[j], 2 * m - 1)


@given(st.integers(1, 40), st.integers(1, 40), st.integers(1, 40))
def test_float_and_exact_agree(ki, kj, kr):
    m = ki + kj + kr
    assert p_triangle(ki, kj, kr, m) == pytest.approx(
        float(p_triangle(ki, kj, kr, m, exact=True)), abs=1e-9)
