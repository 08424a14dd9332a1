import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from thermospec import DegenerateRow, NotPrimitive, admissible_words, build_sft, full_shift, golden_mean
from thermospec.sft import decode, encode, periodic_admissible, word_array


def brute_count(A, n):
    m = len(A)
    return sum(all(A[a][b] for a, b in zip(w, w[1:])) for w in itertools.product(range(m), repeat=n))


def test_primitivity_exponent():
    assert full_shift(2).p0 == 1
    assert golden_mean().p0 == 2


def test_zero_row_rejected():
    with pytest.raises(DegenerateRow):
        build_sft(2, [[1, 1], [0, 0]])


def test_zero_column_rejected():
    with pytest.raises(DegenerateRow):
        build_sft(2, [[1, 0], [1, 0]])


def test_permutation_is_not_primitive():
    with pytest.raises(NotPrimitive):
        build_sft(2, [[0, 1], [1, 0]])


def test_word_counts():
    assert sum(1 for _ in admissible_words(full_shift(2), 3)) == 8
    assert sum(1 for _ in admissible_words(golden_mean(), 3)) == 5
    assert list(admissible_words(golden_mean(), 0)) == [()]


def test_enumeration_is_lexicographic():
    words = list(admissible_words(golden_mean(), 5))
    assert words == sorted(words)
    assert all(golden_mean().is_admissible(w) for w in words)


def test_bridges():
    assert full_shift(2).bridge(0, 1) == (0,)
    g = golden_mean()
    assert g.bridge(1, 1) == (0, 0)
    assert g.bridge(0, 0) == (0, 0)


def test_bridge_table_admissible(random_sft3):
    s = random_sft3
    for i in range(3):
        for j in range(3):
            w = s.bridge(i, j)
            assert len(w) == s.p0
            assert s.is_admissible((i,) + w + (j,))


@pytest.mark.parametrize("n", range(1, 11))
def test_count_matches_brute_force(n, random_sft3):
    A = random_sft3.A.tolist()
    assert random_sft3.count(n) == brute_count(A, n)
    assert golden_mean().count(n) == brute_count([[1, 1], [1, 0]], n)


def test_word_array_codes_roundtrip(golden):
    words = word_array(golden, 6)
    codes = encode(words, 2)
    assert np.array_equal(decode(codes, 2, 6), words)


def test_periodic_admissible(golden):
    assert periodic_admissible(golden, (0, 1))
    assert not periodic_admissible(golden, (1,))


@st.composite
def primitive_matrices(draw):
    m = draw(st.integers(2, 4))
    A = np.array(draw(st.lists(st.lists(st.integers(0, 1), min_size=m, max_size=m), min_size=m, max_size=m)))
    A[np.arange(m), (np.arange(m) + 1) % m] = 1
    A[0, 0] = 1
    return A


@settings(max_examples=30, deadline=None)
@given(primitive_matrices(), st.integers(1, 6), st.integers(1, 4))
def test_factor_closure(A, n, p):
    sft = build_sft(len(A), A)
    longer = {w[:n] for w in admissible_words(sft, n + p)}
    assert longer <= set(admissible_words(sft, n))
    assert sft.count(n) == int(np.linalg.matrix_power(A, n - 1).sum())
