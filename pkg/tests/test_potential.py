import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from thermospec import (KStepPotential, MatrixCocyclePotential, PotentialBundle, birkhoff_range, full_shift,
                        golden_mean, holder_approx, sup_weight, var_norm, var_norm_star)
from thermospec.potential import combine, cylinder_points, periodic_extension
from thermospec.sft import admissible_words

MAT = np.array([[2.0, 1.0], [1.0, 3.0]])
MATS = [MAT, np.array([[1.0, 4.0], [2.0, 1.0]])]


def brute_range(pot, word, extra):
    vals = [pot.evaluate(x, len(word)) for x in admissible_words(pot.sft, len(word) + extra, tuple(word))]
    return min(vals), max(vals)


def test_one_step_range_is_exact(digit):
    assert birkhoff_range(digit, (0, 1)) == (1.0, 1.0)


def test_two_step_range_frees_tail(shift2):
    pot = KStepPotential(shift2, 2, [0, 1, 2, 3])
    assert birkhoff_range(pot, (0,)) == (0.0, 1.0)


def test_trivial_cocycle_range(shift2):
    pot = MatrixCocyclePotential(shift2, [[[1.0]], [[1.0]]])
    assert birkhoff_range(pot, (0, 1, 1)) == (0.0, 0.0)


def test_sup_weight_examples(shift2, digit, golden):
    assert sup_weight(KStepPotential.constant(shift2, -math.log(2)), (0, 1, 0)) == pytest.approx(1 / 8)
    assert sup_weight(digit, (1, 0, 1)) == pytest.approx(math.e ** 2)
    assert sup_weight(KStepPotential(golden, 1, [-1, -2]), (1, 0, 1)) == pytest.approx(math.exp(-5))


def test_golden_table_rejects_forbidden_window(golden):
    pot = KStepPotential(golden, 2, [0, 1, 2, 3])
    assert math.isnan(pot.table[3])


@pytest.mark.parametrize("k", [2, 3])
def test_kstep_range_matches_brute_force(golden, k):
    rng = np.random.default_rng(k)
    pot = KStepPotential(golden, k, rng.normal(size=2 ** k))
    for n in range(1, 6):
        for w in admissible_words(golden, n):
            lo, hi = birkhoff_range(pot, w)
            blo, bhi = brute_range(pot, w, k - 1)
            assert lo == pytest.approx(blo, abs=1e-12)
            assert hi == pytest.approx(bhi, abs=1e-12)


def test_holder_approx_of_one_step_is_exact(digit):
    approx, bound = holder_approx(digit, 1)
    assert np.allclose(approx.table, digit.table)
    assert bound == 0.0


def test_holder_approx_constant_cocycle(shift2):
    pot = MatrixCocyclePotential(shift2, [MAT, MAT])
    for k in (2, 4, 8):
        approx, bound = holder_approx(pot, k)
        expected = math.log(np.linalg.matrix_power(MAT, k).sum()) / k
        assert np.allclose(approx.table, expected)
        assert bound == pytest.approx(pot.C / k)
    assert holder_approx(pot, 8)[1] <= holder_approx(pot, 4)[1]


def test_cocycle_constant(shift2):
    pot = MatrixCocyclePotential(shift2, MATS)
    assert pot.C == pytest.approx(math.log(4.0) + 2 * math.log(2))


def test_cocycle_rejects_nonpositive(shift2):
    with pytest.raises(ValueError):
        MatrixCocyclePotential(shift2, [MAT, -MAT])


def test_var_norm_examples(shift2):
    assert var_norm(KStepPotential(shift2, 1, [0, 1]), 5) == 0.0
    pair = KStepPotential(shift2, 2, [0, 1, 2, 3])
    assert var_norm(pair, 1) == 1.0
    seq = [var_norm(MatrixCocyclePotential(shift2, MATS), n) for n in (1, 2, 4, 8)]
    assert all(b <= a for a, b in zip(seq, seq[1:]))


def test_var_norm_star_takes_window_max(golden):
    pot = KStepPotential(golden, 3, [0, 1, 2, 0, 5, 1, 0, 0])
    assert var_norm_star(pot, 2, 0.5, 1.5) == max(var_norm(pot, l) for l in (1, 2, 3))


def test_combine_lifts_to_common_window(shift2, digit):
    pair = KStepPotential(shift2, 2, [0, 1, 2, 3])
    merged = combine([(1.0, digit), (2.0, pair)], const=0.5)
    assert merged.k == 2
    x = (1, 0, 1, 1, 0)
    assert merged.evaluate(x, 4) == pytest.approx(digit.evaluate(x, 4) + 2 * pair.evaluate(x, 4) + 2.0)


def test_cylinder_points_are_joint(shift2):
    a = KStepPotential(shift2, 2, [0, 1, 0, 1])
    b = KStepPotential(shift2, 2, [1, 0, 1, 0])
    pts = cylinder_points(PotentialBundle.of(a, b), (0, 1))
    assert pts.tolist() == [[1.0, 1.0], [2.0, 0.0]]


def test_periodic_extension_is_admissible(golden):
    x = periodic_extension(golden, (1,), 9)
    assert len(x) == 9 and golden.is_admissible(x)


words = st.lists(st.integers(0, 1), min_size=1, max_size=8)


@settings(max_examples=200, deadline=None)
@given(words, words, words)
def test_cocycle_almost_additivity(u, v, tail):
    pot = MatrixCocyclePotential(full_shift(2), MATS)
    x = u + v + tail
    n, p = len(u), len(v)
    gap = pot.evaluate(x, n + p) - pot.evaluate(x, n) - pot.evaluate(x[n:], p)
    assert abs(gap) <= pot.C + 1e-12


@settings(max_examples=200, deadline=None)
@given(words, words)
def test_multiplicative_bounds(u, v):
    for pot in (MatrixCocyclePotential(full_shift(2), MATS), KStepPotential(full_shift(2), 2, [0.3, -1, 2, 0.5])):
        C = pot.C
        lhs = sup_weight(pot, tuple(u + v))
        prod = sup_weight(pot, tuple(u)) * sup_weight(pot, tuple(v))
        assert lhs <= math.exp(C) * prod * (1 + 1e-12)
        assert lhs >= math.exp(-C - var_norm(pot, len(u))) * prod * (1 - 1e-12)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.integers(0, 1), min_size=1, max_size=12), st.integers(1, 12))
def test_max_min_bounds(x, n):
    for pot in (MatrixCocyclePotential(full_shift(2), MATS), KStepPotential(full_shift(2), 3, np.arange(8) - 3.0)):
        b = PotentialBundle.of(pot)
        pt = (x * 40)[: n + 3]
        val = pot.evaluate(pt, n)
        assert n * b.phi_min[0] - 1e-9 <= val <= n * b.phi_max[0] + 1e-9


@settings(max_examples=100, deadline=None)
@given(st.lists(st.integers(0, 1), min_size=1, max_size=10), st.integers(0, 1))
def test_negative_sup_weight_shrinks_under_extension(w, a):
    pot = KStepPotential(full_shift(2), 2, [-0.5, -1.0, -0.2, -2.0])
    assert sup_weight(pot, tuple(w) + (a,)) <= sup_weight(pot, tuple(w))


@pytest.mark.parametrize("n", [1, 2, 4, 8])
def test_variation_over_n_doubles_down(shift2, n):
    for pot in (KStepPotential(shift2, 3, np.arange(8.0)), MatrixCocyclePotential(shift2, MATS)):
        assert var_norm(pot, 2 * n) / (2 * n) <= var_norm(pot, n) / n + 1e-12


def test_brute_force_pairs_all_short_words(shift2):
    pot = KStepPotential(shift2, 2, [0.1, -0.4, 1.2, 0.0])
    for u in itertools.product(range(2), repeat=3):
        lo, hi = birkhoff_range(pot, u)
        blo, bhi = brute_range(pot, u, 1)
        assert (lo, hi) == pytest.approx((blo, bhi))
