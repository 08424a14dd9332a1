import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from thermospec import (BoundaryAlpha, KStepPotential, OrderMismatch, PotentialBundle, WeakGibbsMetric,
                        build_sft, conditional_variational, entropy, equilibrium_state, full_shift, golden_mean,
                        lphi_affine_dim, moran_sample, potential_average, pressure_exact, random_markov_measure)
from thermospec.measures import bernoulli, cycle_measure, parry_measure
from thermospec.sft import admissible_words
from thermospec.spectrum import legendre_spectrum

GOLDEN_LOG = math.log((1 + math.sqrt(5)) / 2)


def binary_entropy(p):
    return -p * math.log(p) - (1 - p) * math.log(1 - p)


def check_chain(mu):
    assert np.abs(mu.row_sums() - 1).max() <= 1e-12
    assert mu.stationarity_defect() <= 1e-10
    codes, probs = mu.word_marginals()
    ok = np.array([mu.sft.is_admissible(w) for w in admissible_words(mu.sft, mu.r + 1)])
    assert ok.all() and (probs >= 0).all()


def test_entropy_examples(shift2, golden):
    assert entropy(parry_measure(shift2)) == pytest.approx(math.log(2), abs=1e-12)
    assert entropy(bernoulli(shift2, [0.25, 0.75])) == pytest.approx(0.5623351446188083, abs=1e-12)
    assert entropy(cycle_measure(golden, (0, 1))) == 0.0
    assert entropy(parry_measure(golden)) == pytest.approx(GOLDEN_LOG, abs=1e-12)


def test_average_examples(shift2, digit):
    for p in (0.1, 0.5, 0.9):
        assert potential_average(bernoulli(shift2, [1 - p, p]), digit) == pytest.approx(p)
    const = KStepPotential.constant(shift2, -math.log(2))
    for seed in range(3):
        mu = random_markov_measure(shift2, 2, np.random.default_rng(seed))
        assert potential_average(mu, const) == pytest.approx(-math.log(2))


def test_average_matches_long_run_simulation(golden):
    pair = KStepPotential(golden, 2, [1.0, 0.0, 0.0, 0.0])
    mu = parry_measure(golden)
    exact = potential_average(mu, pair)
    rng = np.random.default_rng(7)
    n = 10 ** 6
    phi = (1 + math.sqrt(5)) / 2
    stay = 1 / phi
    x = np.empty(n, dtype=np.int8)
    x[0] = 0
    u = rng.random(n)
    for t in range(1, n):
        x[t] = 0 if x[t - 1] == 1 else (0 if u[t] < stay else 1)
    empirical = float(np.mean((x[:-1] == 0) & (x[1:] == 0)))
    assert abs(exact - empirical) <= 1e-2
    assert exact == pytest.approx(phi / (1 + phi ** 2), abs=1e-12)


def test_order_mismatch_without_lift(shift2):
    pot = KStepPotential(shift2, 3, np.arange(8.0))
    with pytest.raises(OrderMismatch):
        potential_average(parry_measure(shift2), pot, auto_lift=False)


def test_lift_preserves_averages(golden):
    pot = KStepPotential(golden, 3, np.linspace(-1, 1, 8))
    mu = random_markov_measure(golden, 1, np.random.default_rng(1))
    lifted = mu.lift(3)
    check_chain(lifted)
    assert potential_average(lifted, pot) == pytest.approx(potential_average(mu, pot), abs=1e-12)
    assert entropy(lifted) == pytest.approx(entropy(mu), abs=1e-12)


def test_equilibrium_examples(shift2, golden):
    assert np.allclose(equilibrium_state(KStepPotential.constant(shift2, 0.0)).trans, 0.5)
    p = np.array([0.2, 0.8])
    eq = equilibrium_state(KStepPotential(shift2, 1, np.log(p)))
    assert np.allclose(eq.stationary, p)
    assert entropy(equilibrium_state(KStepPotential.constant(golden, 0.0))) == pytest.approx(GOLDEN_LOG)


@pytest.mark.parametrize("sft", [full_shift(2), golden_mean(), build_sft(3, [[1, 1, 0], [0, 1, 1], [1, 0, 1]])])
def test_variational_principle(sft):
    rng = np.random.default_rng(11)
    for k in (1, 2, 3):
        pot = KStepPotential(sft, k, rng.normal(size=sft.m ** k))
        P = pressure_exact(pot)
        eq = equilibrium_state(pot)
        check_chain(eq)
        assert entropy(eq) + potential_average(eq, pot) == pytest.approx(P, abs=1e-9)
        for _ in range(100 // 3):
            nu = random_markov_measure(sft, int(rng.integers(1, 3)), rng)
            check_chain(nu)
            assert entropy(nu) + potential_average(nu, pot) <= P + 1e-9


def test_gibbs_ratio_stays_bounded(golden):
    pot = KStepPotential(golden, 2, [0.4, -1.0, 0.3, 0.0])
    mu = equilibrium_state(pot)
    P = pressure_exact(pot)
    spreads = []
    for n in range(3, 13):
        logs = [math.log(mu.cylinder_mass(w)) - (pot.cylinder_range(w)[1] - n * P)
                for w in admissible_words(golden, n)]
        spreads.append((min(logs), max(logs)))
    lo0, hi0 = spreads[0]
    for lo, hi in spreads[1:]:
        assert lo >= lo0 - 1e-9 and hi <= hi0 + 1e-9


def test_conditional_variational_examples(shift2, digit, binary_metric):
    value, mu = conditional_variational([0.5], binary_metric, digit)
    assert value == pytest.approx(1.0, abs=1e-9)
    assert np.allclose(mu.trans, 0.5, atol=1e-8)
    value, mu = conditional_variational([0.25], binary_metric, digit)
    assert value == pytest.approx(binary_entropy(0.25) / math.log(2), abs=1e-9)
    assert potential_average(mu, digit) == pytest.approx(0.25, abs=1e-9)


def test_conditional_variational_refuses_boundary(digit, binary_metric):
    with pytest.raises(BoundaryAlpha):
        conditional_variational([0.0], binary_metric, digit)


def test_conditional_variational_outside_domain(digit, binary_metric):
    from thermospec import NotInLPhi

    with pytest.raises(NotInLPhi):
        conditional_variational([1.5], binary_metric, digit)


def test_witness_matches_legendre_value(golden):
    metric = WeakGibbsMetric(KStepPotential(golden, 1, [-1.0, -1.5]))
    phi = KStepPotential(golden, 2, [0.0, 1.0, 0.5, 0.0])
    for a in (0.2, 0.35, 0.5):
        value, _ = conditional_variational([a], metric, phi)
        tau_star = legendre_spectrum(metric, phi, [a])[0]
        assert value == pytest.approx(tau_star, abs=1e-6)


def test_affine_dimension_examples(shift2):
    pair = PotentialBundle.of(KStepPotential(shift2, 1, [0, 1]), KStepPotential(shift2, 1, [1, 0]))
    assert lphi_affine_dim(pair) == 1
    quad = full_shift(4)
    product = PotentialBundle.of(KStepPotential(quad, 1, [0, 0, 1, 1]), KStepPotential(quad, 1, [0, 1, 0, 1]))
    assert lphi_affine_dim(product) == 2
    assert lphi_affine_dim(KStepPotential.constant(shift2, 3.0)) == 0


def test_moran_constant_metric_diameter(digit, binary_metric):
    xi = KStepPotential.constant(digit.sft, 0.5)
    s = moran_sample(binary_metric, digit, xi, schedule=(64, 128), seed=3)
    assert s.log_diameter == pytest.approx(-s.word.size * math.log(2), abs=1e-9)
    assert len(s.targets) == 2


def test_moran_half_target(digit, binary_metric):
    xi = KStepPotential.constant(digit.sft, 0.5)
    hits = sum(abs(moran_sample(binary_metric, digit, xi, seed=s).running_averages[-1] - 0.5) <= 0.05
               for s in range(100))
    assert hits >= 95


def test_moran_is_reproducible(digit, binary_metric):
    xi = KStepPotential(digit.sft, 1, [0.25, 0.5])
    a = moran_sample(binary_metric, digit, xi, schedule=(32, 64), seed=9)
    b = moran_sample(binary_metric, digit, xi, schedule=(32, 64), seed=9)
    assert np.array_equal(a.word, b.word) and a.log_mass == b.log_mass


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2 ** 31), st.integers(1, 3))
def test_random_chains_are_valid(seed, r):
    mu = random_markov_measure(golden_mean(), r, np.random.default_rng(seed))
    check_chain(mu)
    total = sum(mu.cylinder_mass(w) for w in admissible_words(golden_mean(), r + 2))
    assert total == pytest.approx(1.0, abs=1e-12)
