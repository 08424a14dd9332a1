import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from thermospec import (KStepPotential, NotFullDimensional, NotInLPhi, PotentialBundle, RangeEscapesLPhi,
                        WeakGibbsMetric, conditional_variational, full_shift, golden_mean, l_phi,
                        lambda_estimate, ld_count, legendre_spectrum, localized_dimension, metric_dimension,
                        potential_average, pressure_combined, spectrum_curve, tau, tau_metric_estimate)
from thermospec.checks import slope_control, tau_convexity
from thermospec.metric import ball_count
from thermospec.pressure import word_sum
from thermospec.spectrum import (SpectrumSystem, ld_counts, monotone_from_max_violation,
                                 quasi_concavity_violation)

LOG2 = math.log(2)


def H(p):
    return 0.0 if p in (0.0, 1.0) else -(p * math.log(p) + (1 - p) * math.log(1 - p))


def test_tau_at_zero_is_dimension(golden):
    metric = WeakGibbsMetric(KStepPotential(golden, 2, [-1.0, -0.5, -1.5, 0.0]))
    phi = KStepPotential(golden, 1, [0.0, 1.0])
    D, _ = metric_dimension(metric)
    for a in (-3.0, 0.2, 7.0):
        assert tau(metric, phi, [0.0], [a]) == pytest.approx(D, abs=1e-10)


def test_tau_unit_metric_is_classical_transform(golden):
    metric = WeakGibbsMetric(KStepPotential.constant(golden, -1.0))
    phi = KStepPotential(golden, 2, [0.3, -0.2, 1.1, 0.0])
    for z, a in [(0.7, 0.1), (-1.3, 0.4), (2.0, -0.5)]:
        expected = pressure_combined([(z, phi)]) - z * a
        assert tau(metric, phi, [z], [a]) == pytest.approx(expected, abs=1e-10)


@pytest.mark.parametrize("z,a", [(0.5, 0.25), (-2.0, 0.7), (3.0, 0.5)])
def test_tau_binary_closed_form(digit, binary_metric, z, a):
    expected = math.log(math.exp(-z * a) + math.exp(z * (1 - a))) / LOG2
    assert tau(binary_metric, digit, [z], [a]) == pytest.approx(expected, abs=1e-10)


def test_metric_estimate_unit_metric_identity(golden):
    metric = WeakGibbsMetric(KStepPotential.constant(golden, -1.0))
    phi = KStepPotential(golden, 2, [0.3, -0.2, 1.1, 0.0])
    z, a, n = 0.8, 0.3, 9
    expected = word_sum(phi.scaled(z), n) / n - z * a
    assert tau_metric_estimate(metric, phi, [z], [a], n) == pytest.approx(expected, abs=1e-12)


def test_metric_estimate_examples(digit, binary_metric, golden):
    assert abs(tau_metric_estimate(binary_metric, digit, [0.5], [0.25], 14) -
               tau(binary_metric, digit, [0.5], [0.25])) <= 0.1
    metric = WeakGibbsMetric(KStepPotential.constant(golden, -1.0))
    n = 12
    z0 = tau_metric_estimate(metric, KStepPotential(golden, 1, [0, 1]), [0.0], [0.0], n)
    assert z0 == pytest.approx(math.log(ball_count(metric, n)) / n)


def test_legendre_examples(digit, binary_metric):
    value, z, boundary = legendre_spectrum(binary_metric, digit, [0.25])
    assert value == pytest.approx(H(0.25) / LOG2, abs=1e-9)
    assert not boundary
    assert z[0] == pytest.approx(math.log(1 / 3), abs=1e-6)
    assert legendre_spectrum(binary_metric, digit, [0.5])[0] == pytest.approx(1.0, abs=1e-12)
    value, _, boundary = legendre_spectrum(binary_metric, digit, [0.0])
    assert value == pytest.approx(0.0, abs=1e-6) and boundary


def test_legendre_outside_domain(digit, binary_metric):
    with pytest.raises(NotInLPhi):
        legendre_spectrum(binary_metric, digit, [1.2])


def test_legendre_golden_section_agrees(digit, binary_metric):
    for a in (0.1, 0.4, 0.77):
        fast = legendre_spectrum(binary_metric, digit, [a])[0]
        slow = legendre_spectrum(binary_metric, digit, [a], method="golden")[0]
        assert slow == pytest.approx(fast, abs=1e-9)


def test_brute_force_count_oracle(shift2, digit):
    metric = WeakGibbsMetric(KStepPotential.constant(shift2, -1.0))
    assert ld_count(metric, digit, [0.5], 4, 0.3) == 14
    for n, a, eps in [(6, 0.3, 0.1), (7, 0.5, 0.2), (8, 0.9, 0.15)]:
        brute = sum(abs(sum(w) / n - a) < eps for w in itertools.product((0, 1), repeat=n))
        assert ld_count(metric, digit, [a], n, eps) == brute


def test_count_extremes(golden):
    metric = WeakGibbsMetric(KStepPotential(golden, 1, [-1.0, -1.4]))
    phi = KStepPotential(golden, 2, [0.0, 1.0, 2.0, 0.0])
    everything = ld_count(metric, phi, [0.0], 8, 10.0)
    assert everything == ball_count(metric, 8)
    assert ld_count(metric, phi, [50.0], 8, 0.1) == 0


def test_lambda_estimates(digit, binary_metric):
    table = lambda_estimate(binary_metric, digit, [0.25], [12, 16], [0.02, 0.05, 0.1])
    for n in (12, 16):
        vals = [table.value(n, e) for e in (0.02, 0.05, 0.1)]
        assert vals == sorted(vals)
    assert abs(table.extrapolated - H(0.25) / LOG2) <= 0.1
    zero = KStepPotential.constant(digit.sft, 0.0)
    flat = lambda_estimate(binary_metric, zero, [0.0], [10, 14], [0.05])
    # every ball has length ceil(n / log 2), so the rate sits just above D = 1
    for n in (10, 14):
        assert flat.value(n, 0.05) == pytest.approx(math.ceil(n / LOG2) * LOG2 / n)
    assert abs(flat.extrapolated - 1.0) <= 0.05


def test_l_phi_examples(digit, golden, shift2):
    assert l_phi(digit).interval == (0.0, 1.0)
    assert l_phi(KStepPotential(golden, 1, [0.0, 1.0])).interval == pytest.approx((0.0, 0.5))
    seg = l_phi(PotentialBundle.of(digit, KStepPotential(shift2, 1, [1.0, 0.0])))
    assert seg.dim == 1
    assert sorted(map(tuple, seg.vertices.tolist())) == [(0.0, 1.0), (1.0, 0.0)]


def test_l_phi_matches_cycle_enumeration(golden):
    from thermospec.measures import periodic_average
    from thermospec.sft import admissible_words, periodic_admissible

    rng = np.random.default_rng(4)
    phi = KStepPotential(golden, 3, rng.normal(size=8))
    avgs = [periodic_average(phi, w)[0] for p in range(1, 9) for w in admissible_words(golden, p)
            if periodic_admissible(golden, w)]
    lo, hi = l_phi(phi).interval
    assert lo == pytest.approx(min(avgs), abs=1e-12)
    assert hi == pytest.approx(max(avgs), abs=1e-12)


def test_localized_examples(digit, binary_metric):
    system = SpectrumSystem.of(binary_metric, digit)
    for a in (0.1, 0.5):
        xi = KStepPotential.constant(digit.sft, a)
        assert localized_dimension(xi, system) == pytest.approx(legendre_spectrum(binary_metric, digit, [a])[0])
    xi = KStepPotential(digit.sft, 1, [0.0, 0.25])
    assert localized_dimension(xi, system) == pytest.approx(H(0.25) / LOG2, abs=1e-9)
    assert localized_dimension(xi, system, interval=True) == pytest.approx(H(0.25) / LOG2, abs=1e-9)
    wide = KStepPotential(digit.sft, 1, [0.2, 0.9])
    assert localized_dimension(wide, system, interval=True) == pytest.approx(1.0, abs=1e-9)
    assert localized_dimension(wide, system) == pytest.approx(H(0.2) / LOG2, abs=1e-9)


def test_localized_escape(digit, binary_metric):
    xi = KStepPotential(digit.sft, 1, [0.5, 1.5])
    with pytest.raises(RangeEscapesLPhi):
        localized_dimension(xi, SpectrumSystem.of(binary_metric, digit))


def test_bernoulli_curve(digit, binary_metric):
    curve = spectrum_curve(binary_metric, digit, points=101)
    expected = np.array([H(a) / LOG2 for a in curve.alphas[:, 0]])
    assert np.abs(curve.values - expected).max() <= 1e-6
    assert curve.grid[0].boundary and curve.grid[-1].boundary
    assert quasi_concavity_violation(curve) <= 1e-6
    assert monotone_from_max_violation(curve) <= 1e-6


def test_curve_rows_carry_witness(digit, binary_metric):
    curve = spectrum_curve(binary_metric, digit, points=11)
    mid = curve.grid[5]
    assert mid.witness.entropy == pytest.approx(LOG2)
    assert mid.witness.psi_avg == pytest.approx(-LOG2)
    assert curve.grid[0].witness is None


def test_threads_do_not_change_results(golden):
    metric = WeakGibbsMetric(KStepPotential(golden, 1, [-1.0, -1.7]))
    phi = KStepPotential(golden, 2, [0.0, 1.0, 0.4, 0.0])
    one = spectrum_curve(metric, phi, points=41)
    four = spectrum_curve(metric, phi, points=41, threads=4)
    assert np.array_equal(one.values, four.values)


def system_cases():
    sft3 = __import__("thermospec").build_sft(3, [[1, 1, 0], [0, 1, 1], [1, 0, 1]])
    rng = np.random.default_rng(21)
    return [
        (WeakGibbsMetric(KStepPotential.constant(full_shift(2), -LOG2)), KStepPotential(full_shift(2), 1, [0, 1])),
        (WeakGibbsMetric(KStepPotential(golden_mean(), 1, [-1.0, -2.0])),
         KStepPotential(golden_mean(), 2, [0.0, 1.0, 0.3, 0.0])),
        (WeakGibbsMetric(KStepPotential(sft3, 1, -rng.uniform(0.5, 2.0, 3))),
         KStepPotential(sft3, 2, rng.normal(size=9))),
    ]


@pytest.mark.parametrize("case", range(3))
def test_spectrum_invariants(case):
    metric, phi = system_cases()[case]
    system = SpectrumSystem.of(metric, phi)
    assert slope_control(system) <= 1e-6
    assert tau_convexity(system) <= 1e-8
    curve = spectrum_curve(metric, phi, points=61)
    D = system.dimension
    assert (curve.values >= -1e-9).all() and (curve.values <= D + 1e-9).all()
    assert curve.values.max() == pytest.approx(D, abs=1e-3)
    assert quasi_concavity_violation(curve) <= 1e-6
    assert monotone_from_max_violation(curve) <= 1e-6
    top = system.legendre(system.argmax_alpha()).tau_star
    assert top == pytest.approx(D, abs=1e-9)


@pytest.mark.parametrize("case", range(3))
def test_duality_closure(case):
    metric, phi = system_cases()[case]
    lo, hi = l_phi(phi).interval
    for t in (0.2, 0.5, 0.8):
        a = lo + t * (hi - lo)
        pt = SpectrumSystem.of(metric, phi).legendre([a])
        value, mu = conditional_variational([a], metric, phi)
        assert potential_average(mu, phi) == pytest.approx(a, abs=1e-6)
        assert value == pytest.approx(pt.tau_star, abs=1e-6)


def test_counting_consistency(digit, binary_metric):
    system = SpectrumSystem.of(binary_metric, digit)
    for a, eps in [(0.2, 0.05), (0.5, 0.02), (0.7, 0.1)]:
        for n in (12, 14):
            f = ld_count(binary_metric, digit, [a], n, eps)
            ball = np.clip(np.linspace(a - eps, a + eps, 21), 0.0, 1.0)
            top = max(system.legendre([b]).tau_star for b in ball)
            assert f == 0 or math.log(f) / n <= top + 0.1


def test_two_dimensional_legendre(shift2):
    quad = full_shift(4)
    bundle = PotentialBundle.of(KStepPotential(quad, 1, [0, 0, 1, 1]), KStepPotential(quad, 1, [0, 1, 0, 1]))
    metric = WeakGibbsMetric(KStepPotential.constant(quad, -LOG2))
    value, z, boundary = legendre_spectrum(metric, bundle, [0.3, 0.6])
    assert value == pytest.approx((H(0.3) + H(0.6)) / LOG2, abs=1e-7)
    assert not boundary
    coord = legendre_spectrum(metric, bundle, [0.3, 0.6], method="coordinate")[0]
    assert coord == pytest.approx(value, abs=1e-6)


def test_two_dimensional_needs_interior(shift2, digit, binary_metric):
    bundle = PotentialBundle.of(digit, KStepPotential(shift2, 1, [1.0, 0.0]))
    with pytest.raises(NotFullDimensional):
        spectrum_curve(binary_metric, bundle)


@settings(max_examples=25, deadline=None)
@given(st.floats(-4, 4), st.floats(0.01, 0.99), st.floats(0.01, 0.99))
def test_slope_control_property(z, a1, a2):
    metric = WeakGibbsMetric(KStepPotential(golden_mean(), 1, [-1.0, -2.0]))
    phi = KStepPotential(golden_mean(), 1, [0.0, 1.0])
    a, b = sorted((a1, a2)) if z >= 0 else sorted((a1, a2), reverse=True)
    s = z * (b - a)
    diff = tau(metric, phi, [z], [a]) - tau(metric, phi, [z], [b])
    assert metric.C1 * s - 1e-6 <= diff <= metric.C2 * s + 1e-6
