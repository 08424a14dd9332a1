"""Invariant suites shared by the ``check`` command and the test-suite."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .measures import entropy, equilibrium_state, parry_measure, potential_average, random_markov_measure
from .metric import WeakGibbsMetric, ball_family
from .potential import KStepPotential, as_bundle, combine
from .pressure import pressure_bracket, pressure_exact
from .spectrum import (SpectrumSystem, monotone_from_max_violation, quasi_concavity_violation,
                       spectrum_curve)


@dataclass(frozen=True)
class CheckResult:
    name: str
    violation: float
    tol: float

    @property
    def passed(self) -> bool:
        return bool(self.violation <= self.tol)


def pressure_slope(phi: KStepPotential, psi: KStepPotential, pairs: int = 20, seed: int = 0) -> float:
    """Worst escape of ``(f(l2) - f(l1)) / (l2 - l1)`` from ``[Psi_min, Psi_max]``, ``f(l) = P(Phi + l Psi)``."""
    rng = np.random.default_rng(seed)
    lo, hi = psi.phi1_min, psi.phi1_max
    worst = 0.0
    for _ in range(pairs):
        l1, l2 = np.sort(rng.uniform(-3, 3, 2))
        if l2 - l1 < 1e-3:
            continue
        f1 = pressure_exact(combine([(1.0, phi), (l1, psi)]))
        f2 = pressure_exact(combine([(1.0, phi), (l2, psi)]))
        s = (f2 - f1) / (l2 - l1)
        worst = max(worst, lo - s, s - hi)
    return worst


def slope_control(system: SpectrumSystem, samples: int = 50, seed: int = 0) -> float:
    """Worst violation of ``C1 <z, a'-a> <= tau(z,a) - tau(z,a') <= C2 <z, a'-a>``."""
    rng = np.random.default_rng(seed)
    C1, C2 = system.metric.C1, system.metric.C2
    lo, hi = system.lphi().bounding_box()
    worst = 0.0
    for _ in range(samples):
        z = rng.uniform(-2, 2, system.d)
        a, b = rng.uniform(lo, hi, (2, system.d))
        s = float(z @ (b - a))
        if s < 0:
            a, b = b, a
            s = -s
        diff = system.tau(z, a) - system.tau(z, b)
        worst = max(worst, C1 * s - diff, diff - C2 * s)
    return worst


def tau_convexity(system: SpectrumSystem, alphas=None, span: float = 3.0, steps: int = 25) -> float:
    """Most negative second difference of ``z -> tau(z, alpha)`` along coordinate lines."""
    lo, hi = system.lphi().bounding_box()
    if alphas is None:
        alphas = [lo + t * (hi - lo) for t in (0.25, 0.5, 0.75)]
    zs = np.linspace(-span, span, steps)
    worst = 0.0
    for a in alphas:
        for axis in range(system.d):
            vals = []
            for s in zs:
                z = np.zeros(system.d)
                z[axis] = s
                vals.append(system.tau(z, a))
            worst = max(worst, float(-np.min(np.diff(vals, 2))))
    return worst


def variational(pot: KStepPotential, samples: int = 50, seed: int = 0) -> tuple[float, float]:
    """``(|h + Phi_* - P|`` at the equilibrium state, worst ``h + Phi_* - P`` over random chains)."""
    P = pressure_exact(pot)
    mu = equilibrium_state(pot)
    eq = abs(entropy(mu) + potential_average(mu, pot) - P)
    rng = np.random.default_rng(seed)
    worst = -np.inf
    r = max(pot.k - 1, 1)
    for _ in range(samples):
        nu = random_markov_measure(pot.sft, r, rng)
        worst = max(worst, entropy(nu) + potential_average(nu, pot) - P)
    return eq, worst


def bracket_gap(pot, ns=(8, 16, 32)) -> float:
    """Worst distance of the exact pressure outside the finite-``n`` brackets."""
    P = pressure_exact(pot)
    worst = 0.0
    for n in ns:
        b = pressure_bracket(pot, n)
        worst = max(worst, b.lower - P, P - b.upper)
    return worst


def ball_cover_defect(metric: WeakGibbsMetric, ns=(1, 2, 3, 4)) -> float:
    """``|sum_{w in B_n} mu([w]) - 1|`` under the maximal-entropy measure, worst over ``n``."""
    mu = parry_measure(metric.sft)
    worst = 0.0
    for n in ns:
        fam = ball_family(metric, n)
        total = 0.0
        for w in fam.words:
            if len(w) == 0:
                total += 1.0
            elif len(w) < mu.r:
                total += sum(mu.cylinder_mass(w + tail) for tail in _tails(metric.sft, w, mu.r - len(w)))
            else:
                total += mu.cylinder_mass(w)
        worst = max(worst, abs(total - 1.0))
    return worst


def _tails(sft, w, length):
    from .sft import admissible_words

    for full in admissible_words(sft, len(w) + length, tuple(w)):
        yield full[len(w):]


def run_suite(metric: WeakGibbsMetric, pot, points: int = 41, seed: int = 0) -> list[CheckResult]:
    """Slope, convexity, regularity and variational checks for one system."""
    bundle = as_bundle(pot)
    system = SpectrumSystem.of(metric, bundle)
    results = []
    if bundle.d == 1 and metric.psi.kind == "kstep":
        results.append(CheckResult("pressure_slope", pressure_slope(bundle.components[0], metric.psi, seed=seed), 1e-8))
    results.append(CheckResult("slope_control", slope_control(system, seed=seed), 1e-6))
    results.append(CheckResult("tau_convexity", tau_convexity(system), 1e-8))
    curve = spectrum_curve(metric, bundle, points=points, grid2=min(points, 15))
    results.append(CheckResult("quasi_concavity", quasi_concavity_violation(curve), 1e-6))
    results.append(CheckResult("monotone_from_max", monotone_from_max_violation(curve), 1e-6))
    top = float(curve.values.max())
    results.append(CheckResult("spectrum_below_dimension", max(0.0, top - curve.d_psi_dim), 1e-9))
    if bundle.d == 1:
        eq, worst = variational(bundle.components[0], seed=seed)
        results.append(CheckResult("variational_equality", eq, 1e-9))
        results.append(CheckResult("variational_inequality", max(0.0, worst), 1e-9))
        results.append(CheckResult("bracket_contains_pressure", max(0.0, bracket_gap(bundle.components[0])), 1e-12))
    results.append(CheckResult("ball_cover", ball_cover_defect(metric), 1e-9))
    return results
