"""Self-similar iterated function systems and their Birkhoff spectra.

An IFS ``f_j(x) = rho_j x + c_j`` (no rotations) is coded by the full shift on
``m`` symbols.  The metric potential is ``log rho_{x_1}`` and the coding map
``chi(x) = lim f_{x_1} o ... o f_{x_n}(.)`` turns Birkhoff averages of the
position into averages of an additive potential on the shift.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import NotHomogeneous, NotInLPhi, NotNormalized
from .measures import equilibrium_state
from .metric import WeakGibbsMetric, metric_dimension
from .potential import KStepPotential, PotentialBundle
from .pressure import pressure_exact
from .sft import SFT, full_shift
from .spectrum import SpectrumCurve, SpectrumSystem, localized_dimension, spectrum_curve

K_LADDER = (4, 6, 8, 10, 12)
#: Largest de Bruijn graph (states) the k ladder will build.
STATE_CAP = 200_000


@dataclass(frozen=True, eq=False)
class SelfSimilarIFS:
    ratios: np.ndarray
    offsets: np.ndarray
    sosc_asserted: bool = True
    name: str = ""

    def __post_init__(self):
        r = np.asarray(self.ratios, dtype=float)
        c = np.asarray(self.offsets, dtype=float)
        if c.ndim == 1:
            c = c[:, None]
        if r.ndim != 1 or r.size < 2 or c.shape[0] != r.size:
            raise ValueError("need at least two maps with matching ratios and offsets")
        if c.shape[1] not in (1, 2):
            raise ValueError("ambient dimension must be 1 or 2")
        if not ((r > 0) & (r < 1)).all():
            raise ValueError("contraction ratios must lie in (0, 1)")
        object.__setattr__(self, "ratios", r)
        object.__setattr__(self, "offsets", c)

    @property
    def m(self) -> int:
        return self.ratios.size

    @property
    def dim(self) -> int:
        return self.offsets.shape[1]

    @property
    def homogeneous(self) -> bool:
        return bool(np.ptp(self.ratios) <= 1e-15)

    @property
    def fixed_points(self) -> np.ndarray:
        return self.offsets / (1.0 - self.ratios)[:, None]

    @property
    def box(self) -> tuple[np.ndarray, np.ndarray]:
        """Bounding box of the fixed points; every map sends it into itself."""
        x = self.fixed_points
        return x.min(axis=0), x.max(axis=0)

    @property
    def diameter(self) -> float:
        lo, hi = self.box
        return float(np.linalg.norm(hi - lo))

    @property
    def sft(self) -> SFT:
        return _full_shift_cached(self.m)

    def apply(self, j: int, x) -> np.ndarray:
        return self.ratios[j] * np.asarray(x, dtype=float) + self.offsets[j]

    def code_point(self, word, base=None) -> np.ndarray:
        """``f_{w_1} o ... o f_{w_n}(base)``; ``base`` defaults to the fixed point of map 0."""
        x = self.fixed_points[0] if base is None else np.asarray(base, dtype=float)
        for j in reversed(tuple(word)):
            x = self.apply(j, x)
        return x

    def check_sosc(self) -> bool:
        """Exact disjoint-interior test for equal-ratio grid carpets on the unit cube."""
        rho = Fraction(float(self.ratios[0])).limit_denominator(10 ** 6)
        if not self.homogeneous or abs(float(rho) - self.ratios[0]) > 1e-12:
            raise NotHomogeneous("exact check needs one rational ratio")
        cells = []
        for c in self.offsets:
            frac = [Fraction(float(v)).limit_denominator(10 ** 6) for v in c]
            cells.append([(v, v + rho) for v in frac])
        for a, b in itertools.combinations(cells, 2):
            if all(lo1 < hi2 and lo2 < hi1 for (lo1, hi1), (lo2, hi2) in zip(a, b)):
                return False
        return True


_SHIFTS: dict = {}


def _full_shift_cached(m: int) -> SFT:
    if m not in _SHIFTS:
        _SHIFTS[m] = full_shift(m)
    return _SHIFTS[m]


# -- presets ------------------------------------------------------------------------

def base_m(m: int) -> SelfSimilarIFS:
    """``x -> (x + j) / m`` on ``[0, 1]``."""
    return SelfSimilarIFS(np.full(m, 1.0 / m), np.arange(m) / m, name=f"base-{m}")


def cantor() -> SelfSimilarIFS:
    return SelfSimilarIFS(np.full(2, 1 / 3), np.array([0.0, 2 / 3]), name="cantor")


def product(a: SelfSimilarIFS, b: SelfSimilarIFS) -> SelfSimilarIFS:
    """Product of two equal-ratio interval systems, coded by pairs ``(i, j)``."""
    if a.dim != 1 or b.dim != 1:
        raise ValueError("products are formed from interval systems")
    if not (a.homogeneous and b.homogeneous) or abs(a.ratios[0] - b.ratios[0]) > 1e-15:
        raise NotHomogeneous("product factors need one common ratio")
    offs = [(ca[0], cb[0]) for ca in a.offsets for cb in b.offsets]
    return SelfSimilarIFS(np.full(len(offs), a.ratios[0]), np.array(offs),
                          name=f"{a.name}x{b.name}")


def grid_carpet(m: int, cells, name: str = "") -> SelfSimilarIFS:
    """Maps ``x -> (x + cell) / m`` for the chosen grid cells of the unit square."""
    cells = np.asarray(cells, dtype=float)
    return SelfSimilarIFS(np.full(len(cells), 1.0 / m), cells / m, name=name)


def carpet_s1() -> SelfSimilarIFS:
    """Four corner squares of ratio 1/3."""
    return grid_carpet(3, [(0, 0), (2, 0), (0, 2), (2, 2)], "S1")


def carpet_s2() -> SelfSimilarIFS:
    """Four corner squares and the centre square of ratio 1/3."""
    return grid_carpet(3, [(0, 0), (2, 0), (0, 2), (2, 2), (1, 1)], "S2")


def base_square(m: int) -> SelfSimilarIFS:
    return product(base_m(m), base_m(m))


PRESETS = {
    "cantor": cantor,
    "s1": carpet_s1,
    "s2": carpet_s2,
    "base-3": lambda: base_m(3),
    "base-3x3": lambda: base_square(3),
}


# -- coding potentials -------------------------------------------------------------

def coding_table(ifs: SelfSimilarIFS, k: int) -> np.ndarray:
    """Mean of ``chi(w j j j ...)`` over ``j`` for every ``k``-word ``w``, shape ``(m**k, d')``.

    The mean equals ``f_w`` at the centroid of the fixed points, a point every
    symmetry of the map set preserves, so the truncation keeps those symmetries.
    """
    vals = ifs.fixed_points.mean(axis=0, keepdims=True)
    for _ in range(k):
        # prepend a symbol: new code = j * m**len + old code
        vals = (ifs.ratios[:, None, None] * vals[None, :, :] + ifs.offsets[:, None, :]).reshape(-1, ifs.dim)
    return vals


def coding_potential(ifs: SelfSimilarIFS, k: int):
    """``(psi, Phi_chi, bound)``: metric potential, k-step coding bundle, truncation bound."""
    if k < 1:
        raise ValueError("k must be >= 1")
    sft = ifs.sft
    psi = KStepPotential.one_step(sft, np.log(ifs.ratios))
    table = coding_table(ifs, k)
    bundle = PotentialBundle(tuple(KStepPotential(sft, k, table[:, j]) for j in range(ifs.dim)))
    rho = float(ifs.ratios.max())
    bound = ifs.diameter * rho ** k / (1.0 - rho)
    return psi, bundle, bound


def attractor_points(ifs: SelfSimilarIFS, depth: int) -> np.ndarray:
    """Images of the fixed points under all depth-``depth`` compositions."""
    pts = ifs.fixed_points
    for _ in range(depth):
        pts = (ifs.ratios[:, None, None] * pts[None, :, :] + ifs.offsets[:, None, :]).reshape(-1, ifs.dim)
    return np.unique(np.round(pts, 15), axis=0)


def in_attractor(ifs: SelfSimilarIFS, point, depth: int = 12, tol: float = 1e-12,
                 frontier_cap: int = 100_000) -> bool:
    """Cell-subdivision membership: ``point`` lies in some depth-``depth`` cell (inclusive)."""
    lo, hi = ifs.box
    p = np.atleast_2d(np.asarray(point, dtype=float))
    scale = np.ones(1)
    for _ in range(depth):
        img_lo = ifs.ratios[:, None] * lo + ifs.offsets
        img_hi = ifs.ratios[:, None] * hi + ifs.offsets
        t = (tol / scale)[:, None, None]
        inside = np.all((p[:, None, :] >= img_lo[None] - t) & (p[:, None, :] <= img_hi[None] + t), axis=2)
        rows, maps = np.nonzero(inside)
        if rows.size == 0:
            return False
        p = (p[rows] - ifs.offsets[maps]) / ifs.ratios[maps, None]
        scale = scale[rows] * ifs.ratios[maps]
        if p.shape[0] > frontier_cap:
            keep = np.unique(np.round(p, 12), axis=0, return_index=True)[1]
            p, scale = p[keep], scale[keep]
    return True


# -- spectra on attractors --------------------------------------------------------

def _system(ifs: SelfSimilarIFS, k: int) -> SpectrumSystem:
    key = (id(ifs), k)
    if key not in _SYSTEMS:
        psi, bundle, _ = coding_potential(ifs, k)
        if len(_SYSTEMS) > 8:
            _SYSTEMS.clear()
        _SYSTEMS[key] = (ifs, SpectrumSystem.of(WeakGibbsMetric(psi), bundle))
    return _SYSTEMS[key][1]


_SYSTEMS: dict = {}


def _ladder(ifs: SelfSimilarIFS, ladder) -> list[int]:
    return [k for k in ladder if ifs.m ** (k - 1) <= STATE_CAP]


@dataclass(frozen=True)
class BirkhoffPoint:
    value: float
    k: int
    converged: bool
    history: tuple


def birkhoff_spectrum_point(ifs: SelfSimilarIFS, alpha, k: int | None = None,
                            ladder=K_LADDER, tol: float = 1e-4) -> BirkhoffPoint:
    """Dimension of the points whose orbit averages converge to ``alpha``.

    A fixed ``k`` evaluates one truncation; otherwise ``k`` climbs the ladder
    until successive values agree within ``tol``.
    """
    alpha = np.atleast_1d(np.asarray(alpha, dtype=float))
    ks = [k] if k is not None else _ladder(ifs, ladder)
    history = []
    for kk in ks:
        system = _system(ifs, kk)
        _, _, bound = coding_potential(ifs, kk)
        L = system.lphi()
        a = alpha
        if not L.contains(a, 1e-9):
            # truncation shrinks L_Phi by at most the coding error
            if L.distance(a) > bound + 1e-9:
                raise NotInLPhi(f"alpha={alpha.tolist()} outside L_Phi")
            a = _project(L, a)
        history.append((kk, system.legendre(a).tau_star))
        if len(history) >= 2 and abs(history[-1][1] - history[-2][1]) < tol:
            return BirkhoffPoint(history[-1][1], kk, True, tuple(history))
    return BirkhoffPoint(history[-1][1], history[-1][0], k is not None, tuple(history))


def _project(L, a):
    if L.d == 1:
        lo, hi = L.interval
        return np.clip(a, lo, hi)
    # nudge toward the hull centroid until inside
    c = L.vertices.mean(axis=0)
    for s in np.linspace(0, 1, 2001):
        b = a + s * (c - a)
        if L.contains(b, 1e-12):
            return b
    return c


def chi_average_at_dimension(ifs: SelfSimilarIFS) -> tuple[float, np.ndarray]:
    """``(D(Psi), alpha_max)``: the dimension and the exact average of ``chi`` under
    the equilibrium state of ``D(Psi) Psi``, the global maximizer of the spectrum."""
    psi, _, _ = coding_potential(ifs, 1)
    D, _ = metric_dimension(WeakGibbsMetric(psi))
    mu = equilibrium_state(psi.scaled(D))
    # u_a = E[chi | x_1 = a] solves u = c + diag(rho) T u
    T = np.zeros((ifs.m, ifs.m))
    g = mu.graph
    T[g.src, g.dst] = mu.trans
    u = np.linalg.solve(np.eye(ifs.m) - ifs.ratios[:, None] * T, ifs.offsets)
    return D, mu.stationary @ u


@dataclass(frozen=True)
class FixedPointResult:
    value: float
    argmax: np.ndarray
    full_dim: bool
    dimension: float
    alpha_max: np.ndarray
    diagnostics: dict = field(default_factory=dict)


def fixed_point_average_dimension(ifs: SelfSimilarIFS, k: int = 8, membership_depth: int = 12,
                                  beam: int = 4, search_k: int = 4, verify: bool = False
                                  ) -> FixedPointResult:
    """``sup{D_Phi(alpha) : alpha in J}`` for the fixed points in asymptotic average.

    When the global maximizer of the spectrum lies in ``J`` the supremum is
    ``D(Psi)``; otherwise a beam search over attractor cells ranks their
    corner points (which lie in ``J``) and the best is evaluated at order ``k``.
    """
    if not ifs.sosc_asserted:
        raise ValueError("strong open set condition must be asserted")
    D, a_max = chi_average_at_dimension(ifs)
    _, _, bound = coding_potential(ifs, k)
    cell = ifs.diameter * float(ifs.ratios.max()) ** membership_depth
    diag = {"coding_bound": bound, "cell_diameter": cell}
    if in_attractor(ifs, a_max, membership_depth, tol=cell):
        if verify and ifs.m ** (k - 1) <= STATE_CAP:
            diag["verified_value"] = _system(ifs, k).legendre(_project(_system(ifs, k).lphi(), a_max)).tau_star
        return FixedPointResult(D, a_max, True, D, a_max, diag)
    best_pt, searched = _beam_search(ifs, a_max, membership_depth, beam, search_k)
    diag["candidates"] = searched
    value = birkhoff_spectrum_point(ifs, best_pt, k=k).value
    return FixedPointResult(value, best_pt, False, D, a_max, diag)


def _beam_search(ifs, a_max, depth, beam, search_k):
    system = _system(ifs, search_k)
    L = system.lphi()
    cache = {}

    def score(pt):
        key = tuple(np.round(pt, 12))
        if key not in cache:
            a = pt if L.contains(pt, 1e-12) else _project(L, pt)
            try:
                cache[key] = system.legendre(a).tau_star
            except NotInLPhi:
                cache[key] = -math.inf
        return cache[key]

    def ranked(cells):
        scored = []
        for w in cells:
            pts = [ifs.code_point(w, x) for x in ifs.fixed_points]
            vals = [(score(p), p) for p in pts]
            top = max(v for v, _ in vals)
            # highest score, then lexicographically smallest point
            cand = min((p for v, p in vals if v >= top - 1e-12), key=lambda p: tuple(p))
            scored.append((top, tuple(cand), w, cand))
        # scores equal to 1e-10 count as ties so mirror-image cells resolve lexicographically
        scored.sort(key=lambda s: (-round(s[0], 10), s[1]))
        return scored

    level = ranked([(j,) for j in range(ifs.m)])
    best = level[0]
    stall = 0
    for _ in range(2, depth + 1):
        children = [w + (j,) for _, _, w, _ in level[:beam] for j in range(ifs.m)]
        level = ranked(children)
        if level[0][0] > best[0] + 1e-10:
            best, stall = level[0], 0
        else:
            stall += 1
            if stall >= 2:
                break
    return best[3], len(cache)


# -- local dimensions of Gibbs measures ---------------------------------------------

@dataclass
class LocalDimensionSpectrum:
    betas: np.ndarray
    values: np.ndarray
    interval: tuple
    curve: SpectrumCurve
    log_ratio: float

    def localized(self, xi: KStepPotential, interval: bool = False) -> float:
        """Dimension of ``{x : d_mu(x) = xi(x)}`` for a target ``xi`` in local-dimension units."""
        scaled = KStepPotential(xi.sft, xi.k, xi.table * self.log_ratio)
        return localized_dimension(scaled, self.curve, interval=interval)


def gibbs_local_dimension_spectrum(ifs: SelfSimilarIFS, phi: KStepPotential, points: int = 201,
                                   normalize: bool = False, tol: float = 1e-8) -> LocalDimensionSpectrum:
    """Spectrum of local dimensions of the Gibbs measure of ``phi`` on the attractor.

    With common ratio ``rho`` the local dimension at ``x`` is ``alpha / log rho``
    where ``alpha`` is the Birkhoff average of ``phi``.
    """
    if not ifs.homogeneous:
        raise NotHomogeneous("local dimension spectra need one common ratio")
    P = pressure_exact(phi)
    if abs(P) > tol:
        if not normalize:
            raise NotNormalized(f"P(phi) = {P} is not zero")
        phi = KStepPotential(phi.sft, phi.k, phi.table - P)
    log_rho = math.log(float(ifs.ratios[0]))
    psi, _, _ = coding_potential(ifs, 1)
    curve = spectrum_curve(WeakGibbsMetric(psi), phi, points=points)
    betas = curve.alphas[:, 0] / log_rho
    order = np.argsort(betas)
    lo, hi = curve.l_phi.interval
    interval = tuple(sorted((lo / log_rho, hi / log_rho)))
    return LocalDimensionSpectrum(betas[order], curve.values[order], interval, curve, log_rho)


def bernoulli_potential(sft: SFT, p) -> KStepPotential:
    return KStepPotential.one_step(sft, np.log(np.asarray(p, dtype=float)))


def as_points(words, ifs: SelfSimilarIFS) -> np.ndarray:
    return np.array([ifs.code_point(w) for w in words])


def coding_consistency(ifs: SelfSimilarIFS, samples: int = 100, depth: int = 40, seed: int = 0) -> float:
    """Largest ``|chi(x) - (c_{x_1} + rho_{x_1} chi(Tx))|`` over random truncated sequences."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(samples):
        x = tuple(int(a) for a in rng.integers(0, ifs.m, size=depth))
        lhs = ifs.code_point(x)
        rhs = ifs.offsets[x[0]] + ifs.ratios[x[0]] * ifs.code_point(x[1:])
        worst = max(worst, float(np.abs(lhs - rhs).max()))
    return worst

