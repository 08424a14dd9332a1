"""Multifractal spectra of Birkhoff averages in a weak Gibbs metric.

For ``Phi`` (values in ``R^d``) and a metric potential ``Psi`` the exponent
``tau(z, alpha)`` solves ``P(<z, Phi - alpha> + tau Psi) = 0`` and the spectrum
is ``tau*(alpha) = inf_z tau(z, alpha)``.  Large-deviation counts over the ball
families give the finite-scale estimates.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq, minimize
from scipy.spatial import ConvexHull, QhullError

from .errors import NotFullDimensional, NotInLPhi, RangeEscapesLPhi
from .measures import DEFAULT_SEED, sample_averages
from .metric import WeakGibbsMetric, walk_balls
from .potential import KStepPotential, PotentialBundle, as_bundle
from .pressure import perron, transfer_graph

#: Gradients below this magnitude are treated as exact zeros.
GRAD_ZERO = 1e-12
ROOT_TOL = 1e-10
STEP_TOL = 1e-8
Z_CAP = 2.0 ** 16
KARP_MAX = 3000


# -- L_Phi ------------------------------------------------------------------------

def _mean_cycle_karp(n: int, src, dst, w, maximize: bool) -> float:
    sign = 1.0 if maximize else -1.0
    w = sign * w
    D = np.full((n + 1, n), -np.inf)
    D[0] = 0.0
    order = np.argsort(dst, kind="stable")
    s_src, s_dst, s_w = src[order], dst[order], w[order]
    starts = np.flatnonzero(np.r_[True, s_dst[1:] != s_dst[:-1]])
    targets = s_dst[starts]
    for k in range(1, n + 1):
        cand = D[k - 1][s_src] + s_w
        D[k, targets] = np.maximum.reduceat(cand, starts)
    with np.errstate(invalid="ignore"):
        ks = np.arange(n)[:, None]
        ratios = (D[n][None, :] - D[:n]) / (n - ks)
    ratios = np.where(np.isfinite(D[:n]), ratios, np.inf)
    best = np.min(ratios, axis=0)
    best = best[np.isfinite(D[n])]
    return sign * float(best.max())


def _mean_cycle_maxplus(n: int, src, dst, w, maximize: bool, tol: float = 1e-12,
                        max_iter: int = 100_000) -> tuple[float, float]:
    """Max-plus Collatz-Wielandt enclosure of the extreme cycle mean."""
    sign = 1.0 if maximize else -1.0
    w = sign * w
    starts = np.flatnonzero(np.r_[True, src[1:] != src[:-1]])
    x = np.zeros(n)
    lo, hi = -np.inf, np.inf
    for _ in range(max_iter):
        nx = np.maximum.reduceat(w + x[dst], starts)
        diff = nx - x
        lo, hi = float(diff.min()), float(diff.max())
        if hi - lo <= tol:
            break
        x = nx - nx.max()
    if maximize:
        return lo, hi
    return -hi, -lo


def mean_cycle_extrema(pot: KStepPotential) -> tuple[float, float]:
    """Minimum and maximum cycle means of the generator on its de Bruijn graph."""
    graph = transfer_graph(pot.sft, max(pot.k, 1))
    w = graph.edge_values(pot)
    n = graph.n_states
    if n <= KARP_MAX:
        return (_mean_cycle_karp(n, graph.src, graph.dst, w, False),
                _mean_cycle_karp(n, graph.src, graph.dst, w, True))
    lo = _mean_cycle_maxplus(n, graph.src, graph.dst, w, False)
    hi = _mean_cycle_maxplus(n, graph.src, graph.dst, w, True)
    return lo[0], hi[1]


@dataclass(frozen=True)
class LPhi:
    """Interval (``d = 1``) or convex polygon (``d = 2``) of attainable averages.

    ``dim`` is the affine dimension; a degenerate planar set is stored as its
    two extreme points.  ``approximate`` marks sampled hulls.
    """

    d: int
    dim: int
    vertices: np.ndarray
    approximate: bool = False

    @property
    def interval(self) -> tuple[float, float]:
        if self.d != 1:
            raise ValueError("interval only defined for d = 1")
        return float(self.vertices[0, 0]), float(self.vertices[-1, 0])

    def contains(self, alpha, tol: float = 1e-9) -> bool:
        alpha = np.atleast_1d(np.asarray(alpha, dtype=float))
        return self.distance(alpha) <= tol

    def distance(self, alpha) -> float:
        """Euclidean distance from ``alpha`` to the set."""
        alpha = np.atleast_1d(np.asarray(alpha, dtype=float))
        V = self.vertices
        if self.dim == 0:
            return float(np.linalg.norm(alpha - V[0]))
        if self.d == 1:
            lo, hi = self.interval
            return float(max(lo - alpha[0], alpha[0] - hi, 0.0))
        if self.dim == 1:
            return _segment_distance(alpha, V[0], V[1])
        if _inside_polygon(alpha, V):
            return 0.0
        return min(_segment_distance(alpha, V[i], V[(i + 1) % len(V)]) for i in range(len(V)))

    def bounding_box(self) -> tuple[np.ndarray, np.ndarray]:
        return self.vertices.min(axis=0), self.vertices.max(axis=0)


def _segment_distance(p, a, b) -> float:
    ab = b - a
    t = 0.0 if not ab.any() else float(np.clip((p - a) @ ab / (ab @ ab), 0.0, 1.0))
    return float(np.linalg.norm(p - (a + t * ab)))


def _inside_polygon(p, V) -> bool:
    # counter-clockwise hull vertices: inside when left of every edge
    n = len(V)
    scale = max(1.0, float(np.abs(V).max()))
    for i in range(n):
        a, b = V[i], V[(i + 1) % n]
        cross = (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0])
        if cross < -1e-14 * scale * scale:
            return False
    return True


def l_phi(pot, samples: int = 64, cycle_len: int = 4, seed: int = DEFAULT_SEED) -> LPhi:
    """The set ``L_Phi`` of averages of ``Phi`` over invariant measures.

    For ``d = 1`` the endpoints are the exact extreme cycle means; for ``d = 2``
    the convex hull of periodic-orbit and random Markov averages.
    """
    bundle = as_bundle(pot)
    if not bundle.all_kstep:
        raise TypeError("L_Phi needs k-step components")
    if bundle.d == 1:
        lo, hi = mean_cycle_extrema(bundle.components[0])
        dim = 0 if hi - lo <= 1e-12 * (1 + abs(hi)) else 1
        return LPhi(1, dim, np.array([[lo], [hi]]))
    if bundle.d != 2:
        raise NotFullDimensional("only d <= 2 is supported")
    pts = sample_averages(bundle, samples, seed, cycle_len)
    return _hull(pts)


def _hull(pts: np.ndarray) -> LPhi:
    scale = max(1.0, float(np.abs(pts).max()))
    center = pts.mean(axis=0)
    X = pts - center
    _, s, vt = np.linalg.svd(X, full_matrices=False)
    if s[0] <= 1e-12 * scale:
        return LPhi(2, 0, pts[:1].copy(), approximate=True)
    if s.size < 2 or s[1] <= 1e-9 * s[0]:
        proj = X @ vt[0]
        ends = np.array([pts[int(np.argmin(proj))], pts[int(np.argmax(proj))]])
        return LPhi(2, 1, ends, approximate=True)
    try:
        hull = ConvexHull(pts)
    except QhullError:  # pragma: no cover - guarded by the rank test above
        hull = ConvexHull(pts, qhull_options="QJ")
    return LPhi(2, 2, pts[hull.vertices], approximate=True)


# -- tau and the Legendre spectrum --------------------------------------------------

@dataclass(frozen=True)
class Witness:
    entropy: float
    psi_avg: float
    phi_avg: np.ndarray


@dataclass(frozen=True)
class SpectrumPoint:
    alpha: np.ndarray
    tau_star: float
    z_star: np.ndarray
    boundary: bool
    witness: Witness | None = None


class SpectrumSystem:
    """Transfer-matrix data shared by every evaluation of ``tau`` for one pair ``(Psi, Phi)``."""

    _cache: dict = {}

    @classmethod
    def of(cls, metric: WeakGibbsMetric, pot) -> "SpectrumSystem":
        bundle = as_bundle(pot)
        key = (metric, bundle)
        sys_ = cls._cache.get(key)
        if sys_ is None:
            if len(cls._cache) > 32:
                cls._cache.clear()
            sys_ = cls._cache[key] = cls(metric, bundle)
        return sys_

    def __init__(self, metric: WeakGibbsMetric, bundle: PotentialBundle):
        if metric.psi.kind != "kstep" or not bundle.all_kstep:
            raise TypeError("exact spectra need k-step potentials")
        if bundle.d > 2:
            raise NotFullDimensional("only d <= 2 is supported")
        self.metric = metric
        self.bundle = bundle
        self.d = bundle.d
        self.K = max(metric.psi.k, bundle.k)
        self.graph = transfer_graph(metric.sft, self.K)
        self.phi_edges = np.stack([self.graph.edge_values(c) for c in bundle.components], axis=1)
        self.psi_edges = self.graph.edge_values(metric.psi)
        self.psi_min = metric.psi_min
        self.psi_max = metric.psi_max
        self._v0 = None
        self._u0 = None
        self._lphi = None
        self._dim = None

    # pressure of <z, Phi - alpha> + tau Psi
    def _logw(self, z, alpha, tau):
        return (self.phi_edges - alpha) @ z + tau * self.psi_edges

    def _perron(self, logw, need_left=False):
        data = perron(self.graph, logw, need_left=need_left, v0=self._v0, u0=self._u0)
        # nearby parameters have nearby eigenvectors, so reuse them as warm starts
        self._v0 = data.right
        if data.left is not None:
            self._u0 = data.left
        return data

    def pressure(self, z, alpha, tau: float) -> float:
        z, alpha = self._vec(z), self._vec(alpha)
        return self._perron(self._logw(z, alpha, tau)).log_rho

    def _vec(self, x):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        if x.shape != (self.d,):
            raise ValueError(f"expected a vector of length {self.d}")
        return x

    def tau(self, z, alpha, tol: float = ROOT_TOL) -> float:
        """Root of ``tau -> P(<z, Phi - alpha> + tau Psi)``.

        The slope of that map lies in ``[Psi_min, Psi_max]``, so the root sits in
        ``[P0/|Psi_min|, P0/|Psi_max|]`` (reversed for ``P0 < 0``).
        """
        z, alpha = self._vec(z), self._vec(alpha)
        base = (self.phi_edges - alpha) @ z
        f = lambda t: self._perron(base + t * self.psi_edges).log_rho
        p0 = f(0.0)
        a, b = p0 / abs(self.psi_min), p0 / abs(self.psi_max)
        lo, hi = min(a, b), max(a, b)
        pad = 1e-9 * (1.0 + abs(lo) + abs(hi))
        lo, hi = lo - pad, hi + pad
        flo, fhi = f(lo), f(hi)
        while flo < 0:
            lo -= 2 * (hi - lo)
            flo = f(lo)
        while fhi > 0:
            hi += 2 * (hi - lo)
            fhi = f(hi)
        return brentq(f, lo, hi, xtol=tol * 1e-2, rtol=4 * np.finfo(float).eps)

    def tau_with_gradient(self, z, alpha, tol: float = ROOT_TOL):
        """``(tau, grad_z tau, witness)`` from the equilibrium state at the root."""
        z, alpha = self._vec(z), self._vec(alpha)
        t = self.tau(z, alpha, tol)
        logw = self._logw(z, alpha, t)
        data = self._perron(logw, need_left=True)
        g = self.graph
        mass = data.left[g.src] * data.weights * data.right[g.dst]
        mass /= mass.sum()
        phi_avg = mass @ self.phi_edges
        psi_avg = float(mass @ self.psi_edges)
        ent = float(data.log_rho - mass @ logw)
        grad = (phi_avg - alpha) / (-psi_avg)
        return t, grad, Witness(ent, psi_avg, phi_avg)

    def combined_potential(self, z, alpha, tau: float) -> KStepPotential:
        z, alpha = self._vec(z), self._vec(alpha)
        table = self.bundle.stacked_table() if self.bundle.k == self.K else \
            np.stack([c.lift(self.K).table for c in self.bundle.components], axis=1)
        vals = (table - alpha) @ z + tau * self.metric.psi.lift(self.K).table
        return KStepPotential(self.metric.sft, self.K, vals)

    @property
    def dimension(self) -> float:
        """``D(Psi) = tau(0, alpha)``."""
        if self._dim is None:
            self._dim = self.tau(np.zeros(self.d), np.zeros(self.d))
        return self._dim

    def lphi(self) -> LPhi:
        if self._lphi is None:
            self._lphi = l_phi(self.bundle)
        return self._lphi

    def argmax_alpha(self) -> np.ndarray:
        """Average of ``Phi`` under the equilibrium state of ``D(Psi) Psi``."""
        zero = np.zeros(self.d)
        return self.tau_with_gradient(zero, zero)[2].phi_avg

    # -- Legendre transform ------------------------------------------------------
    def legendre(self, alpha, z_cap: float = Z_CAP, step_tol: float = STEP_TOL,
                 method: str = "gradient", lphi_tol: float = 1e-9) -> SpectrumPoint:
        alpha = self._vec(alpha)
        L = self.lphi()
        tol = lphi_tol * (1.0 + float(np.abs(L.vertices).max()))
        if L.approximate:
            tol = max(tol, 1e-6)
        if not L.contains(alpha, tol):
            raise NotInLPhi(f"alpha={alpha.tolist()} lies outside L_Phi")
        if L.dim == 0:
            return SpectrumPoint(alpha, self.dimension, np.zeros(self.d), False)
        if self.d == 1:
            lo, hi = L.interval
            edge = min(abs(alpha[0] - lo), abs(alpha[0] - hi)) <= 1e-12 * (1.0 + abs(lo) + abs(hi))
            return self._legendre_1d(alpha, z_cap, step_tol, method, edge)
        if L.dim < 2:
            raise NotFullDimensional("L_Phi has empty interior in the plane")
        return self._legendre_2d(alpha, z_cap, step_tol, method)

    def _legendre_1d(self, alpha, z_cap, step_tol, method, edge=False):
        def grad(z):
            t, g, wit = self.tau_with_gradient(np.array([z]), alpha)
            g = float(g[0])
            # gradients at round-off level carry no sign information
            return t, (0.0 if abs(g) <= GRAD_ZERO else g), wit

        t0, g0, w0 = grad(0.0)
        if edge:
            # the infimum sits at z -> -inf or +inf; follow the slope up to the cap
            direction = -1.0 if g0 > 0 else 1.0
            z = direction
            t, g, _ = grad(z)
            while abs(z) < z_cap and g != 0.0:
                z = min(2 * abs(z), z_cap) * direction
                t, g, _ = grad(z)
            return SpectrumPoint(alpha, t, np.array([z]), True, None)
        if g0 == 0.0:
            return SpectrumPoint(alpha, t0, np.zeros(1), False, w0)
        direction = -1.0 if g0 > 0 else 1.0
        inner, outer = 0.0, direction
        while True:
            t, g, wit = grad(outer)
            if g == 0.0:
                return SpectrumPoint(alpha, t, np.array([outer]), False, wit)
            if (g > 0) == (direction > 0):
                break
            if abs(outer) >= z_cap:
                return SpectrumPoint(alpha, t, np.array([outer]), True, None)
            inner, outer = outer, min(2 * abs(outer), z_cap) * direction
        a, b = sorted((inner, outer))
        if method == "golden":
            z = _golden(lambda s: self.tau(np.array([s]), alpha), a, b, step_tol)
        else:
            z = brentq(lambda s: grad(s)[1], a, b, xtol=step_tol * 1e-2, rtol=4 * np.finfo(float).eps)
        t, g, wit = grad(z)
        return SpectrumPoint(alpha, t, np.array([z]), False, wit)

    def _legendre_2d(self, alpha, z_cap, step_tol, method):
        if method == "coordinate":
            return self._legendre_coordinate(alpha, z_cap, step_tol)

        def fun(z):
            t, g, _ = self.tau_with_gradient(z, alpha)
            return t, g

        res = minimize(fun, np.zeros(2), jac=True, method="L-BFGS-B",
                       bounds=[(-z_cap, z_cap)] * 2,
                       options={"ftol": 1e-15, "gtol": 1e-11, "maxiter": 1000, "maxcor": 20})
        z = res.x
        t, g, wit = self.tau_with_gradient(z, alpha)
        boundary = bool(np.any(np.abs(z) >= z_cap * (1 - 1e-9)))
        return SpectrumPoint(alpha, t, z, boundary, None if boundary else wit)

    def _legendre_coordinate(self, alpha, z_cap, step_tol):
        z = np.zeros(2)
        f = lambda zz: self.tau(zz, alpha)
        best = f(z)
        for _ in range(200):
            moved = 0.0
            for i in range(2):
                def line(s, i=i):
                    zz = z.copy()
                    zz[i] = s
                    return f(zz)
                a, b, hit_cap = _expand_bracket(line, z[i], z_cap)
                s = _golden(line, a, b, step_tol)
                moved = max(moved, abs(s - z[i]))
                z[i] = s
            new = f(z)
            if moved < step_tol or abs(best - new) < 1e-15:
                best = new
                break
            best = new
        boundary = bool(np.any(np.abs(z) >= z_cap * (1 - 1e-9)))
        wit = None if boundary else self.tau_with_gradient(z, alpha)[2]
        return SpectrumPoint(alpha, best, z, boundary, wit)


def _expand_bracket(f, x0: float, cap: float):
    f0 = f(x0)
    for direction in (1.0, -1.0):
        step = 1.0
        if f(x0 + direction * step) < f0:
            prev, cur = x0, x0 + direction * step
            fcur = f(cur)
            while abs(cur) < cap:
                step *= 2
                nxt = float(np.clip(x0 + direction * step, -cap, cap))
                fn = f(nxt)
                if fn >= fcur:
                    return min(prev, nxt), max(prev, nxt), False
                prev, cur, fcur = cur, nxt, fn
            return min(prev, cur), max(prev, cur), True
    return x0 - 1.0, x0 + 1.0, False


def _golden(f, a: float, b: float, tol: float) -> float:
    invphi = (math.sqrt(5) - 1) / 2
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
    return 0.5 * (a + b)


def tau(metric: WeakGibbsMetric, pot, z, alpha, tol: float = ROOT_TOL) -> float:
    return SpectrumSystem.of(metric, pot).tau(z, alpha, tol)


def legendre_spectrum(metric: WeakGibbsMetric, pot, alpha, **kw) -> tuple[float, np.ndarray, bool]:
    """``(tau*(alpha), z*, boundary flag)``."""
    pt = SpectrumSystem.of(metric, pot).legendre(alpha, **kw)
    return pt.tau_star, pt.z_star, pt.boundary


# -- counting estimators -------------------------------------------------------------

def tau_metric_estimate(metric: WeakGibbsMetric, pot, z, alpha, n: int) -> float:
    """``(1/n) log sum_{w in B_n} exp(sup_{[w]} <z, phi_{|w|} - |w| alpha>)``."""
    bundle = as_bundle(pot)
    z = np.atleast_1d(np.asarray(z, dtype=float))
    alpha = np.atleast_1d(np.asarray(alpha, dtype=float))
    state = {"top": -np.inf, "sum": 0.0}

    def visit(chunk):
        v = chunk.values @ z - chunk.length[:, None] * (alpha @ z)
        v = np.where(np.isnan(v), -np.inf, v).max(axis=1)
        top = max(state["top"], float(v.max()))
        state["sum"] = state["sum"] * math.exp(state["top"] - top) if np.isfinite(state["top"]) else 0.0
        state["sum"] += float(chunk.mult @ np.exp(v - top))
        state["top"] = top

    walk_balls(metric, n, visit, bundle=bundle)
    return (state["top"] + math.log(state["sum"])) / max(n, 1)


def _hits(chunk, alpha, eps_list):
    L = np.maximum(chunk.length, 1)[:, None, None]
    dist = np.linalg.norm(chunk.values / L - alpha, axis=2)
    dist = np.where(np.isnan(dist), np.inf, dist).min(axis=1)
    dist = np.where(chunk.length > 0, dist, np.inf)
    return [int(chunk.mult[dist < eps].sum()) for eps in eps_list]


def ld_counts(metric: WeakGibbsMetric, pot, alpha, n: int, eps_list) -> list[int]:
    """``f(alpha, n, eps)`` for several radii in one walk of ``B_n``."""
    bundle = as_bundle(pot)
    alpha = np.atleast_1d(np.asarray(alpha, dtype=float))
    eps_list = [float(e) for e in eps_list]
    totals = [0] * len(eps_list)

    def visit(chunk):
        for i, c in enumerate(_hits(chunk, alpha, eps_list)):
            totals[i] += c

    walk_balls(metric, n, visit, bundle=bundle)
    return totals


def ld_count(metric: WeakGibbsMetric, pot, alpha, n: int, eps: float) -> int:
    """Number of balls in ``B_n`` containing a point whose average is ``eps``-close to ``alpha``."""
    return ld_counts(metric, pot, alpha, n, [eps])[0]


@dataclass(frozen=True)
class LambdaTable:
    rows: tuple
    extrapolated: float

    def value(self, n: int, eps: float) -> float:
        for r in self.rows:
            if r[0] == n and r[1] == eps:
                return r[2]
        raise KeyError((n, eps))


def lambda_estimate(metric: WeakGibbsMetric, pot, alpha, n_list, eps_list) -> LambdaTable:
    """Rows ``(n, eps, log f / n)``; the extrapolation fits ``a + b/n`` at the smallest radius."""
    rows = []
    for n in n_list:
        counts = ld_counts(metric, pot, alpha, int(n), eps_list)
        for eps, f in zip(eps_list, counts):
            rows.append((int(n), float(eps), math.log(f) / n if f > 0 else -math.inf))
    eps0 = min(eps_list)
    pts = [(n, v) for n, e, v in rows if e == eps0 and np.isfinite(v)]
    if len(pts) >= 2:
        ns = np.array([p[0] for p in pts], dtype=float)
        vs = np.array([p[1] for p in pts])
        coef = np.polyfit(1.0 / ns, vs, 1)
        extra = float(coef[1])
    else:
        extra = pts[0][1] if pts else -math.inf
    return LambdaTable(tuple(rows), extra)


# -- curves and localized dimensions ----------------------------------------------

@dataclass
class SpectrumCurve:
    metric: WeakGibbsMetric
    potential: PotentialBundle
    grid: list
    l_phi: LPhi
    d_psi_dim: float
    shape: tuple = field(default=())

    @property
    def alphas(self) -> np.ndarray:
        return np.array([p.alpha for p in self.grid])

    @property
    def values(self) -> np.ndarray:
        return np.array([p.tau_star for p in self.grid])

    @property
    def system(self) -> SpectrumSystem:
        return SpectrumSystem.of(self.metric, self.potential)


def spectrum_curve(metric: WeakGibbsMetric, pot, points: int = 201, grid2: int = 41,
                   threads: int = 1, **kw) -> SpectrumCurve:
    """Evaluate ``tau*`` on a uniform grid over ``L_Phi`` (clipped to the hull for ``d = 2``).

    With ``threads > 1`` contiguous slices of the grid go to worker threads, each
    with its own transfer-matrix workspace; output order follows the grid.
    """
    system = SpectrumSystem.of(metric, pot)
    L = system.lphi()
    if system.d == 1:
        lo, hi = L.interval
        alphas = [np.array([a]) for a in (np.linspace(lo, hi, points) if L.dim else [lo])]
        shape = (len(alphas),)
    else:
        if L.dim < 2:
            raise NotFullDimensional("L_Phi has empty interior in the plane")
        bmin, bmax = L.bounding_box()
        alphas = [np.array([x, y]) for x in np.linspace(bmin[0], bmax[0], grid2)
                  for y in np.linspace(bmin[1], bmax[1], grid2)]
        alphas = [a for a in alphas if L.contains(a, 1e-12)]
        shape = (grid2, grid2)
    if threads > 1 and len(alphas) > 1:
        from concurrent.futures import ThreadPoolExecutor

        slices = np.array_split(np.arange(len(alphas)), threads)

        def work(idx):
            local = SpectrumSystem(metric, system.bundle)
            local._lphi = L
            return [local.legendre(alphas[i], **kw) for i in idx]

        with ThreadPoolExecutor(threads) as pool:
            grid = [p for part in pool.map(work, slices) for p in part]
    else:
        grid = [system.legendre(a, **kw) for a in alphas]
    return SpectrumCurve(metric, system.bundle, grid, L, system.dimension, shape)


def localized_dimension(xi: KStepPotential, target, interval: bool = False,
                        tol: float = 1e-9, step_tol: float = 1e-9) -> float:
    """``sup{tau*(alpha) : alpha in xi(Sigma_A)}`` for ``d = 1``.

    ``target`` is a :class:`SpectrumCurve` or :class:`SpectrumSystem`.  The range
    of ``xi`` is its finite set of values, or ``[min, max]`` when ``interval``.
    """
    system = target.system if isinstance(target, SpectrumCurve) else target
    if system.d != 1:
        raise NotFullDimensional("localized dimensions need d = 1")
    vals = xi.table[~np.isnan(xi.table)]
    lo_x, hi_x = float(vals.min()), float(vals.max())
    L = system.lphi()
    lo, hi = L.interval
    slack = tol * (1 + abs(lo) + abs(hi))
    if lo_x < lo - slack or hi_x > hi + slack:
        raise RangeEscapesLPhi(f"xi range [{lo_x}, {hi_x}] escapes L_Phi [{lo}, {hi}]")
    clamp = lambda a: float(np.clip(a, lo, hi))
    f = lambda a: system.legendre([clamp(a)]).tau_star
    if not interval:
        return max(f(a) for a in np.unique(vals))
    best = max(f(lo_x), f(hi_x))
    if hi_x - lo_x > step_tol:
        a = _golden(lambda s: -f(s), lo_x, hi_x, step_tol)
        best = max(best, f(a))
    return best


# -- regularity checks -------------------------------------------------------------

def _lines(curve: SpectrumCurve):
    """Index sequences of grid points along straight lines."""
    if len(curve.shape) == 1:
        return [list(range(len(curve.grid)))]
    alphas = curve.alphas
    lines = []
    for axis in (0, 1):
        for key in np.unique(alphas[:, axis]):
            idx = np.flatnonzero(alphas[:, axis] == key)
            idx = idx[np.argsort(alphas[idx, 1 - axis])]
            if idx.size >= 3:
                lines.append(list(idx))
    return lines


def quasi_concavity_violation(curve: SpectrumCurve) -> float:
    """Largest ``min(f(a), f(b)) - f(c)`` over grid triples ``a < c < b`` on a line."""
    worst = 0.0
    vals = curve.values
    for idx in _lines(curve):
        v = vals[idx]
        # for each interior point the binding triple uses the largest values on each side
        left = np.maximum.accumulate(v)
        right = np.maximum.accumulate(v[::-1])[::-1]
        for i in range(1, len(v) - 1):
            worst = max(worst, min(left[i - 1], right[i + 1]) - v[i])
    return float(worst)


def monotone_from_max_violation(curve: SpectrumCurve) -> float:
    """Largest increase of ``tau*`` when moving away from the line maximum."""
    worst = 0.0
    vals = curve.values
    for idx in _lines(curve):
        v = vals[idx]
        j = int(np.argmax(v))
        if j > 0:
            worst = max(worst, float(np.max(np.diff(v[: j + 1]) * -1.0, initial=0.0)))
        if j < len(v) - 1:
            worst = max(worst, float(np.max(np.diff(v[j:]), initial=0.0)))
    return worst
