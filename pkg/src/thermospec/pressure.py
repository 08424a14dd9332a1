"""Topological pressure.

k-step potentials get an exact value: the log of the Perron root of a
weighted transfer matrix on the de Bruijn graph of admissible words, with a
Collatz-Wielandt enclosure certifying it.  General almost-additive potentials
get a finite-``n`` bracket from the word sums
``a_n = log sum_{|w| = n} sup_{[w]} exp(phi_n)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.sparse as sp

from .errors import NonIrreducible
from .potential import KStepPotential, MatrixCocyclePotential, combine, phi_min, word_array
from .sft import SFT, admissible_mask

DENSE_MAX = 64
PERRON_TOL = 1e-12
#: Iteration at which a slow power iteration restarts from an eigensolver vector.
RESTART = 200


@dataclass(frozen=True, eq=False)
class TransferGraph:
    """Edges of the order-``r`` de Bruijn graph, ``r = max(K - 1, 1)``.

    A state is an admissible ``r``-word; appending an admissible symbol gives an
    edge whose weight is the generator value on the last ``K`` symbols.
    """

    sft: SFT
    K: int
    r: int
    state_codes: np.ndarray
    src: np.ndarray
    dst: np.ndarray
    win: np.ndarray

    @property
    def n_states(self) -> int:
        return self.state_codes.size

    def edge_values(self, pot: KStepPotential) -> np.ndarray:
        if pot.k > self.K:
            raise ValueError("potential window longer than graph order")
        return pot.lift(self.K).table[self.win]


@lru_cache(maxsize=32)
def transfer_graph(sft: SFT, K: int) -> TransferGraph:
    m = sft.m
    r = max(K - 1, 1)
    n_codes = m ** r
    codes = np.flatnonzero(admissible_mask(sft, r))
    index = np.full(n_codes, -1, dtype=np.int64)
    index[codes] = np.arange(codes.size)
    ext = codes[:, None] * m + np.arange(m)[None, :]
    ok = sft.A[codes % m].astype(bool)
    src = np.broadcast_to(np.arange(codes.size)[:, None], ext.shape)[ok]
    ext = ext[ok]
    dst = index[ext % n_codes]
    assert (dst >= 0).all()
    return TransferGraph(sft, K, r, codes, src, dst, ext % (m ** K))


@dataclass(frozen=True)
class PerronData:
    """Perron root in log scale with its enclosure and eigenvectors."""

    log_rho: float
    log_lower: float
    log_upper: float
    right: np.ndarray
    left: np.ndarray | None
    weights: np.ndarray
    shift: float


def _cw_bounds(Lv: np.ndarray, v: np.ndarray) -> tuple[float, float]:
    pos = v > 0
    ratios = Lv[pos] / v[pos]
    return float(ratios.min()), float(ratios.max())


def perron(graph: TransferGraph, logw: np.ndarray, need_left: bool = False,
           v0: np.ndarray | None = None, tol: float = PERRON_TOL,
           max_iter: int = 20000, u0: np.ndarray | None = None) -> PerronData:
    """Perron root of the weighted transfer matrix ``L[src, dst] = exp(logw)``.

    The returned root sits inside the Collatz-Wielandt enclosure
    ``[min (Lv)_i / v_i, max (Lv)_i / v_i]`` whose log-width is at most ``tol``
    whenever the iteration converged.
    """
    shift = float(np.max(logw))
    w = np.exp(logw - shift)
    n = graph.n_states
    dense = n <= DENSE_MAX
    if dense:
        # de Bruijn edges are distinct (src, dst) pairs, so direct assignment is exact
        L = np.zeros((n, n))
        L[graph.src, graph.dst] = w
        LT = L.T
    else:
        L = sp.csr_matrix((w, (graph.src, graph.dst)), shape=(n, n))
        LT = None
    if dense and v0 is None:
        v = _dense_vector(L)
    else:
        v = np.ones(n) / n if v0 is None else np.abs(v0) / np.abs(v0).sum()
        v = np.maximum(v, 1e-300)
    lo = hi = float("nan")
    for it in range(max_iter):
        Lv = L @ v
        lo, hi = _cw_bounds(Lv, v)
        if hi <= 0:
            raise NonIrreducible("transfer matrix annihilates the iterate")
        if math.log(hi) - math.log(max(lo, 1e-300)) <= tol:
            break
        v = Lv / Lv.sum()
        if it == RESTART:
            # slow convergence from the warm start: restart from an eigensolver vector
            v = _dense_vector(L) if dense else _arpack_vector(L, v)
    left = None
    if need_left:
        if dense and u0 is None:
            u = _dense_vector(LT)
        else:
            LT = LT if dense else L.T.tocsr()
            u = np.ones(n) / n if u0 is None else np.maximum(np.abs(u0) / np.abs(u0).sum(), 1e-300)
            for it in range(max_iter):
                Lu = LT @ u
                a, b = _cw_bounds(Lu, u)
                if math.log(b) - math.log(max(a, 1e-300)) <= tol:
                    break
                u = Lu / Lu.sum()
                if it == RESTART:
                    u = _dense_vector(LT) if dense else _arpack_vector(LT, u)
        left = u / u.sum()
    rho = 0.5 * (lo + hi)
    return PerronData(shift + math.log(rho), shift + math.log(lo), shift + math.log(hi),
                      v, left, w, shift)


def _dense_vector(L: np.ndarray) -> np.ndarray:
    vals, vecs = np.linalg.eig(L)
    v = np.abs(vecs[:, int(np.argmax(vals.real))].real)
    return np.maximum(v / v.sum(), 1e-300)


def _arpack_vector(L, v):
    from scipy.sparse.linalg import eigs

    try:
        vals, vecs = eigs(L, k=1, which="LM", v0=v, tol=1e-14)
        u = np.abs(vecs[:, 0].real)
        return u / u.sum()
    except Exception:  # pragma: no cover - ARPACK failures fall back to plain iteration
        return v


def log_perron_root(graph: TransferGraph, logw: np.ndarray, tol: float = PERRON_TOL) -> float:
    return perron(graph, logw, tol=tol).log_rho


def pressure_exact(pot: KStepPotential, tol: float = PERRON_TOL) -> float:
    """Exact topological pressure of a scalar k-step potential."""
    if pot.kind != "kstep":
        raise TypeError("exact pressure needs a k-step potential")
    graph = transfer_graph(pot.sft, pot.k)
    return perron(graph, graph.edge_values(pot), tol=tol).log_rho


def pressure_enclosure(pot: KStepPotential, tol: float = PERRON_TOL) -> tuple[float, float]:
    graph = transfer_graph(pot.sft, pot.k)
    data = perron(graph, graph.edge_values(pot), tol=tol)
    return data.log_lower, data.log_upper


@dataclass(frozen=True)
class PressureBracket:
    lower: float
    upper: float
    n_used: int
    slack: float = 0.0

    def __post_init__(self):
        if self.lower > self.upper:
            raise ValueError("bracket lower end exceeds upper end")

    @property
    def width(self) -> float:
        return self.upper - self.lower

    @property
    def midpoint(self) -> float:
        return 0.5 * (self.lower + self.upper)

    def contains(self, value: float, tol: float = 0.0) -> bool:
        return self.lower - tol <= value <= self.upper + tol


def word_sum(pot, n: int) -> float:
    """``a_n = log sum_{w in Sigma_{A,n}} sup_{x in [w]} exp(phi_n(x))``."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if pot.kind == "cocycle":
        return _cocycle_word_sum(pot, n)
    if pot.kind == "combination":
        return _combination_word_sum(pot, n)
    return _kstep_word_sum(pot, n)


def _cocycle_word_sum(pot: MatrixCocyclePotential, n: int) -> float:
    # V[a] = sum over words ending in a of the row vector 1^T M_w; the entry-sum
    # norm is linear on positive matrices, so the total is exact.
    A = pot.sft.A.astype(float)
    V = pot.mats.sum(axis=1)
    logscale = 0.0
    for _ in range(n - 1):
        V = np.einsum("ab,ai,bij->bj", A, V, pot.mats)
        s = V.sum()
        logscale += math.log(s)
        V /= s
    return logscale + math.log(V.sum())


def _kstep_word_sum(pot: KStepPotential, n: int) -> float:
    graph = transfer_graph(pot.sft, pot.k)
    r = graph.r
    if n < r:
        words = word_array(pot.sft, n)
        vals = np.array([pot.cylinder_range(tuple(w))[1] for w in words])
        top = vals.max()
        return float(top + math.log(np.exp(vals - top).sum()))
    ev = graph.edge_values(pot)
    shift = float(ev.max())
    n_states = graph.n_states
    LT = sp.csr_matrix((np.exp(ev - shift), (graph.dst, graph.src)), shape=(n_states, n_states))
    if pot.k == 1:
        F = np.exp(pot.table[graph.state_codes])
    else:
        F = np.ones(n_states)
    logscale = 0.0
    for _ in range(n - r):
        F = LT @ F
        s = F.sum()
        logscale += math.log(s) + shift
        F /= s
    _, tail_hi = pot.tail_extrema
    tail = tail_hi[graph.state_codes] if pot.k > 1 else np.zeros(n_states)
    return logscale + math.log(float(F @ np.exp(tail)))


def pressure_bracket(pot, n: int) -> PressureBracket:
    """Two-sided bracket on the pressure from the length-``n`` word sum.

    ``upper = (a_n + C) / n`` by subadditivity of ``a_n + C``; the lower end glues
    blocks through bridge words, costing ``2C + ||Phi||_n`` per block and
    ``p0 * Phi_min`` for each bridge.
    """
    a_n = word_sum(pot, n)
    C = pot.C
    p0 = pot.sft.p0
    slack = 2 * C + pot.var_norm(n) - p0 * phi_min(pot)
    upper = (a_n + C) / n
    lower = (a_n + p0 * phi_min(pot) - 2 * C - pot.var_norm(n)) / (n + p0)
    return PressureBracket(lower=min(lower, upper), upper=upper, n_used=n, slack=slack)


def pressure_extrapolate(pot, n: int) -> float:
    """Richardson estimate ``2 a_{2n} / (2n) - a_n / n`` removing the ``1/n`` term."""
    return 2 * word_sum(pot, 2 * n) / (2 * n) - word_sum(pot, n) / n


def pressure_combined(terms, n: int = 64):
    """Pressure of ``sum c_i pot_i``.

    Returns a float when every component is k-step (merged generator on the
    common de Bruijn graph) and a :class:`PressureBracket` otherwise.
    """
    terms = list(terms)
    if all(p.kind == "kstep" for _, p in terms):
        return pressure_exact(combine(terms))
    return pressure_bracket(_LinearCombination(terms), n)


class _LinearCombination:
    """Scalar almost-additive potential ``sum c_i pot_i`` evaluated by enumeration."""

    kind = "combination"

    def __init__(self, terms):
        self.terms = [(float(c), p) for c, p in terms]
        self.sft = self.terms[0][1].sft

    @property
    def C(self):
        return sum(abs(c) * p.C for c, p in self.terms)

    @property
    def phi1_min(self):
        words = word_array(self.sft, 1)
        return min(self.cylinder_range(tuple(w))[0] for w in words)

    @property
    def phi1_max(self):
        words = word_array(self.sft, 1)
        return max(self.cylinder_range(tuple(w))[1] for w in words)

    def cylinder_range(self, word):
        from .potential import cylinder_points, PotentialBundle

        pts = cylinder_points(PotentialBundle(tuple(p for _, p in self.terms)), word)
        vals = pts @ np.array([c for c, _ in self.terms])
        return float(vals.min()), float(vals.max())

    def var_norm(self, n):
        return sum(abs(c) * p.var_norm(n) for c, p in self.terms)


def _combination_word_sum(pot: _LinearCombination, n: int) -> float:
    words = word_array(pot.sft, n)
    vals = np.array([pot.cylinder_range(tuple(w))[1] for w in words])
    top = vals.max()
    return float(top + math.log(np.exp(vals - top).sum()))

