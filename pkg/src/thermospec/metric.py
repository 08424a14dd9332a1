"""Weak Gibbs metrics ``d_Psi(x, y) = Psi[x ^ y]`` and their ball families.

A closed ball of radius ``e^{-n}`` is a cylinder ``[w]`` with
``Psi[w] <= e^{-n} < Psi[w*]`` where ``w*`` drops the last symbol and
``Psi[w] = sup_{[w]} exp(psi_{|w|})``; the empty word has weight 1.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .errors import ConfigError, ResolutionTooFine
from .potential import PotentialBundle, as_bundle, cylinder_points, phi_max, phi_min
from .pressure import pressure_exact
from .sft import admissible_words, decode, encode

BALL_CAP = 10_000_000
#: Streaming walks never materialize words, so they get a larger budget.
STREAM_CAP = 200_000_000
CHUNK = 1 << 16
JOINT_TAIL_CAP = 4_000_000


@dataclass(frozen=True, eq=False)
class WeakGibbsMetric:
    psi: object
    C1: float = field(init=False)
    C2: float = field(init=False)

    def __post_init__(self):
        if getattr(self.psi, "kind", None) not in ("kstep", "cocycle"):
            raise ConfigError("metric potential must be scalar k-step or cocycle")
        top = phi_max(self.psi)
        if not top < 0:
            raise ConfigError(f"metric potential needs Psi_max < 0, got {top}")
        object.__setattr__(self, "C1", 1.0 / abs(phi_min(self.psi)))
        object.__setattr__(self, "C2", 1.0 + 1.0 / abs(top))

    @property
    def sft(self):
        return self.psi.sft

    @property
    def psi_min(self) -> float:
        return phi_min(self.psi)

    @property
    def psi_max(self) -> float:
        return phi_max(self.psi)

    def weight(self, word) -> float:
        """``Psi[w]``, the diameter of ``[w]``."""
        if len(word) == 0:
            return 1.0
        return math.exp(self.psi.cylinder_range(tuple(word))[1])

    def distance(self, x, y) -> float:
        x = tuple(x)
        y = tuple(y)
        n = 0
        while n < min(len(x), len(y)) and x[n] == y[n]:
            n += 1
        if n == min(len(x), len(y)) and len(x) == len(y):
            raise ValueError("finite prefixes agree; distance below resolution")
        return self.weight(x[:n])


@dataclass(frozen=True)
class BallFamily:
    n: int
    words: tuple

    def __len__(self):
        return len(self.words)

    @property
    def lengths(self) -> np.ndarray:
        return np.array([len(w) for w in self.words], dtype=np.int64)


@dataclass
class BallChunk:
    """A batch of balls emitted by :func:`walk_balls`.

    ``values[i, t]`` is the joint value of ``phi_{L}`` at the ``t``-th boundary
    extension of ball ``i`` (``nan`` rows are inadmissible extensions);
    ``mult`` counts merged balls sharing identical data.
    """

    length: np.ndarray
    psi_sup: np.ndarray
    mult: np.ndarray
    values: np.ndarray | None
    words: np.ndarray | list | None


class _Walker:
    def __init__(self, metric: WeakGibbsMetric, bundle: PotentialBundle | None, keep_words: bool):
        self.metric = metric
        self.sft = metric.sft
        self.bundle = bundle
        self.keep_words = keep_words
        comps = [metric.psi] + (list(bundle.components) if bundle is not None else [])
        self.comps = comps
        ks = [c.k for c in comps if c.kind == "kstep"]
        self.R = max(max(ks, default=1) - 1, 1)
        m = self.sft.m
        self.m = m
        self.kstep_idx = [i for i, c in enumerate(comps) if c.kind == "kstep"]
        self.coc_idx = [i for i, c in enumerate(comps) if c.kind == "cocycle"]
        self.tables = [np.nan_to_num(comps[i].table) for i in self.kstep_idx]
        psi = metric.psi
        if psi.kind == "kstep":
            self.psi_tail = psi.tail_extrema[1]
        if bundle is not None:
            self._build_joint_tails()

    def _build_joint_tails(self):
        m, R = self.m, self.R
        bcomps = list(self.bundle.components)
        Kb = max((c.k for c in bcomps if c.kind == "kstep"), default=1)
        rt = Kb - 1
        self.rt = rt
        if rt == 0:
            self.joint_tails = np.zeros((m ** R, 1, len(bcomps)))
            return
        if m ** (R + rt) > JOINT_TAIL_CAP:
            raise ResolutionTooFine("boundary tail table too large")
        z = decode(np.arange(m ** (R + rt)), m, R + rt)
        ok = np.all(self.sft.A[z[:, :-1], z[:, 1:]], axis=1)
        out = np.zeros((z.shape[0], len(bcomps)))
        for j, c in enumerate(bcomps):
            if c.kind != "kstep" or c.k == 1:
                continue
            for off in range(R - (c.k - 1), R):
                out[:, j] += np.nan_to_num(c.table[encode(z[:, off: off + c.k], m)])
        out[~ok] = np.nan
        self.joint_tails = out.reshape(m ** R, m ** rt, len(bcomps))

    # -- chunk helpers ----------------------------------------------------------
    def _bundle_values(self, acc, coc_logs, state):
        if self.bundle is None:
            return None
        d = len(self.bundle.components)
        base = np.zeros((acc.shape[0], d))
        for j in range(d):
            ci = j + 1
            if ci in self.kstep_idx:
                base[:, j] = acc[:, self.kstep_idx.index(ci)]
            else:
                base[:, j] = coc_logs[:, self.coc_idx.index(ci)]
        return base[:, None, :] + self.joint_tails[state]

    def _psi_sup(self, acc, coc_logs, state):
        if self.metric.psi.kind == "kstep":
            k = self.metric.psi.k
            return acc[:, 0] + (self.psi_tail[state % self.m ** (k - 1)] if k > 1 else 0.0)
        return coc_logs[:, self.coc_idx.index(0)]

    def walk(self, n: int, cap: int, visit):
        m, R, sft = self.m, self.R, self.sft
        total = 0
        # every pending node holds at least one ball, so total + pending never overshoots the final count
        pending = 0

        def check():
            if total + pending > cap:
                raise ResolutionTooFine(f"more than {cap} balls at resolution n={n}")

        def emit(length, psi_sup, mult, values, words):
            nonlocal total
            total += int(mult.sum())
            check()
            visit(BallChunk(length, psi_sup, mult, values, words))

        if n == 0:
            vals = None
            if self.bundle is not None:
                vals = np.zeros((1, 1, len(self.bundle.components)))
            emit(np.zeros(1, dtype=np.int64), np.zeros(1), np.ones(1, dtype=np.int64), vals,
                 [()] if self.keep_words else None)
            return total
        # short words are handled one by one
        dead = set()
        for L in range(1, R + 1):
            survivors = []
            balls = []
            for w in admissible_words(sft, L):
                if any(w[:j] in dead for j in range(1, L)):
                    continue
                top = self.metric.psi.cylinder_range(w)[1]
                (balls if top <= -n else survivors).append((w, top))
            for w, _ in balls:
                dead.add(w)
            if balls:
                self._emit_short(balls, emit)
            if L == R:
                start = [w for w, _ in survivors]
        if not start:
            return total
        W = np.array(start, dtype=np.int8)
        state = encode(W, m)
        acc = np.zeros((W.shape[0], len(self.kstep_idx)))
        for j, i in enumerate(self.kstep_idx):
            acc[:, j] = self.comps[i].window_sums(W)
        cvec, clog = [], np.zeros((W.shape[0], len(self.coc_idx)))
        for j, i in enumerate(self.coc_idx):
            v = np.ones((W.shape[0], self.comps[i].q))
            lg = np.zeros(W.shape[0])
            for col in range(R):
                v = np.einsum("ni,nij->nj", v, self.comps[i].mats[W[:, col]])
                s = v.sum(axis=1)
                lg += np.log(s)
                v /= s[:, None]
            cvec.append(v)
            clog[:, j] = lg
        mult = np.ones(W.shape[0], dtype=np.int64)
        stack = [(R, state, acc, cvec, clog, mult, W if self.keep_words else None)]
        pending = int(mult.sum())
        check()
        A = sft.A.astype(bool)
        mR = m ** R
        win_mod = [m ** self.comps[i].k for i in self.kstep_idx]
        while stack:
            L, state, acc, cvec, clog, mult, words = stack.pop()
            pending -= int(mult.sum())
            if state.size > CHUNK:
                for s in range(0, state.size, CHUNK):
                    sl = slice(s, s + CHUNK)
                    stack.append((L, state[sl], acc[sl], [v[sl] for v in cvec], clog[sl], mult[sl],
                                  None if words is None else words[sl]))
                pending += int(mult.sum())
                continue
            rows, syms = np.nonzero(A[state % m])
            ext = state[rows] * m + syms
            c_state = ext % mR
            c_acc = acc[rows].copy()
            for j, tab in enumerate(self.tables):
                c_acc[:, j] += tab[ext % win_mod[j]]
            c_vec = []
            c_log = clog[rows].copy()
            for j, i in enumerate(self.coc_idx):
                v = np.einsum("ni,nij->nj", cvec[j][rows], self.comps[i].mats[syms])
                s = v.sum(axis=1)
                c_log[:, j] += np.log(s)
                c_vec.append(v / s[:, None])
            c_mult = mult[rows]
            c_words = None
            if words is not None:
                c_words = np.concatenate([words[rows], syms[:, None].astype(np.int8)], axis=1)
            sup = self._psi_sup(c_acc, c_log, c_state)
            ball = sup <= -n
            if ball.any():
                emit(np.full(int(ball.sum()), L + 1, dtype=np.int64), sup[ball], c_mult[ball],
                     self._bundle_values(c_acc[ball], c_log[ball], c_state[ball]),
                     None if c_words is None else c_words[ball])
            keep = ~ball
            if keep.any():
                nxt = (c_state[keep], c_acc[keep], [v[keep] for v in c_vec], c_log[keep], c_mult[keep],
                       None if c_words is None else c_words[keep])
                if c_words is None:
                    nxt = _merge(*nxt)
                stack.append((L + 1,) + nxt)
                pending += int(nxt[4].sum())
                check()
        return total

    def _emit_short(self, balls, emit):
        words = [w for w, _ in balls]
        sups = np.array([t for _, t in balls])
        L = np.array([len(w) for w in words], dtype=np.int64)
        vals = None
        if self.bundle is not None:
            pts = [cylinder_points(self.bundle, w) for w in words]
            width = max(p.shape[0] for p in pts)
            vals = np.full((len(words), width, len(self.bundle.components)), np.nan)
            for i, p in enumerate(pts):
                vals[i, : p.shape[0]] = p
        emit(L, sups, np.ones(len(words), dtype=np.int64), vals,
             [tuple(w) for w in words] if self.keep_words else None)


def _merge(state, acc, cvec, clog, mult, words):
    """Collapse nodes with identical continuation data, summing multiplicities."""
    key = np.concatenate([state[:, None].astype(float), acc] + cvec + [clog], axis=1)
    uniq, inv = np.unique(key, axis=0, return_inverse=True)
    if uniq.shape[0] == key.shape[0]:
        return state, acc, cvec, clog, mult, words
    inv = inv.ravel()
    first = np.zeros(uniq.shape[0], dtype=np.int64)
    first[inv[::-1]] = np.arange(inv.size)[::-1]
    new_mult = np.bincount(inv, weights=mult, minlength=uniq.shape[0]).astype(np.int64)
    return state[first], acc[first], [v[first] for v in cvec], clog[first], new_mult, None


def walk_balls(metric: WeakGibbsMetric, n: int, visit, bundle=None, keep_words: bool = False,
               cap: int | None = None) -> int:
    """Stream the balls of ``B_n(Psi)`` to ``visit`` in chunks; returns their number."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    if bundle is not None:
        bundle = as_bundle(bundle)
    cap = (BALL_CAP if keep_words else STREAM_CAP) if cap is None else cap
    return _Walker(metric, bundle, keep_words).walk(n, cap, visit)


def ball_family(metric: WeakGibbsMetric, n: int, cap: int = BALL_CAP) -> BallFamily:
    """Minimal cylinders of ``Psi``-diameter at most ``e^{-n}``, sorted lexicographically."""
    out = []

    def visit(chunk):
        if isinstance(chunk.words, list):
            out.extend(chunk.words)
        else:
            out.extend(tuple(int(a) for a in row) for row in chunk.words)

    walk_balls(metric, n, visit, keep_words=True, cap=cap)
    return BallFamily(n, tuple(sorted(out)))


def ball_count(metric: WeakGibbsMetric, n: int, cap: int = STREAM_CAP) -> int:
    """``#B_n(Psi)`` without materializing words."""
    return walk_balls(metric, n, lambda chunk: None, cap=cap)


def pressure_of_multiple(metric: WeakGibbsMetric, lam: float) -> float:
    return pressure_exact(metric.psi.scaled(lam))


def metric_dimension(metric: WeakGibbsMetric, method: str = "root", n_max: int = 20,
                     tol: float = 1e-12):
    """``D(Psi)`` with an error estimate.

    ``root`` solves ``P(lambda Psi) = 0`` inside the bracket
    ``[P(0)/|Psi_min|, P(0)/|Psi_max|]`` implied by the slope bounds of
    ``lambda -> P(lambda Psi)``; ``count`` fits the slope of ``log #B_n``.
    """
    if method == "root":
        if metric.psi.kind != "kstep":
            raise TypeError("root method needs a k-step metric potential")
        p0 = pressure_of_multiple(metric, 0.0)
        lo = p0 / abs(metric.psi_min)
        hi = p0 / abs(metric.psi_max)
        pad = 1e-9 * (1.0 + abs(hi))
        f = lambda lam: pressure_of_multiple(metric, lam)
        a, b = lo - pad, hi + pad
        if f(a) < 0 or f(b) > 0:
            raise RuntimeError("slope bracket failed to enclose the root")
        root = brentq(f, a, b, xtol=tol, rtol=4 * np.finfo(float).eps)
        return root, tol
    if method == "count":
        ns = np.arange(max(1, n_max // 2), n_max + 1)
        logs = np.array([math.log(ball_count(metric, int(k))) for k in ns])
        slope, intercept = np.polyfit(ns, logs, 1)
        step = np.diff(logs)
        spread = float(np.max(np.abs(step - slope))) if step.size else 0.0
        return float(slope), spread
    raise ValueError(f"unknown method {method!r}")
