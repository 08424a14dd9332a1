"""Almost-additive potentials on a subshift of finite type.

Two concrete scalar kinds are supported:

* :class:`KStepPotential` -- Birkhoff sums of a function of ``k`` coordinates,
  stored as a table over all ``m**k`` words (``nan`` on inadmissible ones).
  Exactly additive, so the almost-additivity constant is 0.
* :class:`MatrixCocyclePotential` -- ``log`` of the entry sum of a product of
  strictly positive matrices.

A :class:`PotentialBundle` groups ``d`` scalar components into a vector
potential.  Cylinder ranges are exact for both kinds: a cocycle value on
``[w]`` depends on ``w`` only, and the ``k - 1`` undetermined tail windows of a
k-step potential are handled by dynamic programming over suffix states.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .sft import SFT, admissible_mask, decode, encode, word_array

#: Materialize per-state tail value sets only below this many table cells.
TAIL_SET_CAP = 4_000_000


class KStepPotential:
    """Scalar potential ``phi_n(x) = sum_{t<n} g(x_{t+1} .. x_{t+k})``."""

    kind = "kstep"
    C = 0.0

    def __init__(self, sft: SFT, k: int, table):
        if k < 1:
            raise ValueError("k must be >= 1")
        table = np.array(table, dtype=float).reshape(-1)
        if table.size != sft.m ** k:
            raise ValueError(f"table needs {sft.m ** k} entries, got {table.size}")
        mask = admissible_mask(sft, k)
        if np.isnan(table[mask]).any():
            raise ValueError("table must cover every admissible k-word")
        table[~mask] = np.nan
        table.setflags(write=False)
        self.sft = sft
        self.k = k
        self.table = table
        self.mask = mask

    # -- constructors -----------------------------------------------------
    @classmethod
    def constant(cls, sft: SFT, value: float) -> "KStepPotential":
        return cls(sft, 1, np.full(sft.m, float(value)))

    @classmethod
    def one_step(cls, sft: SFT, values) -> "KStepPotential":
        return cls(sft, 1, values)

    @classmethod
    def from_function(cls, sft: SFT, k: int, func) -> "KStepPotential":
        words = decode(np.arange(sft.m ** k), sft.m, k)
        mask = admissible_mask(sft, k)
        table = np.full(sft.m ** k, np.nan)
        for code in np.flatnonzero(mask):
            table[code] = func(tuple(int(a) for a in words[code]))
        return cls(sft, k, table)

    @classmethod
    def from_mapping(cls, sft: SFT, k: int, mapping: dict) -> "KStepPotential":
        table = np.full(sft.m ** k, np.nan)
        for word, value in mapping.items():
            word = tuple(word)
            if len(word) != k:
                raise ValueError(f"key {word} does not have length {k}")
            table[encode(np.array([word]), sft.m)[0]] = value
        return cls(sft, k, table)

    # -- basic data ---------------------------------------------------------
    def __repr__(self):
        return f"KStepPotential(k={self.k}, m={self.sft.m})"

    def value(self, word) -> float:
        return float(self.table[encode(np.array([tuple(word)]), self.sft.m)[0]])

    @cached_property
    def phi1_min(self) -> float:
        return float(np.nanmin(self.table))

    @cached_property
    def phi1_max(self) -> float:
        return float(np.nanmax(self.table))

    def lift(self, K: int) -> "KStepPotential":
        """Same potential written as a function of ``K >= k`` coordinates."""
        if K < self.k:
            raise ValueError("cannot lower the window length")
        if K == self.k:
            return self
        codes = np.arange(self.sft.m ** K)
        head = codes // self.sft.m ** (K - self.k)
        return KStepPotential(self.sft, K, _fill(self.table[head], self.sft, K))

    def scaled(self, c: float) -> "KStepPotential":
        return KStepPotential(self.sft, self.k, _fill(self.table * c, self.sft, self.k))

    # -- evaluation -----------------------------------------------------------
    def evaluate(self, x, n: int) -> float:
        """``phi_n`` at a point given by at least ``n + k - 1`` coordinates."""
        x = np.asarray(x, dtype=np.int64)
        if x.size < n + self.k - 1:
            raise ValueError("point prefix too short")
        if n == 0:
            return 0.0
        windows = np.lib.stride_tricks.sliding_window_view(x[: n + self.k - 1], self.k)
        return float(self.table[encode(windows, self.sft.m)].sum())

    def window_sums(self, words: np.ndarray) -> np.ndarray:
        """Sum of ``g`` over the windows fully inside each row of ``words``."""
        words = np.asarray(words)
        L = words.shape[1]
        if L < self.k:
            return np.zeros(words.shape[0])
        windows = np.lib.stride_tricks.sliding_window_view(words, self.k, axis=1)
        codes = np.zeros(windows.shape[:2], dtype=np.int64)
        for col in range(self.k):
            codes = codes * self.sft.m + windows[:, :, col]
        return self.table[codes].sum(axis=1)

    # -- tail machinery ---------------------------------------------------------
    @property
    def state_len(self) -> int:
        return self.k - 1

    @cached_property
    def tail_extrema(self) -> tuple[np.ndarray, np.ndarray]:
        """Min and max over admissible tails of the ``k-1`` boundary windows.

        Indexed by the code of the last ``k-1`` symbols of a word.
        """
        r = self.k - 1
        m = self.sft.m
        if r == 0:
            return np.zeros(1), np.zeros(1)
        n_states = m ** r
        lo = np.zeros(n_states)
        hi = np.zeros(n_states)
        codes = np.arange(n_states)
        for _ in range(r):
            # appending symbol a to state u forms the window u*m + a
            win = codes[:, None] * m + np.arange(m)[None, :]
            nxt = win % n_states
            g = self.table[win]
            cand_lo = np.where(np.isnan(g), np.inf, g + lo[nxt])
            cand_hi = np.where(np.isnan(g), -np.inf, g + hi[nxt])
            lo, hi = cand_lo.min(axis=1), cand_hi.max(axis=1)
        return lo, hi

    @cached_property
    def tail_sets(self) -> np.ndarray | None:
        """All boundary-window sums per suffix state (``nan`` for inadmissible tails)."""
        r = self.k - 1
        m = self.sft.m
        if r == 0:
            return np.zeros((1, 1))
        if m ** (2 * r) > TAIL_SET_CAP:
            return None
        full = decode(np.arange(m ** (2 * r)), m, 2 * r)
        vals = np.zeros(full.shape[0])
        for i in range(r):
            vals += self.table[encode(full[:, i:i + self.k], m)]
        ok = admissible_mask(self.sft, 2 * r)
        vals[~ok] = np.nan
        return vals.reshape(m ** r, m ** r)

    def cylinder_values(self, word) -> np.ndarray:
        """Every value of ``phi_n`` on the cylinder ``[word]``, ``n = len(word)``."""
        word = tuple(word)
        n = len(word)
        if n == 0:
            return np.zeros(1)
        r = self.k - 1
        if r == 0:
            return np.array([self.window_sums(np.array([word]))[0]])
        exts = _extensions(self.sft, word, r)
        full = np.concatenate([np.tile(np.array(word, dtype=np.int8), (exts.shape[0], 1)), exts], axis=1)
        return np.unique(self.window_sums(full))

    def cylinder_range(self, word) -> tuple[float, float]:
        word = tuple(word)
        n = len(word)
        if n == 0:
            return 0.0, 0.0
        r = self.k - 1
        if r == 0 or n < r:
            v = self.cylinder_values(word)
            return float(v.min()), float(v.max())
        base = self.window_sums(np.array([word]))[0]
        s = encode(np.array([word[-r:]]), self.sft.m)[0]
        lo, hi = self.tail_extrema
        return float(base + lo[s]), float(base + hi[s])

    def var_norm(self, n: int) -> float:
        """Exact variation of ``phi_n`` over length-``n`` cylinders."""
        if n < 1:
            raise ValueError("n must be >= 1")
        r = self.k - 1
        if r == 0:
            return 0.0
        if n >= r:
            lo, hi = self.tail_extrema
            ok = admissible_mask(self.sft, r)
            return float(np.max(hi[ok] - lo[ok]))
        best = 0.0
        for word in word_array(self.sft, n):
            v = self.cylinder_values(tuple(word))
            best = max(best, float(v.max() - v.min()))
        return best


def _fill(table, sft, k):
    """Zero-fill inadmissible entries so that the constructor accepts the table."""
    t = np.array(table, dtype=float)
    mask = admissible_mask(sft, k)
    t[~mask] = 0.0
    return t


def _extensions(sft: SFT, word, r: int) -> np.ndarray:
    """All admissible continuations of length ``r`` after ``word``."""
    last = word[-1]
    W = sft.successors(last).astype(np.int8)[:, None]
    for _ in range(r - 1):
        rows, syms = np.nonzero(sft.A[W[:, -1]])
        W = np.concatenate([W[rows], syms[:, None].astype(np.int8)], axis=1)
    return W


class MatrixCocyclePotential:
    """``phi_n(x) = log || M_{x_1} ... M_{x_n} ||`` with the entry-sum norm."""

    kind = "cocycle"

    def __init__(self, sft: SFT, matrices):
        mats = np.array(matrices, dtype=float)
        if mats.ndim != 3 or mats.shape[0] != sft.m or mats.shape[1] != mats.shape[2]:
            raise ValueError("need one square matrix per symbol")
        if not (mats > 0).all():
            raise ValueError("cocycle matrices must be strictly positive")
        mats.setflags(write=False)
        self.sft = sft
        self.mats = mats
        self.q = mats.shape[1]

    def __repr__(self):
        return f"MatrixCocyclePotential(m={self.sft.m}, q={self.q})"

    @cached_property
    def C(self) -> float:
        M = self.mats
        ratio = (M[:, :, :, None] / M[:, :, None, :]).max()
        return float(math.log(ratio) + 2 * math.log(self.q))

    @cached_property
    def phi1_min(self) -> float:
        return float(np.log(self.mats.sum(axis=(1, 2))).min())

    @cached_property
    def phi1_max(self) -> float:
        return float(np.log(self.mats.sum(axis=(1, 2))).max())

    def log_norms(self, words: np.ndarray) -> np.ndarray:
        """``log ||M_w||`` for each row, with per-step renormalization."""
        words = np.asarray(words, dtype=np.int64)
        N, L = words.shape
        if L == 0:
            return np.full(N, math.log(self.q * self.q))
        v = np.ones((N, self.q))
        logscale = np.zeros(N)
        for col in range(L):
            v = np.einsum("ni,nij->nj", v, self.mats[words[:, col]])
            s = v.sum(axis=1)
            logscale += np.log(s)
            v /= s[:, None]
        return logscale

    def evaluate(self, x, n: int) -> float:
        return float(self.log_norms(np.asarray(x)[None, :n])[0])

    def cylinder_values(self, word) -> np.ndarray:
        if len(word) == 0:
            return np.zeros(1)
        return self.log_norms(np.array([tuple(word)]))

    def cylinder_range(self, word) -> tuple[float, float]:
        v = float(self.cylinder_values(word)[0])
        return v, v

    def var_norm(self, n: int) -> float:
        # the value on [w] is determined by w, so cylinders carry no variation
        if n < 1:
            raise ValueError("n must be >= 1")
        return 0.0


def phi_max(pot) -> float:
    return pot.phi1_max + pot.C


def phi_min(pot) -> float:
    return pot.phi1_min - pot.C


def sup_norm(pot) -> float:
    """``max(|Phi_max|, |Phi_min|)``."""
    return max(abs(phi_max(pot)), abs(phi_min(pot)))


@dataclass(frozen=True)
class PotentialBundle:
    """A vector potential made of ``d`` scalar components."""

    components: tuple
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        comps = tuple(self.components)
        if not comps:
            raise ValueError("bundle needs at least one component")
        sft = comps[0].sft
        if any(c.sft is not sft for c in comps):
            raise ValueError("components must live on the same SFT")
        object.__setattr__(self, "components", comps)

    @classmethod
    def of(cls, *components) -> "PotentialBundle":
        return cls(tuple(components))

    @property
    def sft(self) -> SFT:
        return self.components[0].sft

    @property
    def d(self) -> int:
        return len(self.components)

    @property
    def all_kstep(self) -> bool:
        return all(c.kind == "kstep" for c in self.components)

    @property
    def k(self) -> int:
        return max(getattr(c, "k", 1) for c in self.components)

    @property
    def C(self) -> np.ndarray:
        return np.array([c.C for c in self.components])

    @property
    def phi_max(self) -> np.ndarray:
        return np.array([phi_max(c) for c in self.components])

    @property
    def phi_min(self) -> np.ndarray:
        return np.array([phi_min(c) for c in self.components])

    @property
    def norm(self) -> float:
        return float(np.sqrt(sum(sup_norm(c) ** 2 for c in self.components)))

    def evaluate(self, x, n: int) -> np.ndarray:
        return np.array([c.evaluate(x, n) for c in self.components])

    def lifted(self, K: int | None = None) -> "PotentialBundle":
        if not self.all_kstep:
            raise TypeError("only k-step bundles can be lifted")
        K = self.k if K is None else K
        return PotentialBundle(tuple(c.lift(K) for c in self.components))

    def stacked_table(self) -> np.ndarray:
        """``(m**K, d)`` generator table at the common window length."""
        lifted = self.lifted()
        return np.stack([c.table for c in lifted.components], axis=1)


def as_bundle(pot) -> PotentialBundle:
    return pot if isinstance(pot, PotentialBundle) else PotentialBundle((pot,))


def kstep_vector(sft: SFT, k: int, table) -> PotentialBundle:
    """Bundle from a ``(m**k, d)`` table of vector generator values."""
    table = np.asarray(table, dtype=float)
    if table.ndim == 1:
        table = table[:, None]
    return PotentialBundle(tuple(KStepPotential(sft, k, _fill(table[:, j], sft, k)) for j in range(table.shape[1])))


def combine(terms, const: float = 0.0) -> KStepPotential:
    """Merged generator of ``const + sum c_i pot_i`` over k-step components.

    All components are lifted to the largest window so cylinder sups stay exact.
    """
    terms = [(float(c), p) for c, p in terms]
    if not terms:
        raise ValueError("need at least one term")
    if any(p.kind != "kstep" for _, p in terms):
        raise TypeError("merged generators need k-step components")
    sft = terms[0][1].sft
    K = max(p.k for _, p in terms)
    table = np.full(sft.m ** K, float(const))
    for c, p in terms:
        if c != 0.0:
            table = table + c * p.lift(K).table
    return KStepPotential(sft, K, _fill(table, sft, K))


# -- operations ------------------------------------------------------------------

def birkhoff_range(pot, word):
    """``[min, max]`` of ``phi_{|w|}`` on the cylinder ``[w]``.

    For a scalar potential returns a pair of floats; for a bundle a pair of
    length-``d`` arrays (a componentwise box).
    """
    if isinstance(pot, PotentialBundle):
        lo, hi = zip(*(c.cylinder_range(word) for c in pot.components))
        return np.array(lo), np.array(hi)
    return pot.cylinder_range(word)


def cylinder_points(pot, word) -> np.ndarray:
    """Exact finite set of values of ``phi_{|w|}`` on ``[w]`` as rows in ``R^d``.

    For bundles the values are joint: every row comes from one common point.
    """
    bundle = as_bundle(pot)
    word = tuple(word)
    if all(c.kind == "cocycle" or c.k == 1 for c in bundle.components):
        return np.array([[float(c.cylinder_values(word)[0]) for c in bundle.components]])
    K = max(getattr(c, "k", 1) for c in bundle.components)
    r = K - 1
    exts = _extensions(bundle.sft, word, r) if word else word_array(bundle.sft, r)
    full = np.concatenate([np.tile(np.array(word, dtype=np.int8), (exts.shape[0], 1)), exts], axis=1)
    n = len(word)
    cols = []
    for c in bundle.components:
        if c.kind == "cocycle":
            cols.append(np.full(full.shape[0], float(c.cylinder_values(word)[0])))
        else:
            cols.append(c.window_sums(full[:, : n + c.k - 1]))
    return np.unique(np.stack(cols, axis=1), axis=0)


def sup_weight(pot, word) -> float:
    """``sup exp(phi_n)`` over the cylinder ``[w]``."""
    return math.exp(birkhoff_range(pot, word)[1])


def var_norm(pot, n: int):
    """``||Phi||_n``; for bundles the Euclidean combination of component values."""
    if isinstance(pot, PotentialBundle):
        return float(np.sqrt(sum(c.var_norm(n) ** 2 for c in pot.components)))
    return pot.var_norm(n)


def var_norm_star(pot, n: int, C1: float, C2: float) -> float:
    """``max{ ||Phi||_l : C1 n <= l <= C2 n }``."""
    lo = max(1, math.ceil(C1 * n))
    hi = max(lo, math.floor(C2 * n))
    return max(var_norm(pot, l) for l in range(lo, hi + 1))


def periodic_extension(sft: SFT, word, length: int) -> tuple:
    """``word`` continued periodically through the bridge back to its first symbol."""
    word = tuple(word)
    cycle = word + sft.bridge(word[-1], word[0])
    reps = -(-length // len(cycle))
    return (cycle * reps)[:length]


def holder_approx(pot, k: int):
    """k-step approximation with generator ``phi_k(x_w) / k``.

    Returns ``(approximation, bound)`` where ``bound = C/k + sqrt(d) ||Phi||_k / k``
    controls ``||Phi - Phi^k||_lim``.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    bundle = as_bundle(pot)
    sft = bundle.sft
    words = word_array(sft, k)
    codes = encode(words, sft.m)
    comps = []
    for c in bundle.components:
        table = np.zeros(sft.m ** k)
        if c.kind == "cocycle":
            table[codes] = c.log_norms(words) / k
        else:
            need = k + c.k - 1
            pts = np.array([periodic_extension(sft, tuple(w), need) for w in words], dtype=np.int8)
            table[codes] = c.window_sums(pts) / k
        comps.append(KStepPotential(sft, k, table))
    C = float(np.linalg.norm(bundle.C))
    bound = C / k + math.sqrt(bundle.d) * var_norm(bundle, k) / k
    approx = comps[0] if not isinstance(pot, PotentialBundle) else PotentialBundle(tuple(comps))
    return approx, bound
