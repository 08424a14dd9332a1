"""Markov measures on a subshift of finite type.

A measure of order ``r`` lives on the de Bruijn graph whose states are the
admissible ``r``-words; each edge is an admissible ``(r+1)``-word.  Equilibrium
states of k-step potentials come from the Perron eigendata of the weighted
transfer matrix.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import BoundaryAlpha, OrderMismatch
from .potential import KStepPotential, PotentialBundle, as_bundle
from .pressure import perron, transfer_graph
from .sft import SFT, admissible_words, encode, periodic_admissible

DEFAULT_SEED = 0x5EED


@dataclass(frozen=True, eq=False)
class MarkovMeasure:
    """Stationary order-``r`` Markov chain.

    ``trans[e]`` is the probability of edge ``e`` of ``transfer_graph(sft, r + 1)``
    given its source state; ``stationary`` is indexed by state.
    """

    sft: SFT
    r: int
    trans: np.ndarray
    stationary: np.ndarray

    @property
    def graph(self):
        return transfer_graph(self.sft, self.r + 1)

    @property
    def edge_probs(self) -> np.ndarray:
        return self.stationary[self.graph.src] * self.trans

    def row_sums(self) -> np.ndarray:
        g = self.graph
        return np.bincount(g.src, weights=self.trans, minlength=g.n_states)

    def stationarity_defect(self) -> float:
        g = self.graph
        pushed = np.bincount(g.dst, weights=self.edge_probs, minlength=g.n_states)
        return float(np.abs(pushed - self.stationary).max())

    def word_marginals(self) -> tuple[np.ndarray, np.ndarray]:
        """``(codes, probs)`` of the ``(r+1)``-word distribution."""
        return self.graph.win, self.edge_probs

    def cylinder_mass(self, word) -> float:
        """``mu([word])`` for ``len(word) >= r``."""
        word = tuple(word)
        if len(word) < self.r:
            raise ValueError("word shorter than the chain order")
        g = self.graph
        index = {int(c): i for i, c in enumerate(g.state_codes)}
        s = encode(np.array([word[: self.r]]), self.sft.m)[0]
        if int(s) not in index:
            return 0.0
        mass = float(self.stationary[index[int(s)]])
        lookup = {int(c): e for e, c in enumerate(g.win)}
        for i in range(len(word) - self.r):
            code = int(encode(np.array([word[i: i + self.r + 1]]), self.sft.m)[0])
            if code not in lookup:
                return 0.0
            mass *= float(self.trans[lookup[code]])
        return mass

    def lift(self, r_new: int) -> "MarkovMeasure":
        """Same measure presented as a chain of order ``r_new >= r``."""
        if r_new < self.r:
            raise ValueError("cannot lower the order")
        if r_new == self.r:
            return self
        G = transfer_graph(self.sft, r_new + 1)
        probs = _word_probs(self, r_new + 1)
        state_mass = np.bincount(G.src, weights=probs[G.win], minlength=G.n_states)
        with np.errstate(invalid="ignore", divide="ignore"):
            trans = np.where(state_mass[G.src] > 0, probs[G.win] / state_mass[G.src], 0.0)
        # states of zero mass get uniform rows so the chain stays stochastic
        out_deg = np.bincount(G.src, minlength=G.n_states)
        dead = state_mass[G.src] <= 0
        trans[dead] = 1.0 / out_deg[G.src[dead]]
        return MarkovMeasure(self.sft, r_new, trans, state_mass)


def _word_probs(mu: MarkovMeasure, length: int) -> np.ndarray:
    """Probabilities of all ``m**length`` words (0 on inadmissible ones)."""
    m = mu.sft.m
    g = mu.graph
    base = np.zeros(m ** (mu.r + 1))
    base[g.win] = mu.edge_probs
    probs = base
    cur = mu.r + 1
    trans_full = np.zeros(m ** (mu.r + 1))
    trans_full[g.win] = mu.trans
    while cur < length:
        codes = np.arange(probs.size)
        ext = codes[:, None] * m + np.arange(m)[None, :]
        tail = ext % (m ** (mu.r + 1))
        probs = (probs[:, None] * trans_full[tail]).ravel()
        cur += 1
    return probs


def entropy(mu: MarkovMeasure) -> float:
    """``-sum_u pi(u) sum_v t(u,v) log t(u,v)``."""
    t = mu.trans
    pe = mu.edge_probs
    pos = (t > 0) & (pe > 0)
    return float(-(pe[pos] * np.log(t[pos])).sum())


def potential_average(mu: MarkovMeasure, pot, auto_lift: bool = True):
    """``Phi_*(mu)``: exact average of a k-step potential (scalar or bundle)."""
    bundle = as_bundle(pot)
    if not bundle.all_kstep:
        raise TypeError("exact averages need k-step components")
    K = bundle.k
    if K > mu.r + 1:
        if not auto_lift:
            raise OrderMismatch(f"potential window {K} exceeds chain order {mu.r} + 1")
        mu = mu.lift(K - 1)
    codes, probs = mu.word_marginals()
    vals = np.array([c.lift(mu.r + 1).table[codes] @ probs for c in bundle.components])
    return vals if isinstance(pot, PotentialBundle) else float(vals[0])


def equilibrium_data(pot: KStepPotential, need_measure: bool = True):
    """Perron data of ``pot`` and, optionally, its equilibrium Markov measure."""
    graph = transfer_graph(pot.sft, pot.k)
    data = perron(graph, graph.edge_values(pot), need_left=True)
    return data, (_measure_from_perron(pot.sft, graph, data) if need_measure else None)


def _measure_from_perron(sft: SFT, graph, data) -> MarkovMeasure:
    r = data.right
    l = data.left
    rho = math.exp(data.log_rho - data.shift)
    with np.errstate(invalid="ignore", divide="ignore"):
        trans = np.where(r[graph.src] > 0, data.weights * r[graph.dst] / (rho * r[graph.src]), 0.0)
    row = np.bincount(graph.src, weights=trans, minlength=graph.n_states)
    out_deg = np.bincount(graph.src, minlength=graph.n_states)
    bad = row[graph.src] <= 0
    trans[bad] = 1.0 / out_deg[graph.src[bad]]
    trans[~bad] /= row[graph.src[~bad]]
    pi = l * r
    pi = pi / pi.sum()
    return MarkovMeasure(sft, graph.r, trans, pi)


def equilibrium_state(pot: KStepPotential) -> MarkovMeasure:
    """The Ruelle-Perron-Frobenius measure of a scalar k-step potential."""
    return equilibrium_data(pot)[1]


def parry_measure(sft: SFT) -> MarkovMeasure:
    return equilibrium_state(KStepPotential.constant(sft, 0.0))


def bernoulli(sft: SFT, p) -> MarkovMeasure:
    """Product measure with symbol probabilities ``p`` (full shifts only)."""
    if not sft.is_full:
        raise ValueError("Bernoulli measures need a full shift")
    p = np.asarray(p, dtype=float)
    g = transfer_graph(sft, 2)
    last = g.win % sft.m
    return MarkovMeasure(sft, 1, p[last], p[g.state_codes])


def _stationary(graph, trans: np.ndarray) -> np.ndarray:
    n = graph.n_states
    P = np.zeros((n, n))
    np.add.at(P, (graph.src, graph.dst), trans)
    vals, vecs = np.linalg.eig(P.T)
    v = np.abs(vecs[:, int(np.argmin(np.abs(vals - 1.0)))].real)
    v /= v.sum()
    for _ in range(50):
        nxt = v @ P
        if np.abs(nxt - v).max() < 1e-15:
            break
        v = nxt
    return v / v.sum()


def random_markov_measure(sft: SFT, r: int = 1, rng=None) -> MarkovMeasure:
    """Order-``r`` chain with Dirichlet(1,...,1) rows masked by admissibility."""
    rng = np.random.default_rng(DEFAULT_SEED if rng is None else rng)
    g = transfer_graph(sft, r + 1)
    raw = rng.gamma(1.0, size=g.src.size)
    row = np.bincount(g.src, weights=raw, minlength=g.n_states)
    trans = raw / row[g.src]
    return MarkovMeasure(sft, r, trans, _stationary(g, trans))


def cycle_measure(sft: SFT, word) -> MarkovMeasure:
    """Uniform measure on the periodic orbit of ``word`` (order ``len(word)``)."""
    word = tuple(word)
    if not periodic_admissible(sft, word):
        raise ValueError("periodic repetition of the word is not admissible")
    p = len(word)
    r = p
    g = transfer_graph(sft, r + 1)
    index = {int(c): i for i, c in enumerate(g.state_codes)}
    rot = [word[i:] + word[:i] for i in range(p)]
    states = [index[int(encode(np.array([w]), sft.m)[0])] for w in rot]
    out_deg = np.bincount(g.src, minlength=g.n_states)
    trans = 1.0 / out_deg[g.src]
    pi = np.zeros(g.n_states)
    for i, s in enumerate(states):
        nxt_word = rot[i] + (rot[i][0],)
        code = int(encode(np.array([nxt_word]), sft.m)[0])
        mask = g.src == s
        trans[mask] = (g.win[mask] == code).astype(float)
        pi[s] += 1.0 / p
    return MarkovMeasure(sft, r, trans, pi)


def periodic_average(pot, word) -> np.ndarray:
    """Average of a k-step bundle along the periodic orbit of ``word``."""
    bundle = as_bundle(pot)
    word = tuple(word)
    p = len(word)
    K = bundle.k
    reps = -(-(p + K - 1) // p) + 1
    x = np.array((word * reps)[: p + K - 1], dtype=np.int8)
    return bundle.evaluate(x, p) / p


def lphi_affine_dim(pot, samples: int = 64, seed: int = DEFAULT_SEED, cycle_len: int = 4,
                    rtol: float = 1e-8) -> int:
    """Numerical dimension of the affine hull of the averages ``Phi_*(mu)``."""
    bundle = as_bundle(pot)
    pts = sample_averages(bundle, samples, seed, cycle_len)
    X = pts - pts.mean(axis=0)
    s = np.linalg.svd(X, compute_uv=False)
    if s.size == 0 or s[0] <= 1e-14 * max(1.0, np.abs(pts).max()):
        return 0
    return int((s > rtol * s[0]).sum())


def sample_averages(bundle: PotentialBundle, samples: int, seed: int, cycle_len: int) -> np.ndarray:
    """Averages over short periodic orbits and random Markov measures."""
    sft = bundle.sft
    rng = np.random.default_rng(seed)
    pts = []
    for p in range(1, cycle_len + 1):
        for w in admissible_words(sft, p):
            if periodic_admissible(sft, w):
                pts.append(periodic_average(bundle, w))
    for _ in range(samples):
        mu = random_markov_measure(sft, 1, rng)
        pts.append(potential_average(mu, bundle))
    return np.array(pts)


def conditional_variational(alpha, metric, pot, **kw):
    """Witness for ``sup{h/(-Psi_*): Phi_*(mu) = alpha}`` at an attained minimizer.

    Returns ``(value, measure)``; the measure is the equilibrium state of
    ``<z*, Phi - alpha> + tau* Psi``.
    """
    from .spectrum import SpectrumSystem

    system = SpectrumSystem.of(metric, pot)
    point = system.legendre(alpha, **kw)
    if point.boundary:
        raise BoundaryAlpha(f"minimizer not attained at alpha={alpha}")
    combo = system.combined_potential(point.z_star, point.alpha, point.tau_star)
    mu = equilibrium_state(combo)
    h = entropy(mu)
    psi_avg = potential_average(mu, metric.psi)
    phi_avg = np.atleast_1d(potential_average(mu, as_bundle(pot).lifted()))
    if np.abs(phi_avg - point.alpha).max() > 1e-6:
        raise BoundaryAlpha(f"witness average {phi_avg} misses alpha={point.alpha}")
    return h / (-psi_avg), mu


@dataclass(frozen=True)
class MoranSample:
    """A prefix drawn from the concatenated block measure with its diagnostics."""

    word: np.ndarray
    targets: tuple
    block_averages: tuple
    running_averages: tuple
    log_mass: float
    log_diameter: float

    @property
    def ratio(self) -> float:
        """Empirical ``log mu([u]) / log Psi[u]``."""
        return self.log_mass / self.log_diameter


def _xi_at(xi: KStepPotential, prefix: np.ndarray) -> float:
    sft = xi.sft
    if prefix.size >= xi.k:
        return float(xi.table[encode(prefix[-xi.k:][None, :], sft.m)[0]])
    head = tuple(int(a) for a in prefix)
    word = next(admissible_words(sft, xi.k, head))
    return float(xi.table[encode(np.array([word]), sft.m)[0]])


def moran_sample(metric, pot, xi: KStepPotential, schedule=(256, 512, 1024), seed: int = DEFAULT_SEED,
                 depth: int | None = None, n0: int = 2) -> MoranSample:
    """Sample a prefix block by block from equilibrium states targeting ``xi``.

    Block ``j`` aims at the point of the grid of spacing ``2^{-j-n0}`` in
    ``L_Phi`` nearest to ``xi`` at the current prefix and draws ``schedule[j]``
    symbols from the Markov witness of that level, conditioned on the last
    symbols drawn so far.
    """
    from .spectrum import SpectrumSystem

    bundle = as_bundle(pot)
    if bundle.d != 1:
        raise ValueError("the block sampler needs a scalar potential")
    rng = np.random.default_rng(seed)
    system = SpectrumSystem.of(metric, bundle)
    lo, hi = system.lphi().interval
    blocks = list(schedule)[: depth if depth is not None else len(schedule)]
    word = np.zeros(0, dtype=np.int8)
    log_mass = 0.0
    targets, block_avg, running = [], [], []
    phi = bundle.components[0]
    witnesses: dict = {}
    for j, length in enumerate(blocks, start=1):
        step = 2.0 ** (-j - n0)
        target = _xi_at(xi, word)
        a = lo + step * round((target - lo) / step)
        # stay strictly inside so the witness measure exists
        margin = min(step, (hi - lo) / 4)
        a = float(np.clip(a, lo + margin, hi - margin))
        targets.append(a)
        if a not in witnesses:
            pt = system.legendre([a])
            combo = system.combined_potential(pt.z_star, pt.alpha, pt.tau_star)
            witnesses[a] = equilibrium_state(combo)
        mu = witnesses[a]
        block, lm = _draw(mu, word, int(length), rng)
        log_mass += lm
        start = word.size
        word = np.concatenate([word, block])
        seg = word[max(0, start - phi.k + 1):]
        block_avg.append(float(phi.window_sums(seg[None, :])[0]) / max(seg.size - phi.k + 1, 1))
        running.append(float(phi.window_sums(word[None, :])[0]) / max(word.size - phi.k + 1, 1))
    log_diam = metric.psi.cylinder_range(tuple(int(a) for a in word))[1]
    return MoranSample(word, tuple(targets), tuple(block_avg), tuple(running), log_mass, log_diam)


def _draw(mu: MarkovMeasure, prefix: np.ndarray, length: int, rng) -> tuple[np.ndarray, float]:
    """Draw ``length`` symbols from ``mu`` given ``prefix``; returns symbols and log-probability."""
    g = mu.graph
    m = mu.sft.m
    r = mu.r
    index = {int(c): i for i, c in enumerate(g.state_codes)}
    out_edges = [np.flatnonzero(g.src == s) for s in range(g.n_states)]
    seq = [int(a) for a in prefix]
    logp = 0.0
    if len(seq) < r:
        # complete the first state from the stationary law restricted to the prefix
        states = g.state_codes
        words = np.array([[(c // m ** (r - 1 - i)) % m for i in range(r)] for c in states])
        ok = np.all(words[:, : len(seq)] == np.array(seq, dtype=np.int64), axis=1) if seq else np.ones(len(states), bool)
        p = mu.stationary * ok
        total = p.sum()
        s = int(rng.choice(len(states), p=p / total))
        logp += math.log(p[s])
        new = [int(a) for a in words[s][len(seq):]]
        seq.extend(new)
    drawn_start = len(prefix)
    state = index[int(encode(np.array([seq[-r:]]), m)[0])]
    while len(seq) - drawn_start < length:
        edges = out_edges[state]
        p = mu.trans[edges]
        e = int(edges[rng.choice(edges.size, p=p / p.sum())])
        logp += math.log(mu.trans[e])
        seq.append(int(g.win[e] % m))
        state = int(g.dst[e])
    return np.array(seq[drawn_start: drawn_start + length], dtype=np.int8), logp
