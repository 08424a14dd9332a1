"""Topologically mixing subshifts of finite type.

Symbols are the integers ``0 .. m-1``; a word is a tuple of symbols.  Words are
admissible when every consecutive pair ``(a, b)`` has ``A[a, b] == 1``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator

import numpy as np

from .errors import DegenerateRow, NotPrimitive, ResolutionTooFine

Word = tuple

#: Above this many words, :func:`word_array` refuses to materialize.
DEFAULT_WORD_CAP = 20_000_000


@dataclass(frozen=True, eq=False)
class SFT:
    """A primitive 0/1 transition matrix with its primitivity exponent and bridges.

    ``bridges[(i, j)]`` is the lexicographically smallest word ``w`` of length
    ``p0`` such that ``i + w + j`` is admissible.
    """

    m: int
    A: np.ndarray
    p0: int
    bridges: dict = field(repr=False)

    def __post_init__(self):
        self.A.setflags(write=False)

    @property
    def is_full(self) -> bool:
        return bool(self.A.all())

    def successors(self, a: int) -> np.ndarray:
        return np.flatnonzero(self.A[a])

    def is_admissible(self, word) -> bool:
        w = np.asarray(word, dtype=np.int64)
        if w.size == 0:
            return True
        if w.min() < 0 or w.max() >= self.m:
            return False
        return bool(np.all(self.A[w[:-1], w[1:]]))

    def count(self, n: int) -> int:
        """Number of admissible words of length ``n`` (exact integer arithmetic)."""
        if n < 0:
            raise ValueError("n must be nonnegative")
        if n == 0:
            return 1
        v = [1] * self.m
        a = self.A.astype(object)
        for _ in range(n - 1):
            v = [sum(v[j] for j in range(self.m) if a[i, j]) for i in range(self.m)]
        return int(sum(v))

    def bridge(self, i: int, j: int) -> Word:
        return self.bridges[(i, j)]

    def __repr__(self):
        return f"SFT(m={self.m}, p0={self.p0}, A={self.A.tolist()})"


def _primitivity_exponent(A: np.ndarray, p_cap: int) -> int | None:
    B = (A > 0).astype(np.int64)
    P = B.copy()
    for p in range(1, p_cap + 1):
        if P.all():
            return p
        P = np.minimum(P @ B, 1)
    return None


def _smallest_bridge(A: np.ndarray, i: int, j: int, length: int) -> Word | None:
    m = A.shape[0]
    # reach[t][a]: from symbol a one can still finish at j using t more symbols
    reach = [np.zeros(m, dtype=bool) for _ in range(length + 1)]
    reach[0] = A[:, j].astype(bool)
    for t in range(1, length + 1):
        reach[t] = (A.astype(np.int64) @ reach[t - 1].astype(np.int64)) > 0
    word = []
    prev = i
    for t in range(length, 0, -1):
        for a in range(m):
            if A[prev, a] and reach[t - 1][a]:
                word.append(a)
                prev = a
                break
        else:
            return None
    return tuple(word)


def build_sft(m: int, A, p_cap: int | None = None) -> SFT:
    """Validate ``A`` and compute the primitivity exponent and bridge table.

    ``p_cap`` defaults to the Wielandt bound ``(m-1)**2 + 1``.
    """
    A = np.array(A, dtype=np.int8)
    if m < 2:
        raise ValueError("alphabet needs at least two symbols")
    if A.shape != (m, m):
        raise ValueError(f"A must be {m}x{m}, got shape {A.shape}")
    if not np.isin(A, (0, 1)).all():
        raise ValueError("A must have entries in {0, 1}")
    for a in range(m):
        if not A[a].any():
            raise DegenerateRow(f"row {a} of A is zero")
        if not A[:, a].any():
            raise DegenerateRow(f"column {a} of A is zero")
    if p_cap is None:
        p_cap = (m - 1) ** 2 + 1
    p0 = _primitivity_exponent(A, p_cap)
    if p0 is None:
        raise NotPrimitive(f"no power A^p with p <= {p_cap} is strictly positive")
    bridges = {}
    for i in range(m):
        for j in range(m):
            w = _smallest_bridge(A, i, j, p0)
            assert w is not None
            bridges[(i, j)] = w
    return SFT(m=m, A=A, p0=p0, bridges=bridges)


def full_shift(m: int) -> SFT:
    return build_sft(m, np.ones((m, m), dtype=np.int8))


def golden_mean() -> SFT:
    return build_sft(2, [[1, 1], [1, 0]])


def admissible_words(sft: SFT, n: int, prefix: Word = ()) -> Iterator[Word]:
    """Stream admissible words of length ``n`` in lexicographic order.

    With a nonempty ``prefix`` only its admissible extensions are produced.
    """
    if n < 0:
        raise ValueError("n must be nonnegative")
    if len(prefix) > n or not sft.is_admissible(prefix):
        return
    if len(prefix) == n:
        yield tuple(prefix)
        return
    succ = [tuple(sft.successors(a)) for a in range(sft.m)]

    def extend(word):
        if len(word) == n:
            yield tuple(word)
            return
        for a in (succ[word[-1]] if word else range(sft.m)):
            word.append(a)
            yield from extend(word)
            word.pop()

    yield from extend(list(prefix))


def word_array(sft: SFT, n: int, cap: int = DEFAULT_WORD_CAP) -> np.ndarray:
    """All admissible words of length ``n`` as a lexicographically sorted array."""
    total = sft.count(n)
    if total > cap:
        raise ResolutionTooFine(f"{total} words of length {n} exceed cap {cap}")
    if n == 0:
        return np.zeros((1, 0), dtype=np.int8)
    W = np.arange(sft.m, dtype=np.int8)[:, None]
    for _ in range(n - 1):
        last = W[:, -1]
        rows, syms = np.nonzero(sft.A[last])
        W = np.concatenate([W[rows], syms[:, None].astype(np.int8)], axis=1)
    return W


def encode(words: np.ndarray, m: int) -> np.ndarray:
    """Base-``m`` integer code of each row (most significant symbol first)."""
    words = np.asarray(words, dtype=np.int64)
    code = np.zeros(words.shape[0], dtype=np.int64)
    for col in range(words.shape[1]):
        code = code * m + words[:, col]
    return code


def decode(codes, m: int, length: int) -> np.ndarray:
    codes = np.asarray(codes, dtype=np.int64).copy()
    out = np.zeros((codes.size, length), dtype=np.int8)
    for col in range(length - 1, -1, -1):
        out[:, col] = codes % m
        codes //= m
    return out


def admissible_mask(sft: SFT, length: int) -> np.ndarray:
    """Boolean mask over all ``m**length`` codes marking admissible words."""
    m = sft.m
    if length <= 1:
        return np.ones(m ** length, dtype=bool)
    mask = np.ones(m, dtype=bool)
    A = sft.A.astype(bool)
    for _ in range(length - 1):
        # extend each code c by a symbol a: new code c*m + a
        last = np.arange(mask.size) % m
        mask = (mask[:, None] & A[last]).ravel()
    return mask


def periodic_admissible(sft: SFT, word) -> bool:
    """True when the infinite repetition of ``word`` is admissible."""
    w = tuple(word)
    if not w:
        return False
    return sft.is_admissible(w + (w[0],))
