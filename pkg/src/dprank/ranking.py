"""Permutations, ranking histograms and positional aggregation rules.

Rankings of ``M`` candidates are indexed lexicographically (Lehmer code), so
``permutations(range(M))`` enumerates histogram coordinates in order.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    DegenerateInputError,
    DimensionError,
    InvalidPermutationError,
    UnsupportedError,
)

MIN_CANDIDATES = 3
MAX_CANDIDATES = 8

# abc, acb, cab, cba, bca, bac with a=0, b=1, c=2.
CYCLIC_ORDER_M3 = ((0, 1, 2), (0, 2, 1), (2, 0, 1), (2, 1, 0), (1, 2, 0), (1, 0, 2))


def _readonly(a) -> np.ndarray:
    a = np.array(a, dtype=np.float64)
    a.setflags(write=False)
    return a


def check_candidates(M: int) -> int:
    M = int(M)
    if not MIN_CANDIDATES <= M <= MAX_CANDIDATES:
        raise UnsupportedError(
            f"histograms support {MIN_CANDIDATES} <= M <= {MAX_CANDIDATES}, got M={M}")
    return M


def candidates_for_length(n: int) -> int:
    """Inverse of ``M -> M!`` over the supported range."""
    for M in range(MIN_CANDIDATES, MAX_CANDIDATES + 1):
        if math.factorial(M) == n:
            return M
    raise DimensionError(f"length {n} is not M! for any {MIN_CANDIDATES} <= M <= {MAX_CANDIDATES}")


@dataclass(frozen=True)
class Permutation:
    """A strict ranking, best candidate first."""

    order: tuple

    def __post_init__(self):
        order = tuple(int(c) for c in self.order)
        M = len(order)
        if M == 0 or sorted(order) != list(range(M)):
            raise InvalidPermutationError(f"not a permutation of 0..{M - 1}: {self.order!r}")
        object.__setattr__(self, "order", order)

    @property
    def M(self) -> int:
        return len(self.order)

    def index(self) -> int:
        return permutation_index(self)

    def reversed(self) -> "Permutation":
        return Permutation(self.order[::-1])

    def relabel(self, pi: Sequence[int]) -> "Permutation":
        """Rename candidate ``c`` to ``pi[c]``."""
        return Permutation(tuple(pi[c] for c in self.order))

    def __str__(self):
        return ">".join(str(c) for c in self.order)


def _as_order(p) -> tuple:
    return p.order if isinstance(p, Permutation) else Permutation(p).order


def permutation_index(p) -> int:
    """Lexicographic rank of ``p`` among all orderings of its candidates."""
    order = _as_order(p)
    M = len(order)
    remaining = list(range(M))
    k = 0
    for pos, c in enumerate(order):
        r = remaining.index(c)
        k += r * math.factorial(M - 1 - pos)
        remaining.pop(r)
    return k


def permutation_at(k: int, M: int) -> Permutation:
    if not 0 <= k < math.factorial(M):
        raise InvalidPermutationError(f"index {k} out of range for M={M}")
    remaining = list(range(M))
    order = []
    for pos in range(M):
        f = math.factorial(M - 1 - pos)
        r, k = divmod(k, f)
        order.append(remaining.pop(r))
    return Permutation(tuple(order))


def cyclic_order_index(p) -> int:
    """Position of a 3-candidate ranking in the order abc, acb, cab, cba, bca, bac."""
    order = _as_order(p)
    if len(order) != 3:
        raise UnsupportedError("the cyclic reference order is defined only for M=3")
    return CYCLIC_ORDER_M3.index(order)


def cyclic_to_lex(M: int = 3) -> np.ndarray:
    """``perm[j]`` is the lexicographic index of the j-th ranking in reference order."""
    if M != 3:
        raise UnsupportedError("the cyclic reference order is defined only for M=3")
    return np.array([permutation_index(o) for o in CYCLIC_ORDER_M3])


@lru_cache(maxsize=None)
def _tables(M: int):
    perms = np.array(list(itertools.permutations(range(M))), dtype=np.intp)
    # position[k, c]: rank position of candidate c in permutation k
    position = np.argsort(perms, axis=1)
    # by_position[c, p]: indices of permutations placing c at position p
    by_position = np.empty((M, M, math.factorial(M - 1)), dtype=np.intp)
    for c in range(M):
        for p in range(M):
            by_position[c, p] = np.flatnonzero(position[:, c] == p)
    for a in (perms, position, by_position):
        a.setflags(write=False)
    return perms, position, by_position


def all_permutations(M: int) -> np.ndarray:
    return _tables(M)[0]


@dataclass(frozen=True)
class PositionalRule:
    """Normalized positional scores ``1 = s_1 >= ... >= s_M = 0``."""

    scores: tuple
    name: str = "custom"

    def __post_init__(self):
        s = tuple(float(x) for x in self.scores)
        if len(s) < 2:
            raise ValueError("a positional rule needs at least two scores")
        if s[0] != 1.0 or s[-1] != 0.0:
            raise ValueError(f"scores must be normalized to s_1=1, s_M=0, got {s}")
        if any(a < b for a, b in zip(s, s[1:])):
            raise ValueError(f"scores must be non-increasing, got {s}")
        object.__setattr__(self, "scores", s)

    @property
    def M(self) -> int:
        return len(self.scores)

    @classmethod
    def borda(cls, M: int) -> "PositionalRule":
        return cls(tuple((M - i) / (M - 1) for i in range(1, M + 1)), "borda")

    @classmethod
    def plurality(cls, M: int) -> "PositionalRule":
        return cls((1.0,) + (0.0,) * (M - 1), "plurality")

    @classmethod
    def custom(cls, scores: Sequence[float], normalize: bool = True) -> "PositionalRule":
        s = np.asarray(scores, dtype=float)
        if normalize:
            if s[0] <= s[-1]:
                raise ValueError("custom scores need s_1 > s_M")
            s = (s - s[-1]) / (s[0] - s[-1])
            s[0], s[-1] = 1.0, 0.0
        return cls(tuple(s), "custom")

    @classmethod
    def parse(cls, text: str, M: int) -> "PositionalRule":
        """Build a rule from ``borda``, ``plurality`` or ``custom:s1,...,sM``."""
        text = text.strip()
        if text == "borda":
            return cls.borda(M)
        if text == "plurality":
            return cls.plurality(M)
        if text.startswith("custom:"):
            scores = [float(x) for x in text[len("custom:"):].split(",")]
            if len(scores) != M:
                raise DimensionError(f"custom rule has {len(scores)} scores, expected {M}")
            return cls.custom(scores)
        raise ValueError(f"unknown rule {text!r}")

    def spec(self) -> str:
        if self.name in ("borda", "plurality"):
            return self.name
        return "custom:" + ",".join(repr(s) for s in self.scores)


@dataclass(frozen=True)
class Histogram:
    """Counts of each ranking, indexed by :func:`permutation_index`.

    Noised histograms may hold negative or fractional entries.
    """

    counts: np.ndarray
    M: int = field(default=None)

    def __post_init__(self):
        counts = _readonly(self.counts)
        if counts.ndim != 1:
            raise DimensionError("histogram must be one-dimensional")
        M = candidates_for_length(counts.size) if self.M is None else check_candidates(self.M)
        if counts.size != math.factorial(M):
            raise DimensionError(f"histogram for M={M} needs {math.factorial(M)} entries, got {counts.size}")
        object.__setattr__(self, "counts", counts)
        object.__setattr__(self, "M", M)

    @classmethod
    def from_ballots(cls, ballots: Iterable, M: int | None = None) -> "Histogram":
        ballots = [_as_order(b) for b in ballots]
        if M is None:
            if not ballots:
                raise DegenerateInputError("cannot infer M from an empty ballot list")
            M = len(ballots[0])
        M = check_candidates(M)
        counts = np.zeros(math.factorial(M))
        for b in ballots:
            if len(b) != M:
                raise DimensionError(f"ballot {b} has {len(b)} candidates, expected {M}")
            counts[permutation_index(b)] += 1
        return cls(counts, M)

    @property
    def total(self) -> float:
        return float(self.counts.sum())

    def __len__(self):
        return self.counts.size


@dataclass(frozen=True)
class VoteDistribution:
    """A point ``q / N`` on (or, after noise, near) the rank simplex."""

    weights: np.ndarray
    M: int = field(default=None)

    def __post_init__(self):
        weights = _readonly(self.weights)
        if weights.ndim != 1:
            raise DimensionError("distribution must be one-dimensional")
        M = candidates_for_length(weights.size) if self.M is None else check_candidates(self.M)
        if weights.size != math.factorial(M):
            raise DimensionError(f"distribution for M={M} needs {math.factorial(M)} entries, got {weights.size}")
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "M", M)

    @classmethod
    def centroid(cls, M: int) -> "VoteDistribution":
        n = math.factorial(M)
        return cls(np.full(n, 1.0 / n), M)

    def on_simplex(self, atol: float = 1e-12) -> bool:
        w = self.weights
        return bool(np.all(w >= 0) and abs(w.sum() - 1.0) <= atol)

    def __len__(self):
        return self.weights.size


@dataclass(frozen=True)
class Ranking:
    order: Permutation
    scores: tuple
    tied: bool

    def __str__(self):
        return str(self.order)


def normalize(h: Histogram) -> VoteDistribution:
    total = h.total
    if total <= 0:
        raise DegenerateInputError("histogram has non-positive total")
    return VoteDistribution(h.counts / total, h.M)


def _values(h) -> tuple[np.ndarray, int]:
    if isinstance(h, Histogram):
        return h.counts, h.M
    if isinstance(h, VoteDistribution):
        return h.weights, h.M
    a = np.asarray(h, dtype=np.float64)
    return a, candidates_for_length(a.shape[-1])


def score_matrix(rule: PositionalRule, M: int | None = None) -> np.ndarray:
    """``S[c, k]`` is the score candidate ``c`` gets from ranking ``k``."""
    M = rule.M if M is None else M
    if rule.M != M:
        raise DimensionError(f"rule has {rule.M} scores, expected {M}")
    _, position, _ = _tables(M)
    return np.asarray(rule.scores)[position.T]


def position_totals(weights: np.ndarray, M: int) -> np.ndarray:
    """Total weight placing each candidate at each position, shape ``(..., M, M)``.

    Gathering per (candidate, position) keeps the summation order identical
    across candidates, so symmetric inputs give bitwise-equal totals.
    """
    _, _, by_position = _tables(M)
    return np.asarray(weights)[..., by_position].sum(axis=-1)


@lru_cache(maxsize=None)
def integer_form(scores: tuple, max_denominator: int = 720) -> tuple[np.ndarray, int]:
    """Write ``scores`` as ``k / d`` with integer ``k`` when some ``d <= max_denominator`` fits.

    Scoring with the numerators keeps equal totals bitwise equal for integer
    histograms (Borda thirds would otherwise round differently per candidate).
    Falls back to ``(scores, 1)``.
    """
    s = np.asarray(scores, dtype=np.float64)
    for d in range(1, max_denominator + 1):
        k = np.round(s * d)
        if np.array_equal(k / d, s):
            return k, d
    return s, 1


def candidate_scores(rule: PositionalRule, h) -> np.ndarray:
    w, M = _values(h)
    if rule.M != M:
        raise DimensionError(f"rule has {rule.M} scores but input is for M={M}")
    k, d = integer_form(rule.scores)
    totals = position_totals(w, M) @ k
    return totals / d if d != 1 else totals


def rank_scores(scores: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Sort candidates by non-increasing score, ties to the lower id.

    Works on a batch ``(..., M)``; returns ``(orders, tied)``.
    """
    scores = np.asarray(scores)
    orders = np.argsort(-scores, axis=-1, kind="stable")
    ranked = np.take_along_axis(scores, orders, axis=-1)
    tied = np.any(ranked[..., 1:] == ranked[..., :-1], axis=-1)
    return orders, tied


def aggregate(rule: PositionalRule, h) -> Ranking:
    """Apply ``rule`` to a histogram or vote distribution."""
    w, M = _values(h)
    if w.ndim != 1:
        raise DimensionError("aggregate takes a single histogram; use rank_scores for batches")
    scores = candidate_scores(rule, h)
    order, tied = rank_scores(scores)
    return Ranking(Permutation(tuple(order)), tuple(float(s) for s in scores), bool(tied))


def aggregate_ballots(rule: PositionalRule, ballots: Iterable) -> Ranking:
    """Score a raw ballot list directly, in O(MN + M log M)."""
    k, d = integer_form(rule.scores)
    s = k.tolist()
    totals = [0.0] * rule.M
    for b in ballots:
        for pos, c in enumerate(_as_order(b)):
            totals[c] += s[pos]
    scores = np.array(totals) / d
    order, tied = rank_scores(scores)
    return Ranking(Permutation(tuple(order)), tuple(float(x) for x in scores), bool(tied))


def relabel_histogram(h: Histogram, pi: Sequence[int]) -> Histogram:
    """Histogram obtained by renaming every candidate ``c`` to ``pi[c]``."""
    perms = all_permutations(h.M)
    pi = np.asarray(pi)
    counts = np.zeros_like(h.counts)
    for k, order in enumerate(perms):
        counts[permutation_index(tuple(pi[order]))] = h.counts[k]
    return Histogram(counts, h.M)
