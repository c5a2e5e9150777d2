from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from functools import cached_property
from typing import Dict, Optional, Tuple, Union

import numpy as np
import numpy.typing as npt
import scipy.sparse as sp
from scipy.stats import binom

from toprank.core.errors import (
    EdgeMismatch,
    InvalidDelta,
    InvalidInput,
    InvalidK,
    InvalidL,
    LengthMismatch,
)
from toprank.core.graph import ComparisonGraph, symmetric_csr

# Per-edge draws up to this L are explicit Bernoulli trials; above it one
# uniform per edge is pushed through the exact binomial quantile function.
BERNOULLI_LIMIT = 64

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_MASK64 = (1 << 64) - 1


class ScoreScheme(str, Enum):
    TWO_LEVEL = "two-level"
    LINEAR = "linear"


@dataclass(frozen=True, eq=False)
class PreferenceVector:
    scores: npt.NDArray[np.float64]
    w_min: float
    w_max: float

    def __post_init__(self):
        scores = np.array(self.scores, dtype=np.float64)
        if scores.ndim != 1 or scores.size == 0:
            raise InvalidInput("Scores must be a non-empty vector")
        if not (0 < self.w_min <= self.w_max):
            raise InvalidInput(
                f"Score bounds must satisfy 0 < w_min <= w_max, got [{self.w_min}, {self.w_max}]"
            )
        if scores.min() < self.w_min or scores.max() > self.w_max:
            raise InvalidInput(
                f"Scores leave the range [{self.w_min}, {self.w_max}]: "
                f"min {scores.min()}, max {scores.max()}"
            )
        scores.flags.writeable = False
        object.__setattr__(self, "scores", scores)

    @classmethod
    def from_scores(cls, scores) -> "PreferenceVector":
        arr = np.asarray(scores, dtype=np.float64)
        return cls(arr, float(arr.min()), float(arr.max()))

    @property
    def n(self) -> int:
        return int(self.scores.size)

    @property
    def condition_number(self) -> float:
        return self.w_max / self.w_min

    def normalized(self) -> npt.NDArray[np.float64]:
        return self.scores / self.scores.sum()

    def scaled(self, factor: float) -> "PreferenceVector":
        return PreferenceVector(
            self.scores * factor, self.w_min * factor, self.w_max * factor
        )


@dataclass(frozen=True, eq=False)
class ObservationSet:
    """Sufficient statistics y_ij, stored once per edge with i < j.

    `L` is None for the exact-statistics limit. y_ji is never stored; read
    it through `get(j, i)` or `win_matrix`. The arrays are copied on
    construction and stored read-only.
    """

    n: int
    L: Optional[int]
    edges: npt.NDArray[np.int64]
    y: npt.NDArray[np.float64]

    def __post_init__(self):
        edges = np.array(self.edges, dtype=np.int64)
        if edges.size == 0:
            edges = edges.reshape(0, 2)
        y = np.array(self.y, dtype=np.float64).reshape(-1)
        if edges.ndim != 2 or edges.shape[1] != 2:
            raise InvalidInput(f"edges must have shape (m, 2), got {edges.shape}")
        if edges.shape[0] != y.shape[0]:
            raise LengthMismatch(f"{edges.shape[0]} edges but {y.shape[0]} statistics")
        if edges.size:
            i, j = edges[:, 0], edges[:, 1]
            if (i < 0).any() or (i >= j).any() or (j >= self.n).any():
                raise InvalidInput(f"Every edge must satisfy 0 <= i < j < {self.n}")
            later = (i[1:] > i[:-1]) | ((i[1:] == i[:-1]) & (j[1:] > j[:-1]))
            if not later.all():
                raise InvalidInput("Edges must be sorted and distinct")
        if y.size and (y.min() < 0 or y.max() > 1):
            raise InvalidInput("Statistics y_ij must lie in [0, 1]")
        if self.L is not None:
            if self.L < 1:
                raise InvalidL(f"L must be >= 1, got {self.L}")
            counts = y * self.L
            if (np.abs(counts - np.rint(counts)) > 1e-9 * self.L).any():
                raise InvalidInput(f"Statistics y_ij must be multiples of 1/L = 1/{self.L}")
        for a in (edges, y):
            a.flags.writeable = False
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "y", y)

    @property
    def is_exact(self) -> bool:
        return self.L is None

    @cached_property
    def _index(self) -> Dict[Tuple[int, int], int]:
        return {(int(i), int(j)): k for k, (i, j) in enumerate(self.edges)}

    def get(self, i: int, j: int) -> float:
        if i < j:
            return float(self.y[self._index[(i, j)]])
        return 1.0 - float(self.y[self._index[(j, i)]])

    def as_dict(self) -> Dict[Tuple[int, int], float]:
        return {key: float(self.y[k]) for key, k in self._index.items()}

    @cached_property
    def win_matrix(self) -> sp.csr_matrix:
        """Y with Y[i, j] = y_ij for both orientations of every edge."""
        return symmetric_csr(self.n, self.edges, self.y, 1.0 - self.y)

    def check_matches(self, g: ComparisonGraph):
        if self.n != g.n or not np.array_equal(self.edges, g.edges):
            raise EdgeMismatch(
                f"Observations cover {self.edges.shape[0]} edges on {self.n} items, "
                f"graph has {g.m} edges on {g.n} items"
            )


def make_planted_scores(
    n: int,
    K: int,
    delta_K: float,
    scheme: Union[ScoreScheme, str] = ScoreScheme.TWO_LEVEL,
    w_max: float = 1.0,
) -> PreferenceVector:
    """Scores whose top-K items are 0..K-1 with separation exactly delta_K."""
    if not (1 <= K < n):
        raise InvalidK(f"K must satisfy 1 <= K < n={n}, got {K}")
    if not (0 < delta_K < 1):
        raise InvalidDelta(f"delta_K must lie in (0, 1), got {delta_K}")
    if w_max <= 0:
        raise InvalidInput(f"w_max must be positive, got {w_max}")

    scheme = ScoreScheme(scheme)
    if scheme is ScoreScheme.TWO_LEVEL:
        scores = np.full(n, w_max * (1 - delta_K))
        scores[:K] = w_max
        return PreferenceVector(scores, w_max * (1 - delta_K), w_max)

    if delta_K > 1 / 3:
        raise InvalidDelta(
            f"The linear scheme needs delta_K <= 1/3 to fit above w_max/2, got {delta_K}"
        )
    top_low = w_max * (1 - delta_K / 2)
    rest_high = w_max * (1 - 3 * delta_K / 2)
    top = np.linspace(w_max, top_low, K) if K > 1 else np.array([top_low])
    rest = np.linspace(rest_high, w_max / 2, n - K) if n - K > 1 else np.array([rest_high])
    scores = np.concatenate([top, rest])
    return PreferenceVector(scores, float(scores.min()), w_max)


def delta_k(w: PreferenceVector, K: int) -> float:
    if not isinstance(w, PreferenceVector):
        w = PreferenceVector.from_scores(w)
    if not (1 <= K < w.n):
        raise InvalidK(f"K must satisfy 1 <= K < n={w.n}, got {K}")
    ordered = np.sort(w.scores)[::-1]
    return float((ordered[K - 1] - ordered[K]) / w.w_max)


def _mix(z: np.ndarray) -> np.ndarray:
    # splitmix64 output function; uint64 arithmetic wraps
    z = (z ^ (z >> np.uint64(30))) * _MIX1
    z = (z ^ (z >> np.uint64(27))) * _MIX2
    return z ^ (z >> np.uint64(31))


def _edge_streams(seed: int, edges: np.ndarray) -> np.ndarray:
    """One 64-bit stream state per edge, keyed on the edge itself."""
    key = (edges[:, 0].astype(np.uint64) << np.uint64(32)) | edges[:, 1].astype(
        np.uint64
    )
    with np.errstate(over="ignore"):
        base = _mix(np.array([seed & _MASK64], dtype=np.uint64) + _GOLDEN)
        return _mix(key ^ base)


def _uniforms(states: np.ndarray, draws: int) -> np.ndarray:
    with np.errstate(over="ignore"):
        steps = (np.arange(1, draws + 1, dtype=np.uint64) * _GOLDEN)[None, :]
        z = _mix(states[:, None] + steps)
    # 53 high bits, centred so 0 and 1 are never produced
    return ((z >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0**-53


def win_probabilities(g: ComparisonGraph, w: PreferenceVector) -> np.ndarray:
    if w.n != g.n:
        raise LengthMismatch(f"{w.n} scores for a graph on {g.n} items")
    wi = w.scores[g.edges[:, 0]]
    wj = w.scores[g.edges[:, 1]]
    return wi / (wi + wj)


def sample_observations(
    g: ComparisonGraph, w: PreferenceVector, L: int, seed: Optional[int]
) -> ObservationSet:
    """y_ij = Binomial(L, w_i / (w_i + w_j)) / L on every edge.

    Each edge draws from its own stream derived from (seed, i, j), so the
    statistics of an edge do not depend on which other edges exist.
    """
    if isinstance(L, bool) or not isinstance(L, (int, np.integer)) or L < 1:
        raise InvalidL(f"L must be a positive integer, got {L!r}")
    L = int(L)
    probs = win_probabilities(g, w)
    if seed is None:
        seed = int(np.random.SeedSequence().generate_state(1, np.uint64)[0])
    states = _edge_streams(int(seed), g.edges)

    if L <= BERNOULLI_LIMIT:
        wins = (_uniforms(states, L) < probs[:, None]).sum(axis=1)
    else:
        u = _uniforms(states, 1)[:, 0]
        wins = binom.ppf(u, L, probs)
    y = np.asarray(wins, dtype=np.float64) / L
    return ObservationSet(g.n, L, g.edges, y)


def exact_observations(g: ComparisonGraph, w: PreferenceVector) -> ObservationSet:
    return ObservationSet(g.n, None, g.edges, win_probabilities(g, w))
