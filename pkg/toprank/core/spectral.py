from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
import numpy.typing as npt
import scipy.sparse as sp

from toprank.core.btl import ObservationSet, PreferenceVector, win_probabilities
from toprank.core.errors import (
    InvalidInput,
    InvalidK,
    LengthMismatch,
    SingularSystem,
)
from toprank.core.graph import ComparisonGraph, require_connected, degrees

logger = logging.getLogger(__name__)

DEFAULT_TOL = 1e-10
MAX_ITER_CAP = 100_000
DIRECT_SOLVE_LIMIT = 2000
# residual samples used to estimate the contraction rate of the chain
_RATE_WINDOW = (10, 20)


@dataclass(frozen=True, eq=False)
class TransitionMatrix:
    """Column-stochastic Markov matrix, stored column-major.

    Off-diagonal entries sit on the edges of the source graph (both
    orientations); the diagonal completes every column to 1.
    """

    n: int
    d_max: int
    matrix: sp.csc_matrix

    @property
    def diagonal(self) -> npt.NDArray[np.float64]:
        return self.matrix.diagonal()

    def column_sums(self) -> npt.NDArray[np.float64]:
        return np.asarray(self.matrix.sum(axis=0)).ravel()

    def toarray(self) -> npt.NDArray[np.float64]:
        return self.matrix.toarray()

    @classmethod
    def from_dense(cls, dense, d_max: int = 1) -> "TransitionMatrix":
        dense = np.asarray(dense, dtype=np.float64)
        return cls(dense.shape[0], d_max, sp.csc_matrix(dense))


@dataclass(frozen=True)
class PowerIterationResult:
    distribution: npt.NDArray[np.float64]
    iterations: int
    residual: float
    converged: bool


@dataclass(frozen=True)
class RankCentralityParams:
    tol: float = DEFAULT_TOL
    max_iter: Optional[int] = None
    check_simplex: bool = False
    max_iter_cap: int = MAX_ITER_CAP


@dataclass(frozen=True, eq=False)
class RankingResult:
    method: str
    estimate: npt.NDArray[np.float64]
    top_k: Tuple[int, ...]
    iterations: int = 0
    residual: float = 0.0
    converged: bool = True
    extra: dict = field(default_factory=dict)


def _assemble(
    g: ComparisonGraph, forward: np.ndarray, backward: np.ndarray
) -> TransitionMatrix:
    require_connected(g)
    _, _, d_max = degrees(g)
    i, j = g.edges[:, 0], g.edges[:, 1]
    # P[i, j] carries i's share against j, P[j, i] carries j's share
    rows = np.concatenate([i, j])
    cols = np.concatenate([j, i])
    data = np.concatenate([forward, backward]) / d_max
    off = sp.csc_matrix((data, (rows, cols)), shape=(g.n, g.n))
    outflow = np.asarray(off.sum(axis=0)).ravel()
    diag = np.maximum(1.0 - outflow, 0.0)
    return TransitionMatrix(g.n, d_max, sp.csc_matrix(off + sp.diags(diag)))


def build_empirical_transition(
    g: ComparisonGraph, obs: ObservationSet
) -> TransitionMatrix:
    obs.check_matches(g)
    return _assemble(g, obs.y, 1.0 - obs.y)


def build_ideal_transition(g: ComparisonGraph, w: PreferenceVector) -> TransitionMatrix:
    forward = win_probabilities(g, w)
    wi = w.scores[g.edges[:, 0]]
    wj = w.scores[g.edges[:, 1]]
    return _assemble(g, forward, wj / (wi + wj))


def default_max_iter(n: int, gamma_est: float, cap: int = MAX_ITER_CAP) -> int:
    gamma_est = min(1.0, max(gamma_est, 1e-12))
    return int(min(cap, max(_RATE_WINDOW[1], 10 * math.ceil(math.log(max(n, 2)) / gamma_est))))


def _observed_rate(history: List[float]) -> float:
    """Per-step contraction of the residual over the last window."""
    span = _RATE_WINDOW[1] - _RATE_WINDOW[0]
    early, late = history[-1 - span], history[-1]
    return (late / early) ** (1.0 / span) if early > 0 else 0.0


def _projected_limit(history: List[float], t: int, tol: float, n: int, cap: int) -> int:
    """Step at which the residual should reach `tol`, with a factor 2 margin.

    Never below `default_max_iter` at the first checkpoint; later checkpoints
    only extend the run while the residual keeps shrinking.
    """
    rate = _observed_rate(history)
    if t == _RATE_WINDOW[1]:
        floor = default_max_iter(n, 1.0 - min(rate, 1.0), cap)
    else:
        floor = t
    if not 0 < rate < 1:
        return min(cap, floor)
    span = _RATE_WINDOW[1] - _RATE_WINDOW[0]
    remaining = math.ceil(2 * math.log(history[-1] / tol) / -math.log(rate)) + span
    return int(min(cap, max(floor, t + remaining)))


def _check_distribution(p: np.ndarray, n: int, what: str):
    if p.shape != (n,):
        raise LengthMismatch(f"{what} has shape {p.shape}, expected ({n},)")
    if (p < 0).any() or abs(p.sum() - 1.0) > 1e-10:
        raise InvalidInput(f"{what} is not a probability distribution (sum {p.sum()})")


def stationary_power(
    P: TransitionMatrix,
    tol: float = DEFAULT_TOL,
    max_iter: Optional[int] = None,
    init: Optional[Sequence[float]] = None,
    check_simplex: bool = False,
    max_iter_cap: int = MAX_ITER_CAP,
) -> PowerIterationResult:
    """Iterate p <- P p until the l1 change per step drops to `tol`.

    Without an explicit `max_iter` the limit is projected from the contraction
    rate and `tol`, re-checked whenever it is reached, and capped at
    `max_iter_cap`.
    Running out of iterations is reported through `converged`, not raised.
    """
    if tol <= 0:
        raise InvalidInput(f"tol must be positive, got {tol}")
    n = P.n
    p = np.full(n, 1.0 / n) if init is None else np.array(init, dtype=np.float64)
    _check_distribution(p, n, "init")

    limit = max_iter_cap if max_iter is None else int(max_iter)
    history: List[float] = []
    checkpoint = _RATE_WINDOW[1]
    residual = math.inf
    t = 0
    while t < limit:
        t += 1
        nxt = P.matrix @ p
        residual = float(np.abs(nxt - p).sum())
        p = nxt
        if check_simplex:
            assert (p >= 0).all(), f"negative mass after step {t}"
            assert abs(p.sum() - 1.0) <= 1e-10, f"mass {p.sum()} after step {t}"
        if residual <= tol:
            return PowerIterationResult(p, t, residual, True)
        history.append(residual)
        if max_iter is None and t == checkpoint:
            limit = checkpoint = _projected_limit(history, t, tol, n, max_iter_cap)
            logger.debug(
                f"Power method: contraction {_observed_rate(history):.6f} at step {t}, "
                f"limit {limit} steps"
            )

    logger.warning(
        f"Power method stopped after {t} steps with residual {residual:.3e} > {tol:.1e}"
    )
    return PowerIterationResult(p, t, residual, False)


def stationary_direct(P: TransitionMatrix) -> npt.NDArray[np.float64]:
    """Solve (P - I) pi = 0 with sum(pi) = 1 by dense least squares."""
    n = P.n
    if n > DIRECT_SOLVE_LIMIT:
        raise InvalidInput(
            f"Direct solve is limited to n <= {DIRECT_SOLVE_LIMIT}, got {n}"
        )
    system = np.vstack([P.toarray() - np.eye(n), np.ones((1, n))])
    rank = np.linalg.matrix_rank(system)
    if rank < n:
        raise SingularSystem(
            f"Stationary system has rank {rank} < {n}: the chain is reducible"
        )
    rhs = np.zeros(n + 1)
    rhs[-1] = 1.0
    pi, *_ = np.linalg.lstsq(system, rhs, rcond=None)
    return pi / pi.sum()


def top_k(scores: Sequence[float], K: int) -> Tuple[int, ...]:
    """Indices of the K largest scores; ties go to the smaller index."""
    scores = np.asarray(scores, dtype=np.float64)
    if not (1 <= K <= scores.size):
        raise InvalidK(f"K must satisfy 1 <= K <= {scores.size}, got {K}")
    order = np.lexsort((np.arange(scores.size), -scores))
    return tuple(int(i) for i in order[:K])


def check_k(K: int, n: int):
    if not (1 <= K < n):
        raise InvalidK(f"K must satisfy 1 <= K < n={n}, got {K}")


def rank_centrality(
    g: ComparisonGraph,
    obs: ObservationSet,
    K: int,
    params: Optional[RankCentralityParams] = None,
) -> RankingResult:
    params = params or RankCentralityParams()
    check_k(K, g.n)
    P = build_empirical_transition(g, obs)
    run = stationary_power(
        P,
        tol=params.tol,
        max_iter=params.max_iter,
        check_simplex=params.check_simplex,
        max_iter_cap=params.max_iter_cap,
    )
    if not run.converged:
        logger.warning(
            f"Rank Centrality on n={g.n}: top-{K} taken from an unconverged iterate"
        )
    return RankingResult(
        method="rank-centrality",
        estimate=run.distribution,
        top_k=top_k(run.distribution, K),
        iterations=run.iterations,
        residual=run.residual,
        converged=run.converged,
    )


def power_trajectory(
    P: TransitionMatrix,
    truth: PreferenceVector,
    tol: float = DEFAULT_TOL,
    max_iter: int = 1000,
) -> List[float]:
    """Relative l2 distance of every power iterate to the normalised truth."""
    if truth.n != P.n:
        raise LengthMismatch(f"{truth.n} scores for a chain on {P.n} states")
    target = truth.normalized()
    scale = np.linalg.norm(target)
    p = np.full(P.n, 1.0 / P.n)
    errors = [float(np.linalg.norm(p - target) / scale)]
    for _ in range(max_iter):
        nxt = P.matrix @ p
        step = float(np.abs(nxt - p).sum())
        p = nxt
        errors.append(float(np.linalg.norm(p - target) / scale))
        if step <= tol:
            break
    return errors
