from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
import numpy.typing as npt
from scipy.optimize import minimize_scalar

from toprank.core.btl import ObservationSet
from toprank.core.errors import BracketInvalid, IndexOutOfRange, InvalidInput
from toprank.core.graph import ComparisonGraph, require_connected
from toprank.core.spectral import (
    RankCentralityParams,
    RankingResult,
    check_k,
    rank_centrality,
    top_k,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class MleParams:
    """Schedule of the coordinate-wise refinement stage of Spectral MLE."""

    rounds: int = 1
    bracket: Tuple[float, float] = (0.5, 1.0)
    inner_tol: float = 1e-8
    replace_threshold: float = 0.0
    check_monotone: bool = False

    def __post_init__(self):
        if self.rounds < 1:
            raise InvalidInput(f"MLE rounds must be >= 1, got {self.rounds}")
        lo, hi = self.bracket
        if not (0 < lo < hi):
            raise BracketInvalid(f"MLE bracket must satisfy 0 < lo < hi, got {self.bracket}")
        if self.inner_tol <= 0:
            raise InvalidInput(f"inner_tol must be positive, got {self.inner_tol}")
        if self.replace_threshold < 0:
            raise InvalidInput(
                f"replace_threshold must be non-negative, got {self.replace_threshold}"
            )

    @classmethod
    def default_for(
        cls, n: int, w_min: float, w_max: float, **overrides
    ) -> "MleParams":
        rounds = overrides.pop("rounds", None)
        if rounds is None:
            rounds = math.ceil(math.log2(n))
        return cls(rounds=rounds, bracket=(w_min, w_max), **overrides)


def _neighbourhood(obs: ObservationSet, i: int) -> Tuple[np.ndarray, np.ndarray]:
    Y = obs.win_matrix
    start, stop = Y.indptr[i], Y.indptr[i + 1]
    return Y.indices[start:stop], Y.data[start:stop]


def coordinate_log_likelihood(
    x: float, neighbours: np.ndarray, wins: np.ndarray, scores: np.ndarray
) -> float:
    wj = scores[neighbours]
    return float(
        np.sum(wins * np.log(x / (x + wj)) + (1.0 - wins) * np.log(wj / (x + wj)))
    )


def coordinate_mle_update(
    i: int,
    scores: npt.ArrayLike,
    g: ComparisonGraph,
    obs: ObservationSet,
    params: MleParams,
) -> float:
    """Maximise item i's likelihood over the bracket, others held fixed.

    The objective is concave in log x, so a bounded scalar search on the
    log scale finds the global maximum; the bracket ends are compared
    explicitly so monotone likelihoods land exactly on the boundary.
    """
    if not (0 <= i < g.n):
        raise IndexOutOfRange(f"Item {i} outside [0, {g.n})")
    scores = np.asarray(scores, dtype=np.float64)
    if (scores <= 0).any():
        raise InvalidInput("Scores must be positive for the MLE update")
    lo, hi = params.bracket
    if not (0 < lo < hi):
        raise BracketInvalid(f"MLE bracket must satisfy 0 < lo < hi, got {params.bracket}")

    neighbours, wins = _neighbourhood(obs, i)
    if neighbours.size == 0:
        return float(scores[i])

    def negative(t: float) -> float:
        return -coordinate_log_likelihood(math.exp(t), neighbours, wins, scores)

    found = minimize_scalar(
        negative,
        bounds=(math.log(lo), math.log(hi)),
        method="bounded",
        options={"xatol": params.inner_tol},
    )
    candidates = [(negative(math.log(lo)), lo), (negative(math.log(hi)), hi)]
    candidates.append((float(found.fun), math.exp(found.x)))
    return min(candidates, key=lambda c: c[0])[1]


def total_log_likelihood(scores: np.ndarray, obs: ObservationSet) -> float:
    wi = scores[obs.edges[:, 0]]
    wj = scores[obs.edges[:, 1]]
    y = obs.y
    return float(np.sum(y * np.log(wi / (wi + wj)) + (1.0 - y) * np.log(wj / (wi + wj))))


def spectral_mle(
    g: ComparisonGraph,
    obs: ObservationSet,
    K: int,
    params: MleParams,
    rc_params: Optional[RankCentralityParams] = None,
) -> RankingResult:
    spectral = rank_centrality(g, obs, K, rc_params)
    lo, hi = params.bracket
    # gauge: largest spectral score mapped onto the top of the bracket
    scores = np.clip(spectral.estimate * (hi / spectral.estimate.max()), lo, hi)

    accepted = 0
    likelihood = total_log_likelihood(scores, obs)
    for sweep in range(params.rounds):
        for i in range(g.n):
            new = coordinate_mle_update(i, scores, g, obs, params)
            if abs(new - scores[i]) > params.replace_threshold:
                scores[i] = new
                accepted += 1
        if params.check_monotone:
            updated = total_log_likelihood(scores, obs)
            assert updated >= likelihood - 1e-9 * max(1.0, abs(likelihood)), (
                f"likelihood fell from {likelihood} to {updated} in sweep {sweep}"
            )
            likelihood = updated
    logger.debug(f"Spectral MLE: {accepted} coordinate updates in {params.rounds} sweeps")

    estimate = scores / scores.sum()
    return RankingResult(
        method="spectral-mle",
        estimate=estimate,
        top_k=top_k(estimate, K),
        iterations=spectral.iterations,
        residual=spectral.residual,
        converged=spectral.converged,
        extra={"accepted_updates": accepted, "rounds": params.rounds},
    )


def borda_count(g: ComparisonGraph, obs: ObservationSet, K: int) -> RankingResult:
    """Degree-normalised win rate of every item."""
    require_connected(g)
    obs.check_matches(g)
    check_k(K, g.n)
    wins = np.asarray(obs.win_matrix.sum(axis=1)).ravel()
    rate = wins / g.degree_vector
    estimate = rate / rate.sum()
    return RankingResult(
        method="borda",
        estimate=estimate,
        top_k=top_k(estimate, K),
        extra={"win_rate": rate},
    )
