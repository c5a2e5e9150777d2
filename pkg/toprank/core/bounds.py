from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, field
from functools import lru_cache
from typing import Any, Callable, Dict, Iterable, Tuple, Union

import numpy as np

from toprank.core.btl import PreferenceVector
from toprank.core.errors import (
    InvalidDelta,
    InvalidInput,
    InvalidProbability,
    LengthMismatch,
    SizeMismatch,
)
from toprank.core.graph import ComparisonGraph, GraphSpectra
from toprank.core.spectral import RankingResult

logger = logging.getLogger(__name__)

AT_LEAST = ">="
AT_MOST = "<="


@dataclass(frozen=True)
class BoundConstants:
    """Numerical constants of the sample-complexity theorems.

    The theorems leave c1..c6 unspecified; every one defaults to 1.
    """

    c1: float = 1.0
    c2: float = 1.0
    c3: float = 1.0
    c4: float = 1.0
    c5: float = 1.0
    c6: float = 1.0
    epsilon: float = 0.25

    def __post_init__(self):
        for name in ("c1", "c2", "c3", "c4", "c5", "c6"):
            if getattr(self, name) <= 0:
                raise InvalidInput(f"Constant {name} must be positive, got {getattr(self, name)}")
        if not (0 < self.epsilon < 0.5):
            raise InvalidInput(f"epsilon must lie in (0, 0.5), got {self.epsilon}")


@dataclass(frozen=True)
class Inequality:
    name: str
    lhs: float
    rhs: float
    direction: str

    @property
    def holds(self) -> bool:
        if self.direction == AT_LEAST:
            return self.lhs >= self.rhs
        return self.lhs <= self.rhs


@dataclass(frozen=True)
class ConditionReport:
    theorem: str
    satisfied: bool
    lhs: float
    rhs: float
    direction: str
    side_conditions: Tuple[Inequality, ...] = ()
    inputs_echo: Dict[str, Any] = field(default_factory=dict)

    def recheck(self) -> bool:
        """True if `satisfied` follows from the stored inequalities."""
        main = Inequality(self.theorem, self.lhs, self.rhs, self.direction).holds
        return self.satisfied == (main and all(s.holds for s in self.side_conditions))

    def reproduce(self) -> "ConditionReport":
        return _EVALUATORS[self.theorem](**self.inputs_echo)

    def as_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data["side_conditions"] = [
            dict(asdict(s), holds=s.holds) for s in self.side_conditions
        ]
        return data


@dataclass(frozen=True)
class SampleComplexity:
    sufficient: float
    necessary: float
    ratio: float
    balanced_gap: float


def _normalize(v, what: str) -> np.ndarray:
    if isinstance(v, PreferenceVector):
        v = v.scores
    v = np.asarray(v, dtype=np.float64)
    total = v.sum()
    if total <= 0:
        raise InvalidInput(f"{what} must have a positive sum")
    return v / total


def _pair(estimate, w) -> Tuple[np.ndarray, np.ndarray]:
    est = _normalize(estimate, "estimate")
    truth = _normalize(w, "truth")
    if est.shape != truth.shape:
        raise LengthMismatch(f"estimate has {est.size} entries, truth has {truth.size}")
    return est, truth


def linf_error(estimate, w: Union[PreferenceVector, Iterable[float]]) -> float:
    """max |w_hat - w_bar| / max w_bar on the unit-sum gauge."""
    est, truth = _pair(estimate, w)
    return float(np.abs(est - truth).max() / truth.max())


def l2_error(estimate, w: Union[PreferenceVector, Iterable[float]]) -> float:
    est, truth = _pair(estimate, w)
    return float(np.linalg.norm(est - truth) / np.linalg.norm(truth))


def success(result: Union[RankingResult, Iterable[int]], true_top: Iterable[int]) -> bool:
    chosen = result.top_k if isinstance(result, RankingResult) else tuple(result)
    truth = set(true_top)
    if len(truth) != len(chosen):
        raise SizeMismatch(f"Ranking returned {len(chosen)} items, truth has {len(truth)}")
    return set(chosen) == truth


def _check_delta(delta_K: float):
    if not delta_K > 0:
        raise InvalidDelta(f"delta_K must be positive, got {delta_K}")


def _divide(numerator: float, denominator: float) -> float:
    return numerator / denominator if denominator > 0 else math.inf


def _report(theorem, main: Inequality, sides, inputs) -> ConditionReport:
    sides = tuple(sides)
    return ConditionReport(
        theorem=theorem,
        satisfied=main.holds and all(s.holds for s in sides),
        lhs=main.lhs,
        rhs=main.rhs,
        direction=main.direction,
        side_conditions=sides,
        inputs_echo=inputs,
    )


def thm1_from_values(
    n, m, d_min, d_max, gamma, l2inf, L, delta_K, c1, c2, c3
) -> ConditionReport:
    _check_delta(delta_K)
    log_n = math.log(n)
    amplification = _divide(math.sqrt(n) * d_max, gamma * d_min) * l2inf
    rhs = (c2 + c3 * amplification) ** 2 * m * log_n / (d_max * delta_K**2)
    min_L = math.ceil(c1 * log_n / d_max * _divide(d_max, gamma * d_min) ** 2) if gamma > 0 else math.inf
    return _report(
        "thm1",
        Inequality("L|E| >= threshold", L * m, rhs, AT_LEAST),
        [Inequality("L >= minimum L", L, min_L, AT_LEAST)],
        dict(
            n=n, m=m, d_min=d_min, d_max=d_max, gamma=gamma, l2inf=l2inf,
            L=L, delta_K=delta_K, c1=c1, c2=c2, c3=c3,
        ),
    )


def thm1_sufficient(
    g: ComparisonGraph,
    spectra: GraphSpectra,
    L: int,
    delta_K: float,
    c: BoundConstants = BoundConstants(),
) -> ConditionReport:
    """Sufficient condition for Rank Centrality on a general graph."""
    return thm1_from_values(
        g.n, g.m, spectra.d_min, spectra.d_max, spectra.gamma, spectra.l2inf_of_L2,
        L, delta_K, c.c1, c.c2, c.c3,
    )


def thm2_from_values(n, m_edges, L, delta_K, c4, epsilon) -> ConditionReport:
    _check_delta(delta_K)
    rhs = c4 * (1 - epsilon) * n * math.log(n) / delta_K**2
    return _report(
        "thm2",
        Inequality("L|E| <= converse threshold", L * m_edges, rhs, AT_MOST),
        [],
        dict(n=n, m_edges=m_edges, L=L, delta_K=delta_K, c4=c4, epsilon=epsilon),
    )


def thm2_necessary(
    n: int,
    m_edges: int,
    delta_K: float,
    c: BoundConstants = BoundConstants(),
    L: int = 1,
) -> ConditionReport:
    """Converse: `satisfied` means the budget L|E| is too small for any scheme."""
    return thm2_from_values(n, m_edges, L, delta_K, c.c4, c.epsilon)


def thm2_explicit_threshold(
    n: int, delta_K: float, w_min: float, w_max: float, epsilon: float
) -> float:
    """Converse threshold with the constant worked out from the score range."""
    _check_delta(delta_K)
    constant = w_min**4 / (8 * w_max**4)
    return constant * n * ((1 - epsilon) * math.log(n) - math.log(2)) / delta_K**2


@lru_cache(maxsize=None)
def _note_density_constant(c4: float):
    logger.debug(f"Density constant c4={c4} is outside the stated range c4 > 1")


def thm3_from_values(n, p, L, delta_K, c4, c5, c6) -> ConditionReport:
    _check_delta(delta_K)
    if not (0 < p <= 1):
        raise InvalidProbability(f"Edge probability must lie in (0, 1], got {p}")
    if c4 <= 1:
        _note_density_constant(c4)
    log_n = math.log(n)
    return _report(
        "thm3",
        Inequality("n^2 p L / 2 >= threshold", n * n * p * L / 2, c6 * n * log_n / delta_K**2, AT_LEAST),
        [
            Inequality("p >= density threshold", p, c4 * math.sqrt(log_n / n), AT_LEAST),
            Inequality("L >= minimum L", L, math.ceil(c5 * log_n / (n * p)), AT_LEAST),
        ],
        dict(n=n, p=p, L=L, delta_K=delta_K, c4=c4, c5=c5, c6=c6),
    )


def thm3_er_sufficient(
    n: int, p: float, L: int, delta_K: float, c: BoundConstants = BoundConstants()
) -> ConditionReport:
    return thm3_from_values(n, p, L, delta_K, c.c4, c.c5, c.c6)


_EVALUATORS: Dict[str, Callable[..., ConditionReport]] = {
    "thm1": thm1_from_values,
    "thm2": thm2_from_values,
    "thm3": thm3_from_values,
}


def degree_concentration_check(g: ComparisonGraph, q: float) -> bool:
    """Every degree inside [n q / 2, 3 n q / 2]."""
    deg = g.degree_vector
    low, high = g.n * q / 2, 3 * g.n * q / 2
    return bool(((deg >= low) & (deg <= high)).all())


def sample_complexity(
    g: ComparisonGraph, spectra: GraphSpectra, delta_K: float
) -> SampleComplexity:
    _check_delta(delta_K)
    log_n = math.log(g.n)
    amplification = _divide(math.sqrt(g.n) * spectra.d_max, spectra.gamma * spectra.d_min)
    sufficient = (
        g.m / spectra.d_max * (1 + amplification * spectra.l2inf_of_L2) ** 2 * log_n / delta_K**2
    )
    necessary = g.n * log_n / delta_K**2
    return SampleComplexity(
        sufficient=sufficient,
        necessary=necessary,
        ratio=sufficient / necessary,
        balanced_gap=1 + g.n / spectra.d_min**2,
    )
