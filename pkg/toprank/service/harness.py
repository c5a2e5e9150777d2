from __future__ import annotations

import asyncio
import math
import time
import zlib
from dataclasses import asdict, dataclass, field, fields, replace
from enum import Enum
from typing import Any, Callable, Dict, Mapping, Optional, Tuple

import humanize
import numpy as np

from toprank.core.baselines import MleParams, borda_count, spectral_mle
from toprank.core.bounds import BoundConstants, l2_error, linf_error, success
from toprank.core.btl import (
    ObservationSet,
    PreferenceVector,
    ScoreScheme,
    exact_observations,
    make_planted_scores,
    sample_observations,
)
from toprank.core.errors import InvalidConfig, TooManyRetries, TopRankError
from toprank.core.graph import ComparisonGraph, is_connected, sample_er
from toprank.core.spectral import (
    MAX_ITER_CAP,
    RankCentralityParams,
    RankingResult,
    rank_centrality,
)
from toprank.service.config import ConfigReader
from toprank.service.log import logger
from toprank.service.results import SweepResult, TrialFailure, TrialRecord, aggregate
from toprank.service.utils import split_list
from toprank.service.work_queue import WorkItem, WorkList


class Method(str, Enum):
    RANK_CENTRALITY = "rank-centrality"
    SPECTRAL_MLE = "spectral-mle"
    BORDA = "borda"


PRESETS: Dict[str, Dict[str, Any]] = {
    "dense": {"p": 0.25, "L_values": (5, 10, 20, 40, 80, 160)},
    "sparse": {"p": 0.025, "L_values": (20, 40, 80, 160, 320, 640)},
}


@dataclass(frozen=True)
class ExperimentConfig:
    n: int = 500
    K: int = 10
    delta_K: float = 0.1
    scheme: ScoreScheme = ScoreScheme.TWO_LEVEL
    w_max: float = 1.0
    p: float = 0.25
    L_values: Tuple[int, ...] = PRESETS["dense"]["L_values"]
    trials: int = 200
    methods: Tuple[Method, ...] = (Method.RANK_CENTRALITY, Method.SPECTRAL_MLE)
    master_seed: int = 0
    exact: bool = False
    tol: float = 1e-10
    max_iter: Optional[int] = None
    max_iter_cap: int = MAX_ITER_CAP
    mle_rounds: Optional[int] = None
    mle_inner_tol: float = 1e-8
    mle_threshold: float = 0.0
    constants: BoundConstants = field(default_factory=BoundConstants)
    workers: int = 1
    max_retries: int = 100
    retain_records: bool = True

    def __post_init__(self):
        object.__setattr__(self, "scheme", ScoreScheme(self.scheme))
        object.__setattr__(self, "methods", tuple(Method(m) for m in self.methods))
        object.__setattr__(self, "L_values", tuple(int(v) for v in self.L_values))
        if self.trials < 1:
            raise InvalidConfig(f"trials must be >= 1, got {self.trials}")
        if not self.L_values:
            raise InvalidConfig("L_values must not be empty")
        if any(b <= a for a, b in zip(self.L_values, self.L_values[1:])):
            raise InvalidConfig(f"L_values must be strictly increasing, got {self.L_values}")
        if self.L_values[0] < 1:
            raise InvalidConfig(f"L values must be positive, got {self.L_values}")
        if not (1 <= self.K < self.n):
            raise InvalidConfig(f"K must satisfy 1 <= K < n={self.n}, got {self.K}")
        if not (0 < self.p <= 1):
            raise InvalidConfig(f"p must lie in (0, 1], got {self.p}")
        if not self.methods:
            raise InvalidConfig("At least one method is required")
        if len(set(self.methods)) != len(self.methods):
            raise InvalidConfig(f"Duplicate methods in {self.methods}")
        if self.workers < 1:
            raise InvalidConfig(f"workers must be >= 1, got {self.workers}")
        if self.mle_rounds is not None and self.mle_rounds < 1:
            raise InvalidConfig(f"mle_rounds must be >= 1, got {self.mle_rounds}")

    @classmethod
    def defaults(cls) -> "ExperimentConfig":
        site = ConfigReader()
        return cls(
            trials=site.get_trials(),
            tol=site.get_solver_tol(),
            max_iter_cap=site.get_max_iter_cap(),
            mle_inner_tol=site.get_mle_inner_tol(),
            mle_threshold=site.get_mle_replace_threshold(),
            constants=site.get_constants(),
            workers=site.get_workers(),
            max_retries=site.get_max_retries(),
        )

    def with_values(self, values: Mapping[str, Any]) -> "ExperimentConfig":
        """Copy with string or typed overrides; constants go by name (c1, epsilon, ...)."""
        # configparser lowercases keys
        known = {f.name.lower(): f.name for f in fields(self) if f.name != "constants"}
        changes: Dict[str, Any] = {}
        constants: Dict[str, Any] = {}
        # a preset goes first so explicit keys override it
        items = sorted(values.items(), key=lambda kv: kv[0].strip() != "preset")
        for key, raw in items:
            key = key.strip()
            key = known.get(key.lower(), key)
            if key == "preset":
                if raw not in PRESETS:
                    raise InvalidConfig(f"Unknown preset {raw!r}, expected one of {sorted(PRESETS)}")
                changes.update(PRESETS[raw])
            elif key in ("c1", "c2", "c3", "c4", "c5", "c6", "epsilon"):
                constants[key] = _parse_float(key, raw)
            elif key in known.values():
                changes[key] = _parse(key, raw)
            else:
                raise InvalidConfig(f"Unknown experiment key {key!r}")
        if constants:
            try:
                changes["constants"] = replace(self.constants, **constants)
            except TopRankError as e:
                raise InvalidConfig(str(e))
        return replace(self, **changes)

    def mle_params(self, w: PreferenceVector) -> MleParams:
        return MleParams.default_for(
            self.n,
            w.w_min,
            w.w_max,
            rounds=self.mle_rounds,
            inner_tol=self.mle_inner_tol,
            replace_threshold=self.mle_threshold,
        )

    def rc_params(self) -> RankCentralityParams:
        return RankCentralityParams(
            tol=self.tol, max_iter=self.max_iter, max_iter_cap=self.max_iter_cap
        )

    def echo(self) -> Dict[str, Any]:
        data = asdict(self)
        data["scheme"] = self.scheme.value
        data["methods"] = [m.value for m in self.methods]
        data["L_values"] = list(self.L_values)
        w = make_planted_scores(self.n, self.K, self.delta_K, self.scheme, self.w_max)
        mle = self.mle_params(w)
        data["mle_rounds"] = mle.rounds
        data["mle_bracket"] = list(mle.bracket)
        data["error_gauge"] = "unit-sum"
        data["graph_resampling"] = "resample until connected"
        return data


def _parse_float(key: str, raw: Any) -> float:
    try:
        return float(raw)
    except (TypeError, ValueError):
        raise InvalidConfig(f"{key} must be a number, got {raw!r}")


def _parse_int(key: str, raw: Any) -> int:
    try:
        return int(raw)
    except (TypeError, ValueError):
        raise InvalidConfig(f"{key} must be an integer, got {raw!r}")


def _parse_bool(key: str, raw: Any) -> bool:
    if isinstance(raw, bool):
        return raw
    text = str(raw).strip().lower()
    if text in ("1", "true", "yes", "on"):
        return True
    if text in ("0", "false", "no", "off"):
        return False
    raise InvalidConfig(f"{key} must be a boolean, got {raw!r}")


def _parse(key: str, raw: Any) -> Any:
    if key in ("n", "K", "trials", "master_seed", "workers", "max_retries", "max_iter_cap"):
        return _parse_int(key, raw)
    if key in ("max_iter", "mle_rounds"):
        return None if raw in (None, "", "auto") else _parse_int(key, raw)
    if key in ("delta_K", "w_max", "p", "tol", "mle_inner_tol", "mle_threshold"):
        return _parse_float(key, raw)
    if key in ("exact", "retain_records"):
        return _parse_bool(key, raw)
    if key == "L_values":
        items = split_list(raw) if isinstance(raw, str) else list(raw)
        return tuple(_parse_int(key, v) for v in items)
    if key == "methods":
        items = split_list(raw) if isinstance(raw, str) else list(raw)
        try:
            return tuple(Method(str(getattr(m, "value", m)).strip()) for m in items)
        except ValueError as e:
            raise InvalidConfig(str(e))
    if key == "scheme":
        try:
            return ScoreScheme(getattr(raw, "value", raw))
        except ValueError as e:
            raise InvalidConfig(str(e))
    return raw


def _method_code(method: Method) -> int:
    # stable across runs and independent of the method's position in the config
    return zlib.crc32(method.value.encode())


def trial_seed(master_seed: int, method: Method, L: int, trial_index: int) -> int:
    seq = np.random.SeedSequence(
        entropy=master_seed, spawn_key=(_method_code(Method(method)), L, trial_index)
    )
    return int(seq.generate_state(1, np.uint64)[0])


def _sub_seed(seed: int, *key: int) -> int:
    return int(np.random.SeedSequence(entropy=seed, spawn_key=key).generate_state(1, np.uint64)[0])


def connected_er(n: int, p: float, seed: int, max_retries: int) -> Tuple[ComparisonGraph, int]:
    """Resample ER(n, p) with fresh sub-seeds until the graph is connected."""
    for retry in range(max_retries + 1):
        g = sample_er(n, p, _sub_seed(seed, 0, retry))
        if is_connected(g):
            if retry:
                logger.debug(f"Connected ER({n}, {p}) after {retry} resamples")
            return g, retry
    raise TooManyRetries(
        f"No connected ER({n}, {p}) graph in {max_retries} resamples; "
        f"p is far below log(n)/n = {math.log(n) / n:.4g}"
    )


def _run_method(
    method: Method,
    g: ComparisonGraph,
    obs: ObservationSet,
    w: PreferenceVector,
    config: ExperimentConfig,
) -> RankingResult:
    if method is Method.RANK_CENTRALITY:
        return rank_centrality(g, obs, config.K, config.rc_params())
    if method is Method.SPECTRAL_MLE:
        return spectral_mle(g, obs, config.K, config.mle_params(w), config.rc_params())
    return borda_count(g, obs, config.K)


def run_trial(
    config: ExperimentConfig, method: Method, L: int, trial_index: int
) -> TrialRecord:
    method = Method(method)
    seed = trial_seed(config.master_seed, method, L, trial_index)
    g, retries = connected_er(config.n, config.p, seed, config.max_retries)
    w = make_planted_scores(config.n, config.K, config.delta_K, config.scheme, config.w_max)
    if config.exact:
        obs = exact_observations(g, w)
    else:
        obs = sample_observations(g, w, L, _sub_seed(seed, 1))
    result = _run_method(method, g, obs, w, config)
    return TrialRecord(
        method=method.value,
        L=L,
        trial_index=trial_index,
        seed=seed,
        linf=linf_error(result.estimate, w),
        l2=l2_error(result.estimate, w),
        success=success(result, range(config.K)),
        iterations=result.iterations,
        connected_retry_count=retries,
        converged=result.converged,
    )


def run_sweep(
    config: ExperimentConfig, progress: Optional[Callable[[WorkItem], None]] = None
) -> SweepResult:
    queue = WorkList(callback=progress)
    for method in config.methods:
        for L in config.L_values:
            for trial_index in range(config.trials):
                queue.append(
                    WorkItem(
                        trial_index,
                        run_trial,
                        [config, method, L, trial_index],
                        f"{method.value} L={L} trial {trial_index}",
                    )
                )
    total = len(queue)
    logger.info(f"Sweep: {humanize.intcomma(total)} trials on {config.workers} worker(s)")
    started = time.monotonic()
    asyncio.run(queue.run(config.workers))
    elapsed = time.monotonic() - started

    records = [item.result for item in queue.completed]
    failures = [
        TrialFailure(item.args[1].value, item.args[2], item.args[3], item.error_msg)
        for item in queue
        if item.is_error()
    ]
    logger.info(
        f"Sweep finished in {humanize.naturaldelta(elapsed)}: "
        f"{len(records)} completed, {len(failures)} failed"
    )
    return SweepResult(
        config=config.echo(),
        aggregates=aggregate(records, failures),
        records=sorted(records, key=TrialRecord.sort_key) if config.retain_records else [],
        failures=sorted(failures, key=TrialFailure.sort_key),
        elapsed=elapsed,
    )
