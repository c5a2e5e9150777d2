import math

import numpy as np
import pytest

from toprank.core.bounds import BoundConstants
from toprank.core.errors import InvalidConfig, TooManyRetries
from toprank.core.graph import is_connected
from toprank.service.harness import (
    PRESETS,
    ExperimentConfig,
    Method,
    connected_er,
    run_sweep,
    run_trial,
    trial_seed,
)
from toprank.service.results import emit_csv

SMALL = ExperimentConfig(
    n=40,
    K=3,
    delta_K=0.2,
    p=0.3,
    L_values=(5, 20),
    trials=3,
    methods=(Method.RANK_CENTRALITY, Method.BORDA),
    mle_rounds=2,
)


def test_complete_graph_exact_observations():
    config = ExperimentConfig(n=30, K=3, delta_K=0.2, p=1.0, L_values=(1,), exact=True, tol=1e-12)
    record = run_trial(config, Method.RANK_CENTRALITY, 1, 0)
    assert record.success
    assert record.linf <= 1e-8
    assert record.connected_retry_count == 0
    assert record.converged


def test_run_trial_deterministic():
    a = run_trial(SMALL, Method.RANK_CENTRALITY, 5, 1)
    b = run_trial(SMALL, Method.RANK_CENTRALITY, 5, 1)
    assert a == b


def test_trial_seeds_are_isolated():
    base = trial_seed(0, Method.RANK_CENTRALITY, 10, 3)
    assert base == trial_seed(0, "rank-centrality", 10, 3)
    others = {
        trial_seed(0, Method.SPECTRAL_MLE, 10, 3),
        trial_seed(0, Method.RANK_CENTRALITY, 20, 3),
        trial_seed(0, Method.RANK_CENTRALITY, 10, 4),
        trial_seed(1, Method.RANK_CENTRALITY, 10, 3),
    }
    assert base not in others
    assert len(others) == 4


def test_single_trial_sweep():
    config = ExperimentConfig(
        n=30, K=2, delta_K=0.2, p=0.4, L_values=(10,), trials=1, methods=("rank-centrality",)
    )
    result = run_sweep(config)
    assert len(result.records) == 1
    assert len(result.aggregates) == 1
    assert result.aggregates[0].trials == 1
    assert result.failures == []


def test_aggregates_match_records():
    result = run_sweep(SMALL)
    assert len(result.records) == 2 * 2 * 3
    for a in result.aggregates:
        cell = [r for r in result.records if r.method == a.method and r.L == a.L]
        assert a.trials == len(cell) == 3
        assert a.mean_linf == pytest.approx(np.mean([r.linf for r in cell]))
        assert a.mean_l2 == pytest.approx(np.mean([r.l2 for r in cell]))
        assert a.success_rate == pytest.approx(np.mean([r.success for r in cell]))
    assert [(a.method, a.L) for a in result.aggregates] == sorted(
        (m, L) for m in ("borda", "rank-centrality") for L in (5, 20)
    )


def test_adding_a_method_keeps_other_records():
    alone = run_sweep(SMALL.with_values({"methods": "rank-centrality"}))
    both = run_sweep(SMALL)
    rc = [r for r in both.records if r.method == "rank-centrality"]
    assert alone.records == rc


def test_retain_records_off():
    result = run_sweep(SMALL.with_values({"retain_records": "false", "trials": "1"}))
    assert result.records == []
    assert sum(a.trials for a in result.aggregates) == 4


def test_progress_callback():
    seen = []
    run_sweep(SMALL.with_values({"trials": 2}), progress=lambda item: seen.append(item.description))
    assert len(seen) == 2 * 2 * 2
    assert "borda L=5 trial 0" in seen


def test_csv_is_bit_identical(tmp_path):
    emit_csv(run_sweep(SMALL), tmp_path / "a.csv")
    emit_csv(run_sweep(SMALL), tmp_path / "b.csv")
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()


def test_connected_er_retries():
    g, retries = connected_er(40, 0.3, 5, 10)
    assert is_connected(g)
    assert retries >= 0
    with pytest.raises(TooManyRetries):
        connected_er(50, 0.001, 1, 3)


def test_failed_trials_are_reported():
    config = ExperimentConfig(
        n=50, K=2, delta_K=0.2, p=0.001, L_values=(5,), trials=2,
        methods=("borda",), max_retries=2,
    )
    result = run_sweep(config)
    assert result.records == []
    assert len(result.failures) == 2
    assert result.failures[0].method == "borda"
    assert "resamples" in result.failures[0].error
    cell = result.aggregates[0]
    assert cell.failed == 2 and cell.trials == 0
    assert math.isnan(cell.mean_linf)


def test_with_values_from_file_keys():
    config = ExperimentConfig().with_values(
        {"N": "100", "k": "5", "delta_k": "0.2", "l_values": "10, 20", "methods": "borda", "c4": "2"}
    )
    assert config.n == 100
    assert config.K == 5
    assert config.delta_K == 0.2
    assert config.L_values == (10, 20)
    assert config.methods == (Method.BORDA,)
    assert config.constants == BoundConstants(c4=2.0)


def test_with_values_preset_is_overridden():
    config = ExperimentConfig().with_values({"p": "0.05", "preset": "sparse"})
    assert config.p == 0.05
    assert config.L_values == PRESETS["sparse"]["L_values"]


@pytest.mark.parametrize(
    "values",
    [
        {"colour": "red"},
        {"preset": "medium"},
        {"trials": "many"},
        {"L_values": "20, 10"},
        {"methods": "rank-centrality, rank-centrality"},
        {"methods": "pagerank"},
        {"K": "500"},
        {"epsilon": "0.7"},
        {"exact": "maybe"},
        {"mle_rounds": "0"},
    ],
)
def test_with_values_rejects(values):
    with pytest.raises(InvalidConfig):
        ExperimentConfig().with_values(values)


def test_echo_records_derived_parameters():
    echo = SMALL.echo()
    assert echo["mle_rounds"] == 2
    assert echo["mle_bracket"] == pytest.approx([0.8, 1.0])
    assert echo["methods"] == ["rank-centrality", "borda"]
    assert echo["error_gauge"] == "unit-sum"


@pytest.mark.slow
def test_linf_scales_like_inverse_sqrt_L():
    config = ExperimentConfig(
        n=300, K=10, delta_K=0.1, p=0.25, L_values=(10, 20, 40, 80, 160),
        trials=100, methods=("rank-centrality",),
    )
    result = run_sweep(config)
    L = np.log([a.L for a in result.aggregates])
    err = np.log([a.mean_linf for a in result.aggregates])
    slope = np.polyfit(L, err, 1)[0]
    assert -0.6 <= slope <= -0.4


@pytest.mark.slow
def test_dense_regime_methods_agree():
    result = run_sweep(ExperimentConfig().with_values({"preset": "dense", "workers": 4}))
    rc = {a.L: a.success_rate for a in result.aggregates if a.method == "rank-centrality"}
    mle = {a.L: a.success_rate for a in result.aggregates if a.method == "spectral-mle"}
    Ls = sorted(rc)
    assert any(
        rc[L] >= 0.95 and all(abs(rc[M] - mle[M]) <= 0.05 for M in Ls if M >= L) for L in Ls
    )


@pytest.mark.slow
def test_sparse_regime_mle_gap():
    result = run_sweep(ExperimentConfig().with_values({"preset": "sparse", "workers": 4}))
    largest = max(a.L for a in result.aggregates)
    rates = {a.method: a.success_rate for a in result.aggregates if a.L == largest}
    assert rates["spectral-mle"] - rates["rank-centrality"] >= 0.05


def test_process_pool_matches_single_worker(tmp_path):
    config = SMALL.with_values({"methods": "rank-centrality, spectral-mle, borda", "trials": 4})
    emit_csv(run_sweep(config), tmp_path / "one.csv")
    pooled = run_sweep(config.with_values({"workers": 2}))
    emit_csv(pooled, tmp_path / "two.csv")
    assert (tmp_path / "one.csv").read_bytes() == (tmp_path / "two.csv").read_bytes()
    assert pooled.records == run_sweep(config).records


def test_process_pool_reports_failures():
    config = ExperimentConfig(
        n=50, K=2, delta_K=0.2, p=0.001, L_values=(5,), trials=2,
        methods=("borda",), max_retries=2, workers=2,
    )
    result = run_sweep(config)
    assert [f.trial_index for f in result.failures] == [0, 1]
    assert all("resamples" in f.error for f in result.failures)
    assert result.aggregates[0].failed == 2
