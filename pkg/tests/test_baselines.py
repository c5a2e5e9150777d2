import math

import numpy as np
import pytest

from toprank.core.baselines import (
    MleParams,
    borda_count,
    coordinate_log_likelihood,
    coordinate_mle_update,
    spectral_mle,
    total_log_likelihood,
    _neighbourhood,
)
from toprank.core.btl import (
    ObservationSet,
    PreferenceVector,
    exact_observations,
    make_planted_scores,
    sample_observations,
)
from toprank.core.errors import BracketInvalid, DisconnectedGraph, InvalidInput
from toprank.core.graph import from_edge_list, sample_er
from toprank.core.spectral import rank_centrality


def single_edge(y):
    g = from_edge_list(2, [(0, 1)])
    return g, ObservationSet(2, 4, g.edges.copy(), np.array([y]))


@pytest.mark.parametrize(
    "y, bracket, expected",
    [(0.5, (0.1, 10.0), 1.0), (0.75, (0.1, 10.0), 3.0), (1.0, (0.5, 2.0), 2.0)],
)
def test_single_edge_update(y, bracket, expected):
    g, obs = single_edge(y)
    params = MleParams(bracket=bracket, inner_tol=1e-10)
    x = coordinate_mle_update(0, np.array([1.0, 1.0]), g, obs, params)
    assert x == pytest.approx(expected, abs=1e-6)


def test_all_losses_pin_lower_edge():
    g, obs = single_edge(0.0)
    x = coordinate_mle_update(0, np.array([1.0, 1.0]), g, obs, MleParams(bracket=(0.5, 2.0)))
    assert x == 0.5


@pytest.mark.parametrize(
    "kwargs", [dict(bracket=(1.0, 1.0)), dict(bracket=(0.0, 1.0)), dict(bracket=(2.0, 1.0))]
)
def test_bracket_invalid(kwargs):
    with pytest.raises(BracketInvalid):
        MleParams(**kwargs)


@pytest.mark.parametrize(
    "kwargs", [dict(rounds=0), dict(inner_tol=0.0), dict(replace_threshold=-1.0)]
)
def test_params_invalid(kwargs):
    with pytest.raises(InvalidInput):
        MleParams(**kwargs)


def test_default_params():
    params = MleParams.default_for(500, 0.9, 1.0)
    assert params.rounds == math.ceil(math.log2(500))
    assert params.bracket == (0.9, 1.0)
    assert params.replace_threshold == 0.0
    assert MleParams.default_for(500, 0.9, 1.0, rounds=3).rounds == 3


def test_zero_rounds_is_not_the_default():
    with pytest.raises(InvalidInput):
        MleParams.default_for(500, 0.9, 1.0, rounds=0)
    assert MleParams.default_for(500, 0.9, 1.0, rounds=None).rounds == 9


def test_update_matches_grid_search():
    rng = np.random.default_rng(17)
    params = MleParams(bracket=(0.3, 3.0), inner_tol=1e-10)
    grid = np.geomspace(0.3, 3.0, 1000)
    for _ in range(10):
        g = sample_er(15, 0.5, int(rng.integers(10**6)))
        w = PreferenceVector(rng.uniform(0.5, 1.0, 15), 0.5, 1.0)
        obs = sample_observations(g, w, 8, int(rng.integers(10**6)))
        scores = rng.uniform(0.5, 1.0, 15)
        i = int(rng.integers(15))
        neighbours, wins = _neighbourhood(obs, i)
        if neighbours.size == 0:
            continue
        values = np.array([coordinate_log_likelihood(x, neighbours, wins, scores) for x in grid])
        best = int(values.argmax())
        # unimodal on the grid
        assert (np.diff(values[: best + 1]) >= -1e-12).all()
        assert (np.diff(values[best:]) <= 1e-12).all()
        x = coordinate_mle_update(i, scores, g, obs, params)
        lo, hi = grid[max(best - 1, 0)], grid[min(best + 1, grid.size - 1)]
        assert lo - 1e-8 <= x <= hi + 1e-8


def test_fixed_point_at_truth():
    g = sample_er(20, 0.5, 3)
    w = PreferenceVector(np.linspace(1.0, 0.5, 20), 0.5, 1.0)
    obs = exact_observations(g, w)
    params = MleParams(bracket=(0.25, 2.0), inner_tol=1e-10)
    for i in range(g.n):
        assert coordinate_mle_update(i, w.scores, g, obs, params) == pytest.approx(
            w.scores[i], abs=1e-6
        )


def test_spectral_mle_exact_matches_rank_centrality():
    g = sample_er(40, 0.4, 5)
    w = make_planted_scores(40, 4, 0.2)
    obs = exact_observations(g, w)
    refined = spectral_mle(g, obs, 4, MleParams.default_for(40, w.w_min, w.w_max))
    assert set(refined.top_k) == set(rank_centrality(g, obs, 4).top_k)
    assert set(refined.top_k) == set(range(4))
    assert refined.estimate.sum() == pytest.approx(1.0)


def test_spectral_mle_likelihood_monotone():
    g = sample_er(60, 0.2, 8)
    w = make_planted_scores(60, 5, 0.2)
    obs = sample_observations(g, w, 10, 9)
    params = MleParams(rounds=4, bracket=(w.w_min, w.w_max), check_monotone=True)
    result = spectral_mle(g, obs, 5, params)
    assert result.method == "spectral-mle"
    assert result.extra["rounds"] == 4
    assert result.extra["accepted_updates"] > 0


def test_replace_threshold_blocks_updates():
    g = sample_er(30, 0.3, 2)
    w = make_planted_scores(30, 3, 0.2)
    obs = sample_observations(g, w, 10, 3)
    result = spectral_mle(g, obs, 3, MleParams(bracket=(0.8, 1.0), replace_threshold=10.0))
    assert result.extra["accepted_updates"] == 0


def test_total_likelihood_peaks_at_truth():
    g = sample_er(20, 0.5, 4)
    w = make_planted_scores(20, 2, 0.3)
    obs = exact_observations(g, w)
    perturbed = w.scores * np.linspace(0.9, 1.1, 20)
    assert total_log_likelihood(w.scores, obs) > total_log_likelihood(perturbed, obs)


def test_borda_complete_graph():
    g = sample_er(3, 1.0, 0)
    w = PreferenceVector.from_scores([2.0, 1.0, 1.0])
    result = borda_count(g, exact_observations(g, w), 1)
    assert np.allclose(result.extra["win_rate"], [2 / 3, 5 / 12, 5 / 12])
    assert result.top_k == (0,)


def test_borda_orders_by_score():
    g = sample_er(12, 1.0, 0)
    w = PreferenceVector(np.linspace(0.5, 1.0, 12), 0.5, 1.0)
    result = borda_count(g, exact_observations(g, w), 11)
    assert np.all(np.diff(result.estimate) > 0)


def test_borda_ties_break_by_index():
    g = sample_er(5, 1.0, 0)
    obs = ObservationSet(5, 2, g.edges.copy(), np.full(g.m, 0.5))
    result = borda_count(g, obs, 3)
    assert np.allclose(result.estimate, 0.2)
    assert result.top_k == (0, 1, 2)


def test_borda_star_center_wins():
    g = from_edge_list(5, [(0, i) for i in range(1, 5)])
    obs = ObservationSet(5, 3, g.edges.copy(), np.ones(4))
    assert borda_count(g, obs, 1).top_k == (0,)


def test_borda_disconnected():
    g = from_edge_list(4, [(0, 1), (2, 3)])
    obs = ObservationSet(4, 1, g.edges.copy(), np.array([1.0, 0.0]))
    with pytest.raises(DisconnectedGraph):
        borda_count(g, obs, 1)
