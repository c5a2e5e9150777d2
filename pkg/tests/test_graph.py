import math

import numpy as np
import pytest

from toprank.core.bounds import degree_concentration_check
from toprank.core.errors import (
    DisconnectedGraph,
    IndexOutOfRange,
    InvalidInput,
    InvalidProbability,
    SelfLoop,
)
from toprank.core.graph import (
    Regime,
    classify_regime,
    degrees,
    from_edge_list,
    is_connected,
    l2inf_of_L_squared,
    laplacian,
    sample_er,
    spectra,
    spectral_gap,
)

TRIANGLE = [(0, 1), (1, 2), (2, 0)]


def random_connected(rng, n, p=0.5):
    while True:
        g = sample_er(n, p, int(rng.integers(2**32)))
        if is_connected(g):
            return g


def test_triangle():
    g = from_edge_list(3, TRIANGLE)
    assert g.m == 3
    assert g.edge_set() == {(0, 1), (0, 2), (1, 2)}
    deg, d_min, d_max = degrees(g)
    assert deg.tolist() == [2, 2, 2]
    assert d_min == d_max == 2


def test_reversed_pair_is_merged():
    g = from_edge_list(2, [(0, 1), (1, 0)])
    assert g.edges.tolist() == [[0, 1]]
    assert degrees(g)[0].tolist() == [1, 1]


def test_adjacency_agrees_with_edges():
    g = from_edge_list(5, [(3, 1), (0, 4), (1, 0), (4, 3), (1, 3)])
    for i, j in g.edges:
        assert g.has_edge(i, j) and g.has_edge(j, i)
    assert sum(a.size for a in g.adjacency) == 2 * g.m
    assert g.edges.tolist() == sorted(g.edges.tolist())


@pytest.mark.parametrize(
    "n, pairs, error",
    [
        (3, [(0, 0)], SelfLoop),
        (3, [(0, 3)], IndexOutOfRange),
        (3, [(-1, 2)], IndexOutOfRange),
        (1, [], InvalidInput),
    ],
)
def test_from_edge_list_rejects(n, pairs, error):
    with pytest.raises(error):
        from_edge_list(n, pairs)


def test_edges_are_read_only():
    g = from_edge_list(3, TRIANGLE)
    with pytest.raises(ValueError):
        g.edges[0, 0] = 2


def test_sample_er_complete():
    g = sample_er(4, 1.0, seed=123)
    assert g.m == 6


def test_sample_er_deterministic():
    a = sample_er(50, 0.2, seed=9)
    b = sample_er(50, 0.2, seed=9)
    assert np.array_equal(a.edges, b.edges)
    assert sample_er(2, 0.5, 3).edge_set() == sample_er(2, 0.5, 3).edge_set()


@pytest.mark.parametrize("p", [0.0, -0.1, 1.5])
def test_sample_er_bad_probability(p):
    with pytest.raises(InvalidProbability):
        sample_er(10, p, 0)


def test_sample_er_edge_count_band():
    counts = [sample_er(500, 0.25, seed).m for seed in range(20)]
    assert all(29000 <= c <= 33400 for c in counts)


def test_is_connected():
    assert is_connected(from_edge_list(3, TRIANGLE))
    assert not is_connected(from_edge_list(4, [(0, 1), (2, 3)]))
    assert is_connected(from_edge_list(4, [(0, 1), (1, 2), (2, 3)]))


def test_star_degrees():
    g = from_edge_list(5, [(0, i) for i in range(1, 5)])
    deg, d_min, d_max = degrees(g)
    assert deg.tolist() == [4, 1, 1, 1, 1]
    assert (d_min, d_max) == (1, 4)


def test_laplacian_triangle():
    lap = laplacian(from_edge_list(3, TRIANGLE)).toarray()
    assert np.allclose(lap, [[0, 0.5, 0.5], [0.5, 0, 0.5], [0.5, 0.5, 0]])


def test_laplacian_path():
    lap = laplacian(from_edge_list(3, [(0, 1), (1, 2)])).toarray()
    assert np.array_equal(lap, [[0, 1, 0], [0.5, 0, 0.5], [0, 1, 0]])


def test_laplacian_rows_sum_to_one():
    rng = np.random.default_rng(1)
    for _ in range(10):
        lap = laplacian(random_connected(rng, int(rng.integers(3, 30)))).toarray()
        assert np.allclose(lap.sum(axis=1), 1.0, atol=1e-12)
        assert (np.diag(lap) == 0).all()


def test_laplacian_isolated_vertex():
    with pytest.raises(DisconnectedGraph):
        laplacian(from_edge_list(3, [(0, 1)]))


def test_spectral_gap_triangle():
    assert spectral_gap(from_edge_list(3, TRIANGLE)) == pytest.approx(0.5, abs=1e-12)


@pytest.mark.parametrize("n", [4, 6, 10])
def test_spectral_gap_complete(n):
    g = sample_er(n, 1.0, 0)
    assert spectral_gap(g) == pytest.approx(1 - 1 / (n - 1), abs=1e-10)


def test_spectral_gap_disconnected():
    with pytest.raises(DisconnectedGraph):
        spectral_gap(from_edge_list(4, [(0, 1), (2, 3)]))


def test_l2inf_triangle():
    g = from_edge_list(3, TRIANGLE)
    assert l2inf_of_L_squared(g) == pytest.approx(math.sqrt(0.375), abs=1e-12)


def test_l2inf_single_edge():
    assert l2inf_of_L_squared(from_edge_list(2, [(0, 1)])) == pytest.approx(1.0)


def test_sparse_paths_match_brute_force():
    rng = np.random.default_rng(2024)
    for _ in range(100):
        n = int(rng.integers(4, 51))
        g = random_connected(rng, n, p=float(rng.uniform(0.2, 0.8)))
        lap = laplacian(g).toarray()
        squared = lap @ lap
        brute = float(np.sqrt((squared**2).sum(axis=0)).max())
        assert l2inf_of_L_squared(g) == pytest.approx(brute, abs=1e-10)
        dense = spectral_gap(g, method="dense")
        magnitudes = np.sort(np.abs(np.linalg.eigvals(lap)))[::-1]
        assert dense == pytest.approx(magnitudes[0] - magnitudes[1], abs=1e-9)
        if n > 10:
            assert spectral_gap(g, method="sparse") == pytest.approx(dense, abs=1e-10)


def test_gap_invariant_under_transpose():
    rng = np.random.default_rng(5)
    g = random_connected(rng, 20, 0.4)
    lap = laplacian(g).toarray()
    a = np.sort(np.abs(np.linalg.eigvals(lap)))[::-1]
    b = np.sort(np.abs(np.linalg.eigvals(lap.T)))[::-1]
    assert a[0] - a[1] == pytest.approx(b[0] - b[1], abs=1e-9)
    assert spectral_gap(g) == pytest.approx(a[0] - a[1], abs=1e-9)


def test_dense_er_spectra():
    for seed in range(20):
        g = sample_er(500, 0.25, seed)
        s = spectra(g)
        assert math.sqrt(g.n) * s.l2inf_of_L2 <= 12
        assert s.gamma >= 0.5
        assert 1 <= s.d_min <= s.d_max <= g.n - 1


def test_degree_concentration():
    passed = sum(degree_concentration_check(sample_er(1000, 0.1, seed), 0.1) for seed in range(100))
    assert passed >= 95


def test_degree_concentration_edge_cases():
    assert degree_concentration_check(sample_er(6, 1.0, 0), 1.0)
    assert not degree_concentration_check(from_edge_list(4, [(0, 1), (1, 2), (0, 2)]), 0.5)


@pytest.mark.parametrize(
    "p, regime",
    [(0.25, Regime.DENSE), (0.025, Regime.SPARSE), (0.01, Regime.BELOW_CONNECTIVITY)],
)
def test_classify_regime(p, regime):
    assert classify_regime(500, p) is regime
