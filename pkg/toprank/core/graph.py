from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from typing import Iterable, Optional, Tuple

import numpy as np
import numpy.typing as npt
import scipy.linalg
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components
from scipy.sparse.linalg import ArpackNoConvergence, eigsh

from toprank.core.errors import (
    DisconnectedGraph,
    EigensolverNoConvergence,
    IndexOutOfRange,
    InvalidInput,
    InvalidProbability,
    SelfLoop,
)

DENSE_EIGEN_LIMIT = 2000
EIGEN_TOL = 1e-10
EIGEN_MAX_ITER = 10_000
# columns of L^2 formed per sparse product
L2INF_BLOCK = 256


@dataclass(frozen=True, eq=False)
class ComparisonGraph:
    """Undirected comparison graph on items 0..n-1.

    `edges` holds every edge once as a (min, max) row, sorted
    lexicographically. Instances are immutable; the arrays are read-only.
    """

    n: int
    edges: npt.NDArray[np.int64]
    adjacency: Tuple[npt.NDArray[np.int64], ...] = field(repr=False)

    @property
    def m(self) -> int:
        return int(self.edges.shape[0])

    @cached_property
    def adjacency_matrix(self) -> sp.csr_matrix:
        return symmetric_csr(self.n, self.edges, np.ones(self.m), np.ones(self.m))

    @cached_property
    def degree_vector(self) -> npt.NDArray[np.int64]:
        return np.array([a.size for a in self.adjacency], dtype=np.int64)

    def edge_set(self) -> set:
        return {(int(i), int(j)) for i, j in self.edges}

    def has_edge(self, i: int, j: int) -> bool:
        return bool(np.any(self.adjacency[i] == j))

    def __repr__(self) -> str:
        return f"ComparisonGraph(n={self.n}, m={self.m})"


@dataclass(frozen=True)
class GraphSpectra:
    d_min: int
    d_max: int
    gamma: float
    l2inf_of_L2: float


class Regime(str, Enum):
    BELOW_CONNECTIVITY = "below-connectivity"
    SPARSE = "sparse"
    DENSE = "dense"


def symmetric_csr(
    n: int, edges: np.ndarray, forward: np.ndarray, backward: np.ndarray
) -> sp.csr_matrix:
    """CSR matrix with M[i, j] = forward and M[j, i] = backward per edge.

    Built from explicit index arrays so stored zeros stay in the pattern.
    """
    rows = np.concatenate([edges[:, 0], edges[:, 1]])
    cols = np.concatenate([edges[:, 1], edges[:, 0]])
    data = np.concatenate([forward, backward]).astype(np.float64)
    order = np.lexsort((cols, rows))
    indptr = np.searchsorted(rows[order], np.arange(n + 1))
    return sp.csr_matrix((data[order], cols[order], indptr), shape=(n, n))


def _freeze(a: np.ndarray) -> np.ndarray:
    a.flags.writeable = False
    return a


def _build(n: int, edges: np.ndarray) -> ComparisonGraph:
    edges = np.ascontiguousarray(edges, dtype=np.int64).reshape(-1, 2)
    if edges.size:
        edges = np.unique(edges, axis=0)
    # both orientations, grouped by source vertex
    src = np.concatenate([edges[:, 0], edges[:, 1]])
    dst = np.concatenate([edges[:, 1], edges[:, 0]])
    order = np.lexsort((dst, src))
    src, dst = src[order], dst[order]
    bounds = np.searchsorted(src, np.arange(n + 1))
    adjacency = tuple(
        _freeze(dst[bounds[v] : bounds[v + 1]].copy()) for v in range(n)
    )
    return ComparisonGraph(n=n, edges=_freeze(edges), adjacency=adjacency)


def from_edge_list(n: int, pairs: Iterable[Tuple[int, int]]) -> ComparisonGraph:
    """Canonical graph from index pairs; duplicates and reversed pairs merge."""
    if n < 2:
        raise InvalidInput(f"A comparison graph needs at least 2 items, got n={n}")
    arr = np.array(list(pairs), dtype=np.int64).reshape(-1, 2)
    if arr.size:
        bad = (arr < 0) | (arr >= n)
        if bad.any():
            i, j = arr[bad.any(axis=1)][0]
            raise IndexOutOfRange(f"Edge ({i}, {j}) has an index outside [0, {n})")
        loops = arr[:, 0] == arr[:, 1]
        if loops.any():
            i = arr[loops][0, 0]
            raise SelfLoop(f"Edge ({i}, {i}) is a self-loop")
        arr = np.sort(arr, axis=1)
    return _build(n, arr)


def sample_er(n: int, p: float, seed: Optional[int]) -> ComparisonGraph:
    """Erdős–Rényi graph: every pair kept independently with probability p."""
    if not (0 < p <= 1):
        raise InvalidProbability(f"Edge probability must lie in (0, 1], got {p}")
    if n < 2:
        raise InvalidInput(f"A comparison graph needs at least 2 items, got n={n}")
    rng = np.random.default_rng(seed)
    rows, cols = np.triu_indices(n, k=1)
    keep = rng.random(rows.size) < p
    return _build(n, np.column_stack([rows[keep], cols[keep]]))


def is_connected(g: ComparisonGraph) -> bool:
    count, _ = connected_components(g.adjacency_matrix, directed=False)
    return count == 1


def degrees(g: ComparisonGraph) -> Tuple[npt.NDArray[np.int64], int, int]:
    deg = g.degree_vector
    return deg, int(deg.min()), int(deg.max())


def require_connected(g: ComparisonGraph):
    if not is_connected(g):
        raise DisconnectedGraph(
            f"Graph with n={g.n} and {g.m} edges is not connected"
        )


def laplacian(g: ComparisonGraph) -> sp.csr_matrix:
    """Row-normalised adjacency: L_ij = 1/d_i for every edge (i, j)."""
    deg = g.degree_vector
    if (deg == 0).any():
        v = int(np.flatnonzero(deg == 0)[0])
        raise DisconnectedGraph(f"Vertex {v} has no neighbours")
    return sp.csr_matrix(sp.diags(1.0 / deg) @ g.adjacency_matrix)


def _symmetric_laplacian(g: ComparisonGraph) -> sp.csr_matrix:
    # D^-1/2 A D^-1/2 is similar to D^-1 A, so it has the same spectrum
    scale = sp.diags(1.0 / np.sqrt(g.degree_vector))
    return sp.csr_matrix(scale @ g.adjacency_matrix @ scale)


def spectral_gap(g: ComparisonGraph, method: str = "auto") -> float:
    """Difference between the two largest eigenvalue magnitudes of L.

    `method` is "dense", "sparse" or "auto" (dense up to DENSE_EIGEN_LIMIT
    vertices). Graphs with n <= 3 always go through the dense solver.
    """
    require_connected(g)
    sym = _symmetric_laplacian(g)
    if method == "auto":
        method = "dense" if g.n <= DENSE_EIGEN_LIMIT else "sparse"
    if method == "dense" or g.n <= 3:
        magnitudes = np.abs(scipy.linalg.eigvalsh(sym.toarray()))
    elif method == "sparse":
        try:
            vals = eigsh(
                sym,
                k=2,
                which="LM",
                tol=EIGEN_TOL,
                maxiter=EIGEN_MAX_ITER,
                return_eigenvectors=False,
            )
        except ArpackNoConvergence as e:
            raise EigensolverNoConvergence(
                f"Eigensolver did not converge on n={g.n}: {e}"
            ) from e
        magnitudes = np.abs(vals)
    else:
        raise ValueError(f"Unknown eigensolver method {method!r}")
    magnitudes = np.sort(magnitudes)[::-1]
    return float(min(1.0, max(0.0, magnitudes[0] - magnitudes[1])))


def l2inf_of_L_squared(g: ComparisonGraph) -> float:
    """max_j ||column j of L^2||_2, one block of columns at a time."""
    require_connected(g)
    lap = laplacian(g)
    lap_csc = lap.tocsc()
    best = 0.0
    for start in range(0, g.n, L2INF_BLOCK):
        block = lap @ lap_csc[:, start : start + L2INF_BLOCK]
        sq = np.asarray(block.multiply(block).sum(axis=0)).ravel()
        best = max(best, float(np.sqrt(sq.max())))
    return best


def spectra(g: ComparisonGraph) -> GraphSpectra:
    _, d_min, d_max = degrees(g)
    return GraphSpectra(
        d_min=d_min,
        d_max=d_max,
        gamma=spectral_gap(g),
        l2inf_of_L2=l2inf_of_L_squared(g),
    )


def classify_regime(n: int, p: float) -> Regime:
    if not (0 < p <= 1):
        raise InvalidProbability(f"Edge probability must lie in (0, 1], got {p}")
    log_n = math.log(n)
    if p <= log_n / n:
        return Regime.BELOW_CONNECTIVITY
    if p >= math.sqrt(log_n / n):
        return Regime.DENSE
    return Regime.SPARSE
