from __future__ import annotations

from pathlib import Path
from typing import List, Optional, Tuple

import numpy as np

from toprank.core.btl import ObservationSet, PreferenceVector
from toprank.core.errors import FileFormatError, IoFailure, TopRankError
from toprank.core.graph import ComparisonGraph, from_edge_list


def _read_lines(path) -> List[Tuple[int, List[str]]]:
    """Non-blank, non-comment lines as (line number, fields)."""
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise IoFailure(f"Cannot read {path}: {e}")
    lines = []
    for number, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if stripped and not stripped.startswith("#"):
            lines.append((number, stripped.split()))
    if not lines:
        raise FileFormatError(f"{path} is empty")
    return lines


def _write(path, lines: List[str]):
    try:
        Path(path).write_text("\n".join(lines) + "\n")
    except OSError as e:
        raise IoFailure(f"Cannot write {path}: {e}")


def _ints(path, number: int, fields: List[str], count: int) -> List[int]:
    if len(fields) != count:
        raise FileFormatError(f"{path}:{number}: expected {count} fields, got {len(fields)}")
    try:
        return [int(f) for f in fields]
    except ValueError:
        raise FileFormatError(f"{path}:{number}: expected integers, got {' '.join(fields)}")


def _header(path, lines) -> Tuple[int, int]:
    number, fields = lines[0]
    first, second = _ints(path, number, fields, 2)
    if first < 0 or second < 0:
        raise FileFormatError(f"{path}:{number}: negative value in header")
    return first, second


def _check_count(path, expected: int, got: int, what: str):
    if expected != got:
        raise FileFormatError(f"{path}: header announces {expected} {what}, found {got}")


def write_edge_list(g: ComparisonGraph, path):
    lines = [f"{g.n} {g.m}"]
    lines += [f"{i} {j}" for i, j in g.edges]
    _write(path, lines)


def read_edge_list(path) -> ComparisonGraph:
    lines = _read_lines(path)
    n, m = _header(path, lines)
    body = lines[1:]
    _check_count(path, m, len(body), "edges")
    pairs = [tuple(_ints(path, number, fields, 2)) for number, fields in body]
    try:
        return from_edge_list(n, pairs)
    except TopRankError as e:
        raise FileFormatError(f"{path}: {e}")


def write_observations(obs: ObservationSet, path):
    lines = [f"{obs.n} {0 if obs.L is None else obs.L}"]
    lines += [f"{i} {j} {y:.17g}" for (i, j), y in zip(obs.edges, obs.y)]
    _write(path, lines)


def read_observations(path) -> ObservationSet:
    lines = _read_lines(path)
    n, L = _header(path, lines)
    edges, ys = [], []
    for number, fields in lines[1:]:
        if len(fields) != 3:
            raise FileFormatError(f"{path}:{number}: expected 'i j y', got {' '.join(fields)}")
        i, j = _ints(path, number, fields[:2], 2)
        try:
            y = float(fields[2])
        except ValueError:
            raise FileFormatError(f"{path}:{number}: y is not a number: {fields[2]}")
        if not (0 <= i < j < n):
            raise FileFormatError(f"{path}:{number}: need 0 <= i < j < {n}, got {i} {j}")
        if not (0.0 <= y <= 1.0):
            raise FileFormatError(f"{path}:{number}: y must lie in [0, 1], got {y}")
        edges.append((i, j))
        ys.append(y)

    edge_array = np.array(edges, dtype=np.int64).reshape(-1, 2)
    y_array = np.array(ys, dtype=np.float64)
    order = np.lexsort((edge_array[:, 1], edge_array[:, 0]))
    edge_array, y_array = edge_array[order], y_array[order]
    if len(edge_array) > 1 and (np.diff(edge_array, axis=0) == 0).all(axis=1).any():
        raise FileFormatError(f"{path}: duplicate edge")
    try:
        return ObservationSet(n, L if L > 0 else None, edge_array, y_array)
    except TopRankError as e:
        raise FileFormatError(f"{path}: {e}")


def write_truth(w: PreferenceVector, K: int, path):
    lines = [f"{w.n} {K}"]
    lines += [f"{s:.17g}" for s in w.scores]
    _write(path, lines)


def read_truth(path) -> Tuple[PreferenceVector, int]:
    lines = _read_lines(path)
    n, K = _header(path, lines)
    body = lines[1:]
    _check_count(path, n, len(body), "scores")
    scores = []
    for number, fields in body:
        try:
            (value,) = fields
            scores.append(float(value))
        except ValueError:
            raise FileFormatError(f"{path}:{number}: expected one score, got {' '.join(fields)}")
    try:
        return PreferenceVector.from_scores(scores), K
    except TopRankError as e:
        raise FileFormatError(f"{path}: {e}")


def load_pair(
    graph_path, obs_path, truth_path: Optional[str] = None
) -> Tuple[ComparisonGraph, ObservationSet, Optional[Tuple[PreferenceVector, int]]]:
    g = read_edge_list(graph_path)
    obs = read_observations(obs_path)
    obs.check_matches(g)
    truth = read_truth(truth_path) if truth_path else None
    return g, obs, truth
