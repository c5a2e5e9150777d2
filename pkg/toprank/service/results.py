from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Iterable, List, Tuple

import humanize

from toprank.core.errors import IoFailure

CSV_HEADER = "method,L,trials,mean_linf,mean_l2,success_rate"


@dataclass(frozen=True)
class TrialRecord:
    method: str
    L: int
    trial_index: int
    seed: int
    linf: float
    l2: float
    success: bool
    iterations: int
    connected_retry_count: int
    converged: bool = True

    def sort_key(self) -> Tuple[str, int, int]:
        return (self.method, self.L, self.trial_index)


@dataclass(frozen=True)
class TrialFailure:
    method: str
    L: int
    trial_index: int
    error: str

    def sort_key(self) -> Tuple[str, int, int]:
        return (self.method, self.L, self.trial_index)


@dataclass(frozen=True)
class Aggregate:
    method: str
    L: int
    trials: int
    mean_linf: float
    mean_l2: float
    success_rate: float
    failed: int = 0
    retries: int = 0
    non_converged: int = 0


def aggregate(
    records: Iterable[TrialRecord], failures: Iterable[TrialFailure] = ()
) -> List[Aggregate]:
    """Per-(method, L) means; independent of the order records arrive in."""
    ordered = sorted(records, key=TrialRecord.sort_key)
    failed: Dict[Tuple[str, int], int] = {}
    for f in failures:
        failed[(f.method, f.L)] = failed.get((f.method, f.L), 0) + 1

    result = []
    for (method, L), group in itertools.groupby(ordered, key=lambda r: (r.method, r.L)):
        group = list(group)
        count = len(group)
        result.append(
            Aggregate(
                method=method,
                L=L,
                trials=count,
                mean_linf=math.fsum(r.linf for r in group) / count,
                mean_l2=math.fsum(r.l2 for r in group) / count,
                success_rate=sum(r.success for r in group) / count,
                failed=failed.pop((method, L), 0),
                retries=sum(r.connected_retry_count for r in group),
                non_converged=sum(not r.converged for r in group),
            )
        )
    # cells where every trial failed
    for (method, L), count in failed.items():
        result.append(Aggregate(method, L, 0, math.nan, math.nan, math.nan, failed=count))
    return sorted(result, key=lambda a: (a.method, a.L))


@dataclass
class SweepResult:
    config: Dict[str, Any]
    aggregates: List[Aggregate]
    records: List[TrialRecord] = field(default_factory=list)
    failures: List[TrialFailure] = field(default_factory=list)
    elapsed: float = 0.0

    def methods(self) -> List[str]:
        return sorted({a.method for a in self.aggregates})

    def format(self) -> str:
        res = []
        for method, group in itertools.groupby(self.aggregates, key=lambda a: a.method):
            res.append(f"[{method}]")
            res.append(f"{'L':>8} {'trials':>7} {'mean linf':>12} {'mean l2':>12} {'success':>8}")
            for a in group:
                line = (
                    f"{a.L:>8} {a.trials:>7} {a.mean_linf:>12.4e} "
                    f"{a.mean_l2:>12.4e} {a.success_rate:>8.3f}"
                )
                if a.failed:
                    line += f"  ({a.failed} failed)"
                if a.non_converged:
                    line += f"  ({a.non_converged} not converged)"
                res.append(line)
            res.append("")
        completed = sum(a.trials for a in self.aggregates)
        res.append(
            f"{humanize.intcomma(completed)} trials completed, "
            f"{humanize.intcomma(len(self.failures))} failed, "
            f"in {humanize.naturaldelta(self.elapsed)}"
        )
        return "\n".join(res)


def _g(value: float) -> str:
    return f"{value:.10g}"


def _write(path, text: str):
    try:
        Path(path).write_text(text)
    except OSError as e:
        raise IoFailure(f"Cannot write {path}: {e}")


def emit_csv(result: SweepResult, path):
    lines = [CSV_HEADER]
    for a in result.aggregates:
        lines.append(
            f"{a.method},{a.L},{a.trials},{_g(a.mean_linf)},{_g(a.mean_l2)},{_g(a.success_rate)}"
        )
    _write(path, "\n".join(lines) + "\n")


def emit_plot_data(result: SweepResult, path):
    blocks = []
    for method, group in itertools.groupby(result.aggregates, key=lambda a: a.method):
        lines = [f"# {method}", "# L mean_linf success_rate"]
        lines += [f"{a.L} {_g(a.mean_linf)} {_g(a.success_rate)}" for a in group]
        blocks.append("\n".join(lines))
    _write(path, "\n\n".join(blocks) + "\n")


def emit_meta(result: SweepResult, path):
    lines = [f"{key} = {_format_value(value)}" for key, value in sorted(result.config.items())]
    lines.append(f"elapsed = {humanize.precisedelta(result.elapsed)}")
    lines.append(f"failed_trials = {len(result.failures)}")
    for a in result.aggregates:
        lines.append(f"connected_retries[{a.method}, L={a.L}] = {a.retries}")
    for f in result.failures:
        first = f.error.strip().splitlines()[0] if f.error.strip() else ""
        lines.append(f"failure[{f.method}, L={f.L}, trial={f.trial_index}] = {first}")
    _write(path, "\n".join(lines) + "\n")


def _format_value(value: Any) -> str:
    if isinstance(value, dict):
        return ", ".join(f"{k}={v}" for k, v in value.items())
    if isinstance(value, (list, tuple)):
        return ", ".join(str(v) for v in value)
    return str(value)


def read_csv(path) -> List[Dict[str, Any]]:
    """Rows of an emitted sweep CSV with numeric columns parsed."""
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise IoFailure(f"Cannot read {path}: {e}")
    lines = text.splitlines()
    keys = lines[0].split(",")
    rows = []
    for line in lines[1:]:
        row: Dict[str, Any] = dict(zip(keys, line.split(",")))
        row["L"] = int(row["L"])
        row["trials"] = int(row["trials"])
        for key in ("mean_linf", "mean_l2", "success_rate"):
            row[key] = float(row[key])
        rows.append(row)
    return rows
