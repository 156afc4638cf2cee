"""Benchmark accuracy tables, rank correlation and selection reports."""

from __future__ import annotations

import csv
import json
import math
import os
from dataclasses import asdict, dataclass, fields
from typing import Mapping, Optional, Sequence

import numpy as np
from scipy import stats

__all__ = [
    "BenchmarkError",
    "BenchmarkRecord",
    "RankingReport",
    "load_records",
    "average_ranks",
    "spearman",
    "kendall",
    "rank_report",
    "emit_report",
    "load_report",
]

RECORDS_SCHEMA = 1


class BenchmarkError(ValueError):
    """Bad benchmark table; the message names rows and columns."""


@dataclass(frozen=True)
class BenchmarkRecord:
    arch_id: str
    encoding: str
    metrics: Mapping[str, float]


def _accuracy(raw, where: str) -> float:
    try:
        value = float(raw)
    except (TypeError, ValueError):
        raise BenchmarkError(f"{where}: cannot parse accuracy {raw!r}") from None
    if isinstance(raw, bool) or not math.isfinite(value):
        raise BenchmarkError(f"{where}: accuracy must be a finite number, got {raw!r}")
    if not 0.0 <= value <= 100.0:
        raise BenchmarkError(f"{where}: accuracy {value} outside [0, 100]")
    return value


def _check_unique(records: list[BenchmarkRecord], rows: list[int]) -> None:
    seen: dict[str, list[int]] = {}
    for rec, row in zip(records, rows):
        seen.setdefault(rec.arch_id, []).append(row)
    dups = {k: v for k, v in seen.items() if len(v) > 1}
    if dups:
        parts = [f"{k!r} (rows {', '.join(map(str, v))})" for k, v in dups.items()]
        raise BenchmarkError("duplicate arch_id: " + "; ".join(parts))


def _read_csv(path) -> list[BenchmarkRecord]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise BenchmarkError(f"{path}: empty file") from None
        header = [h.strip() for h in header]
        if header[:2] != ["arch_id", "encoding"]:
            raise BenchmarkError(f"{path}: header must start with arch_id,encoding; got {','.join(header[:2])}")
        datasets = header[2:]
        if not datasets:
            raise BenchmarkError(f"{path}: no dataset columns after arch_id,encoding")
        if len(set(datasets)) != len(datasets):
            raise BenchmarkError(f"{path}: repeated dataset column")
        records, rows = [], []
        for row_no, row in enumerate(reader, start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) != len(header):
                raise BenchmarkError(f"{path}: row {row_no} has {len(row)} fields, expected {len(header)}")
            metrics = {d: _accuracy(row[i + 2].strip(), f"row {row_no}, column {d!r}") for i, d in enumerate(datasets)}
            records.append(BenchmarkRecord(row[0].strip(), row[1], metrics))
            rows.append(row_no)
    _check_unique(records, rows)
    return records


def _read_json(path) -> list[BenchmarkRecord]:
    with open(path, encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise BenchmarkError(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}") from None
    if isinstance(doc, Mapping):
        if doc.get("schema", RECORDS_SCHEMA) != RECORDS_SCHEMA:
            raise BenchmarkError(f"{path}: unsupported schema {doc.get('schema')!r}")
        doc = doc.get("records")
    if not isinstance(doc, list):
        raise BenchmarkError(f"{path}: expected an array of records")
    records, rows = [], []
    for i, item in enumerate(doc):
        where = f"record {i}"
        if not isinstance(item, Mapping):
            raise BenchmarkError(f"{where}: expected an object")
        for key in ("arch_id", "encoding", "metrics"):
            if key not in item:
                raise BenchmarkError(f"{where}: missing {key!r}")
        if not isinstance(item["metrics"], Mapping) or not item["metrics"]:
            raise BenchmarkError(f"{where}: metrics must be a non-empty object")
        metrics = {str(d): _accuracy(v, f"{where}, dataset {d!r}") for d, v in item["metrics"].items()}
        records.append(BenchmarkRecord(str(item["arch_id"]), str(item["encoding"]), metrics))
        rows.append(i)
    _check_unique(records, rows)
    return records


def load_records(path, format: Optional[str] = None) -> list[BenchmarkRecord]:
    """Read an accuracy table (``csv`` or ``json``; guessed from the suffix)."""
    if format is None:
        format = "json" if os.fspath(path).lower().endswith(".json") else "csv"
    if format == "csv":
        return _read_csv(path)
    if format == "json":
        return _read_json(path)
    raise ValueError(f"unknown format {format!r}")


# ---------------------------------------------------------------------------
# rank correlation


def average_ranks(xs: Sequence[float]) -> np.ndarray:
    """1-based ranks; tied values share the mean of the ranks they span."""
    x = np.asarray(xs, dtype=float)
    order = np.argsort(x, kind="mergesort")
    sorted_x = x[order]
    # boundaries of runs of equal values
    starts = np.flatnonzero(np.r_[True, sorted_x[1:] != sorted_x[:-1]])
    ends = np.r_[starts[1:], x.size]
    avg = (starts + ends + 1) / 2.0
    ranks = np.empty(x.size)
    ranks[order] = np.repeat(avg, ends - starts)
    return ranks


def _paired(xs, ys) -> tuple[np.ndarray, np.ndarray]:
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    if x.ndim != 1 or y.ndim != 1:
        raise ValueError("correlation inputs must be 1-D")
    if x.size != y.size:
        raise ValueError(f"length mismatch: {x.size} vs {y.size}")
    if x.size < 2:
        raise ValueError("need at least two observations")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise ValueError("correlation inputs must be finite")
    return x, y


def spearman(xs: Sequence[float], ys: Sequence[float]) -> float:
    """Spearman's rho with average ranks for ties; NaN if either side is constant."""
    x, y = _paired(xs, ys)
    rx = average_ranks(x) - (x.size + 1) / 2.0
    ry = average_ranks(y) - (y.size + 1) / 2.0
    sxx, syy = float(rx @ rx), float(ry @ ry)
    if sxx == 0.0 or syy == 0.0:
        return math.nan
    rho = float(rx @ ry) / math.sqrt(sxx * syy)
    return max(-1.0, min(1.0, rho))


def kendall(xs: Sequence[float], ys: Sequence[float]) -> float:
    """Kendall's tau-b; NaN if either side is constant."""
    x, y = _paired(xs, ys)
    if np.all(x == x[0]) or np.all(y == y[0]):
        return math.nan
    return float(stats.kendalltau(x, y, variant="b").statistic)


# ---------------------------------------------------------------------------
# reports


@dataclass(frozen=True)
class RankingReport:
    dataset: str
    n: int
    spearman: float
    kendall: float
    argmax_arch: str
    argmax_acc: float
    argmax_rank: int
    k: int
    topk_mean: float
    max_acc: float

    def to_dict(self) -> dict:
        return asdict(self)


def rank_report(
    records: Sequence[BenchmarkRecord],
    scores: Mapping[str, float],
    dataset: str,
    k: int = 10,
) -> RankingReport:
    """Correlation and selection statistics of ``scores`` on one dataset.

    The selected architecture is the highest score, ties going to the
    lexicographically smallest encoding (then arch_id). Its rank counts
    architectures with strictly higher accuracy, plus one.
    """
    if not records:
        raise BenchmarkError("no records")
    missing = [r.arch_id for r in records if r.arch_id not in scores]
    if missing:
        shown = ", ".join(missing[:10]) + (" ..." if len(missing) > 10 else "")
        raise BenchmarkError(f"{len(missing)} records have no score: {shown}")
    lacking = [r.arch_id for r in records if dataset not in r.metrics]
    if lacking:
        raise BenchmarkError(f"{len(lacking)} records lack dataset {dataset!r}: {', '.join(lacking[:10])}")
    n = len(records)
    if not 1 <= k <= n:
        raise ValueError(f"k must be in [1, {n}], got {k}")
    acc = np.array([r.metrics[dataset] for r in records])
    sc = np.array([float(scores[r.arch_id]) for r in records])
    if not np.all(np.isfinite(sc)):
        raise BenchmarkError("scores must be finite")
    order = sorted(range(n), key=lambda i: (-sc[i], records[i].encoding, records[i].arch_id))
    best = order[0]
    best_acc = float(acc[best])
    top = order[:k]
    return RankingReport(
        dataset=dataset,
        n=n,
        spearman=spearman(sc, acc) if n >= 2 else math.nan,
        kendall=kendall(sc, acc) if n >= 2 else math.nan,
        argmax_arch=records[best].arch_id,
        argmax_acc=best_acc,
        argmax_rank=int(np.sum(acc > best_acc)) + 1,
        k=k,
        topk_mean=float(np.mean(acc[top])),
        max_acc=float(acc.max()),
    )


_FIELD_TYPES = {f.name: f.type for f in fields(RankingReport)}


def emit_report(report: RankingReport, path, format: str = "json") -> None:
    """Write a report with a fixed field order; ``load_report`` reads it back."""
    data = report.to_dict()
    try:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            if format == "json":
                json.dump(data, fh, indent=2, allow_nan=True)
                fh.write("\n")
            elif format == "csv":
                writer = csv.writer(fh)
                writer.writerow(["metric", "value"])
                for key, value in data.items():
                    writer.writerow([key, repr(value) if isinstance(value, float) else value])
            else:
                raise ValueError(f"unknown format {format!r}")
    except OSError as exc:
        raise OSError(exc.errno, f"cannot write report: {exc.strerror}", os.fspath(path)) from None


def load_report(path, format: Optional[str] = None) -> RankingReport:
    if format is None:
        format = "csv" if os.fspath(path).lower().endswith(".csv") else "json"
    with open(path, newline="", encoding="utf-8") as fh:
        if format == "json":
            data = json.load(fh)
        else:
            rows = list(csv.reader(fh))[1:]
            data = {key: value for key, value in rows}
    out = {}
    for name, typ in _FIELD_TYPES.items():
        raw = data[name]
        if typ in ("int", int):
            out[name] = int(raw)
        elif typ in ("float", float):
            out[name] = float(raw)
        else:
            out[name] = str(raw)
    return RankingReport(**out)
