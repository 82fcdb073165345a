"""Run records, the statistics CSV, and Vargha-Delaney effect sizes."""
from __future__ import annotations

import csv
import math
import os
import threading
from collections import defaultdict
from pathlib import Path
from typing import Iterable, Sequence

from .search import SearchResult

CSV_VERSION = 1

COLUMNS = (
    "project",
    "seed",
    "generations",
    "evaluations",
    "wall_secs",
    "base_blocks",
    "base_entropy",
    "base_difficulty",
    "best_blocks",
    "best_entropy",
    "best_difficulty",
    "front_size",
    "n_transformations",
    "top_kind",
    "mean_blocks",
    "mean_entropy",
    "mean_difficulty",
    "a12_blocks",
    "a12_entropy",
    "a12_difficulty",
    "a12_mean",
)

OBJECTIVES = ("blocks", "entropy", "difficulty")


class EmptySample(ValueError):
    """An effect size was requested for an empty sample."""


def vd_a12(a: Sequence[float], b: Sequence[float]) -> float:
    """Probability that a value drawn from ``a`` exceeds one from ``b``, ties counting half.

    Computed from the rank sum, so large samples stay cheap.
    """
    m, n = len(a), len(b)
    if m == 0 or n == 0:
        raise EmptySample("both samples must be non-empty")
    pooled = sorted([(x, 0) for x in a] + [(y, 1) for y in b])
    rank_sum = 0.0
    i = 0
    while i < len(pooled):
        j = i
        while j < len(pooled) and pooled[j][0] == pooled[i][0]:
            j += 1
        avg = (i + 1 + j) / 2
        rank_sum += avg * sum(1 for k in range(i, j) if pooled[k][1] == 0)
        i = j
    return (rank_sum - m * (m + 1) / 2) / (m * n)


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def record(project: str, seed: int, result: SearchResult, reproducible: bool = False) -> dict:
    """One CSV row for a finished run. Effect-size columns stay empty until aggregation."""
    st = result.stats
    base = result.baseline
    best = st.best if result.front else base
    mean = st.front_mean if result.front else tuple(base)
    row = {
        "project": project,
        "seed": seed,
        "generations": st.generations,
        "evaluations": st.evaluations,
        "wall_secs": 0.0 if reproducible else round(st.wall_secs, 3),
        "base_blocks": base.blocks,
        "base_entropy": base.entropy,
        "base_difficulty": base.difficulty,
        "best_blocks": best.blocks,
        "best_entropy": best.entropy,
        "best_difficulty": best.difficulty,
        "front_size": len(result.front),
        "n_transformations": st.n_transformations,
        "top_kind": st.top_kind,
        "mean_blocks": float(mean[0]),
        "mean_entropy": float(mean[1]),
        "mean_difficulty": float(mean[2]),
    }
    return {c: _fmt(row.get(c)) for c in COLUMNS}


class CsvWriter:
    """Append-only CSV sink; safe to share between threads."""

    def __init__(self, path: str | os.PathLike):
        self.path = Path(path)
        self._lock = threading.Lock()
        if not self.path.exists() or self.path.stat().st_size == 0:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            with self.path.open("w", newline="") as fh:
                csv.writer(fh, lineterminator="\n").writerow(COLUMNS)
        else:
            header = read_header(self.path)
            if tuple(header) != COLUMNS:
                raise ValueError(f"{self.path}: unexpected CSV header {header}")

    def write(self, row: dict) -> None:
        with self._lock, self.path.open("a", newline="") as fh:
            csv.writer(fh, lineterminator="\n").writerow([row.get(c, "") for c in COLUMNS])


def read_header(path) -> list[str]:
    with Path(path).open(newline="") as fh:
        return next(csv.reader(fh), [])


def read_rows(path: str | os.PathLike) -> list[dict]:
    with Path(path).open(newline="") as fh:
        return list(csv.DictReader(fh))


def write_rows(path: str | os.PathLike, rows: Iterable[dict]) -> None:
    tmp = Path(path).with_suffix(".tmp")
    with tmp.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(COLUMNS)
        for row in rows:
            w.writerow([row.get(c, "") for c in COLUMNS])
    os.replace(tmp, path)


def sort_rows(rows: Iterable[dict]) -> list[dict]:
    return sorted(rows, key=lambda r: (r["project"], int(r["seed"])))


def aggregate(rows: Sequence[dict]) -> tuple[list[dict], dict]:
    """Fill the effect-size columns.

    Per project, sample A holds the front-mean value of each repetition and
    sample B the baseline; values below 0.5 mean the refactored versions are
    smaller on that objective. ``a12_mean`` averages the three objectives.
    Returns the filled rows and a summary over all projects.
    """
    by_project: dict[str, list[dict]] = defaultdict(list)
    for r in rows:
        by_project[r["project"]].append(r)
    filled = []
    per_project = {}
    for project in sorted(by_project):
        group = by_project[project]
        a12 = {}
        for obj in OBJECTIVES:
            a = [float(r[f"mean_{obj}"]) for r in group]
            b = [float(r[f"base_{obj}"]) for r in group]
            a12[obj] = vd_a12(a, b)
        a12_mean = math.fsum(a12.values()) / len(OBJECTIVES)
        per_project[project] = {**a12, "mean": a12_mean}
        for r in group:
            out = dict(r)
            for obj in OBJECTIVES:
                out[f"a12_{obj}"] = _fmt(a12[obj])
            out["a12_mean"] = _fmt(a12_mean)
            filled.append(out)
    summary = {"projects": len(per_project)}
    if per_project:
        for key in (*OBJECTIVES, "mean"):
            summary[f"a12_{key}"] = math.fsum(p[key] for p in per_project.values()) / len(per_project)
    return sort_rows(filled), summary
