
import pytest
from hypothesis import given, strategies as st

from sbrefactor.samples import fig3, fig5a
from sbrefactor.search import SearchConfig, search
from sbrefactor.stats import (
    COLUMNS,
    CsvWriter,
    EmptySample,
    aggregate,
    read_header,
    read_rows,
    record,
    sort_rows,
    vd_a12,
    write_rows,
)

from oracles import brute_a12

samples = st.lists(st.integers(0, 6), min_size=1, max_size=25)


def test_a12_examples():
    assert vd_a12([1, 2, 3], [1, 2, 3]) == 0.5
    assert vd_a12([4, 5], [1, 2]) == 1.0
    assert vd_a12([1, 2], [4, 5]) == 0.0
    assert vd_a12([2], [1, 2, 3]) == 0.5


@given(samples, samples)
def test_a12_matches_pairwise_count(a, b):
    assert vd_a12(a, b) == pytest.approx(brute_a12(a, b), abs=1e-12)
    assert vd_a12(a, b) + vd_a12(b, a) == pytest.approx(1.0)


def test_a12_rejects_empty_samples():
    with pytest.raises(EmptySample):
        vd_a12([], [1])
    with pytest.raises(EmptySample):
        vd_a12([1], [])


def _row(project, seed, mean, base=(10, 2.0, 3.0)):
    return {
        "project": project,
        "seed": str(seed),
        **{f"base_{k}": repr(float(v)) for k, v in zip(("blocks", "entropy", "difficulty"), base)},
        **{f"mean_{k}": repr(float(v)) for k, v in zip(("blocks", "entropy", "difficulty"), mean)},
    }


def test_aggregate_fills_effect_sizes():
    rows = [_row("b", 1, (8, 2.0, 4.0)), _row("a", 0, (12, 1.0, 3.0)), _row("b", 0, (8, 2.0, 2.0))]
    filled, summary = aggregate(rows)
    assert [(r["project"], r["seed"]) for r in filled] == [("a", "0"), ("b", "0"), ("b", "1")]
    b = filled[1]
    assert float(b["a12_blocks"]) == 0.0
    assert float(b["a12_entropy"]) == 0.5
    assert float(b["a12_difficulty"]) == 0.5
    assert float(b["a12_mean"]) == pytest.approx(1 / 3)
    assert summary["projects"] == 2
    assert summary["a12_blocks"] == pytest.approx(0.5)


def test_record_row_shape():
    r = search(fig3(), SearchConfig(population_size=8, max_generations=2))
    row = record("fig3", 0, r, reproducible=True)
    assert tuple(row) == COLUMNS
    assert row["wall_secs"] == "0.0"
    assert int(row["front_size"]) == len(r.front)
    assert float(row["base_blocks"]) == r.baseline.blocks
    assert row["a12_mean"] == ""
    empty = record("story", 0, search(fig5a()), reproducible=True)
    assert empty["front_size"] == "0" and empty["best_blocks"] == empty["base_blocks"]


def test_csv_writer_appends_and_checks_header(tmp_path):
    path = tmp_path / "stats.csv"
    w = CsvWriter(path)
    w.write(_row("x", 1, (1, 1, 1)))
    CsvWriter(path).write(_row("x", 0, (1, 1, 1)))
    assert tuple(read_header(path)) == COLUMNS
    rows = read_rows(path)
    assert [r["seed"] for r in rows] == ["1", "0"]
    write_rows(path, sort_rows(rows))
    assert [r["seed"] for r in read_rows(path)] == ["0", "1"]
    bad = tmp_path / "bad.csv"
    bad.write_text("a,b\n1,2\n")
    with pytest.raises(ValueError):
        CsvWriter(bad)


def test_seeds_sort_numerically():
    rows = [{"project": "p", "seed": s} for s in ("10", "9", "2")]
    assert [r["seed"] for r in sort_rows(rows)] == ["2", "9", "10"]
