import csv
import json
import shutil
import subprocess
import sys

import pytest

from sbrefactor.cli import main
from sbrefactor.metrics import evaluate
from sbrefactor.samples import corpus_dir
from sbrefactor.sb3 import load
from sbrefactor.stats import COLUMNS, read_rows

FAST = ["--population", "8", "--generations", "3", "--reproducible"]


@pytest.fixture
def corpus(tmp_path):
    d = tmp_path / "corpus"
    d.mkdir()
    for name in ("fig1a_loop_exit.sb3", "fig3_negated_ifs.json", "fig5a_timed_story.sb3"):
        shutil.copy(corpus_dir() / name, d / name)
    return d


def front_rows(directory):
    with (directory / "front.csv").open() as fh:
        return list(csv.DictReader(fh))


def test_refactor_writes_front(tmp_path):
    out = tmp_path / "out"
    code = main(["refactor", "--input", str(corpus_dir() / "fig1a_loop_exit.sb3"), "--out-dir", str(out), *FAST, "--emit", "json"])
    assert code == 0
    d = out / "fig1a_loop_exit"
    rows = front_rows(d)
    assert rows and (d / "front.json").exists()
    for r in rows:
        program = load(d / f"{r['k']}.sb3")
        f = evaluate(program)
        assert f.blocks == int(r["blocks"])
        assert abs(f.entropy - float(r["entropy"])) <= 1e-9
        assert abs(f.difficulty - float(r["difficulty"])) <= 1e-9
        trace = (d / f"{r['k']}.trace.txt").read_text().splitlines()
        assert len(trace) == int(r["steps"])
        assert all(" @ " in line and " : " in line for line in trace)
    (stats,) = read_rows(d / "stats.csv")
    assert int(stats["front_size"]) == len(rows)


def test_refactor_repetitions_resume(tmp_path):
    out = tmp_path / "out"
    args = ["refactor", "--input", str(corpus_dir() / "fig3_negated_ifs.json"), "--out-dir", str(out), *FAST]
    assert main(args + ["--repetitions", "2"]) == 0
    first = (out / "fig3_negated_ifs" / "stats.csv").read_bytes()
    assert (out / "fig3_negated_ifs" / "seed-1" / "front.csv").exists()
    assert main(args + ["--repetitions", "3"]) == 0
    rows = read_rows(out / "fig3_negated_ifs" / "stats.csv")
    assert [r["seed"] for r in rows] == ["0", "1", "2"]
    assert (out / "fig3_negated_ifs" / "stats.csv").read_bytes().startswith(first)


def test_nothing_applicable_exit_code(tmp_path):
    code = main(["refactor", "--input", str(corpus_dir() / "fig5a_timed_story.sb3"), "--out-dir", str(tmp_path), *FAST])
    assert code == 2
    (row,) = read_rows(tmp_path / "fig5a_timed_story" / "stats.csv")
    assert row["front_size"] == "0"


def test_bad_inputs(tmp_path, capsys):
    assert main(["refactor", "--input", str(tmp_path / "missing.sb3"), "--out-dir", str(tmp_path)]) == 1
    broken = tmp_path / "broken.sb3"
    broken.write_bytes(b"not a zip")
    assert main(["refactor", "--input", str(broken), "--out-dir", str(tmp_path)]) == 1
    assert main(["refactor", "--input", str(broken), "--out-dir", str(tmp_path), "--population", "3"]) == 1
    assert main(["batch", "--input", str(tmp_path / "nowhere"), "--out-dir", str(tmp_path)]) == 1
    assert "broken.sb3" in capsys.readouterr().err


def test_batch_is_resumable_and_sorted(corpus, tmp_path):
    out = tmp_path / "out"
    args = ["batch", "--input", str(corpus), "--out-dir", str(out), *FAST, "--repetitions", "2"]
    assert main(args) == 0
    rows = read_rows(out / "stats.csv")
    assert [(r["project"], r["seed"]) for r in rows] == [
        (p, s) for p in ("fig1a_loop_exit", "fig3_negated_ifs", "fig5a_timed_story") for s in ("0", "1")
    ]
    before = (out / "stats.csv").read_bytes()
    assert main(args) == 0
    assert (out / "stats.csv").read_bytes() == before


def test_batch_skips_broken_projects(corpus, tmp_path):
    (corpus / "zz_broken.json").write_text("{")
    out = tmp_path / "out"
    assert main(["batch", "--input", str(corpus), "--out-dir", str(out), *FAST]) == 0
    assert len(read_rows(out / "stats.csv")) == 3


def test_batch_output_is_reproducible_across_job_counts(corpus, tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["batch", "--input", str(corpus), "--out-dir", str(a), *FAST, "--jobs", "1"]) == 0
    assert main(["batch", "--input", str(corpus), "--out-dir", str(b), *FAST, "--jobs", "2"]) == 0
    files = sorted(p.relative_to(a) for p in a.rglob("*") if p.is_file())
    assert files == sorted(p.relative_to(b) for p in b.rglob("*") if p.is_file())
    for rel in files:
        assert (a / rel).read_bytes() == (b / rel).read_bytes(), rel


def test_metrics_command(capsys):
    assert main(["metrics", str(corpus_dir() / "fig1a_loop_exit.sb3")]) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["fitness"]["blocks"] == 9
    assert report["fitness"]["difficulty"] == 3.5
    assert report["scripts"][0]["actor"] == "Sprite1"


def test_deps_command(capsys):
    assert main(["deps", str(corpus_dir() / "fig3_negated_ifs.json")]) == 0
    out = capsys.readouterr().out
    assert out.count("digraph") == 2


def test_aggregate_command(corpus, tmp_path, capsys):
    out = tmp_path / "out"
    main(["batch", "--input", str(corpus), "--out-dir", str(out), *FAST, "--repetitions", "2"])
    capsys.readouterr()
    assert main(["aggregate", str(out / "stats.csv")]) == 0
    summary = json.loads(capsys.readouterr().out)
    assert summary["projects"] == 3
    rows = read_rows(out / "stats.csv")
    assert all(r["a12_mean"] for r in rows)
    assert tuple(rows[0]) == COLUMNS


def test_module_entry_point():
    done = subprocess.run([sys.executable, "-m", "sbrefactor", "--version"], capture_output=True, text=True)
    assert done.returncode == 0 and done.stdout.startswith("sbrefactor ")
