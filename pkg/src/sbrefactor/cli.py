"""Command-line driver.

Exit codes: 0 success, 1 input or parse error, 2 nothing applicable.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import __version__
from .dependence import analyze
from .metrics import AGGREGATIONS, evaluate, script_metrics
from .sb3 import Sb3Error, dump, load
from .scratch_ast import Program
from .search import SearchConfig, SearchResult, search
from .stats import CsvWriter, aggregate, read_rows, record, sort_rows, write_rows

log = logging.getLogger("sbrefactor")

EXIT_OK, EXIT_ERROR, EXIT_NOTHING = 0, 1, 2
PROJECT_SUFFIXES = (".sb3", ".json")


def project_name(path: Path) -> str:
    return path.name[: -len(path.suffix)] if path.suffix else path.name


def _search_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--out-dir", required=True, type=Path)
    p.add_argument("--population", type=int, default=30)
    p.add_argument("--generations", type=int, default=100)
    p.add_argument("--time-budget-secs", type=float, default=1800.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--repetitions", type=int, default=1)
    p.add_argument("--codon-upper-bound", type=int, default=1024)
    p.add_argument("--max-codons", type=int, default=40)
    p.add_argument("--aggregation", choices=AGGREGATIONS, default="mean")
    p.add_argument("--emit", choices=("dot", "json", "none"), default="none")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument(
        "--reproducible", action="store_true", help="write 0 for wall_secs so reruns are byte-identical"
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sbrefactor", description="Search-based refactoring of Scratch projects")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("refactor", help="refactor one project")
    p.add_argument("--input", required=True, type=Path)
    _search_flags(p)

    p = sub.add_parser("batch", help="refactor every project in a directory")
    p.add_argument("--input", required=True, type=Path)
    _search_flags(p)

    p = sub.add_parser("metrics", help="print the fitness of a project as JSON")
    p.add_argument("input", type=Path)
    p.add_argument("--aggregation", choices=AGGREGATIONS, default="mean")

    p = sub.add_parser("deps", help="print dependence graphs in DOT")
    p.add_argument("input", type=Path)

    p = sub.add_parser("aggregate", help="fill effect-size columns of a stats CSV")
    p.add_argument("csv", type=Path)
    p.add_argument("--output", type=Path)
    return parser


def config_from(args) -> SearchConfig:
    return SearchConfig(
        population_size=args.population,
        max_generations=args.generations,
        time_budget=args.time_budget_secs,
        seed=args.seed,
        codon_upper_bound=args.codon_upper_bound,
        max_length=args.max_codons,
        aggregation=args.aggregation,
    )


def write_front(result: SearchResult, out: Path, fmt: str, emit: str = "none") -> list[Path]:
    """Emit one program, trace and metric row per front member."""
    out.mkdir(parents=True, exist_ok=True)
    written = []
    with (out / "front.csv").open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["k", "blocks", "entropy", "difficulty", "steps"])
        for k, cand in enumerate(result.front):
            path = out / f"{k}.{fmt}"
            dump(cand.phenotype.program, path, fmt=fmt)
            lines = cand.phenotype.trace(result.original)
            (out / f"{k}.trace.txt").write_text("".join(line + "\n" for line in lines))
            f = cand.fitness
            w.writerow([k, f.blocks, repr(f.entropy), repr(f.difficulty), len(lines)])
            written.append(path)
    if emit == "json":
        front = [
            {
                "k": k,
                "genotype": list(c.genotype),
                "fitness": c.fitness.as_dict(),
                "trace": c.phenotype.trace(result.original),
            }
            for k, c in enumerate(result.front)
        ]
        (out / "front.json").write_text(json.dumps(front, indent=1) + "\n")
    elif emit == "dot":
        (out / "dependences.dot").write_text(dependence_dot(result.original))
    return written


def dependence_dot(program: Program) -> str:
    parts = []
    for ai, si, script in program.scripts():
        name = f"{program.actors[ai].name} script {si}"
        parts.append(analyze(script).to_dot(name))
    return "\n".join(parts)


def run_one(path: Path, seed: int, cfg: SearchConfig, out: Path, emit: str, reproducible: bool) -> dict:
    """Search one project with one seed; returns its CSV row. Raises on unreadable input."""
    program = load(path)
    cfg = SearchConfig(**{**cfg.__dict__, "seed": seed})
    result = search(program, cfg)
    fmt = "sb3" if path.suffix == ".sb3" else "json"
    write_front(result, out, fmt, emit)
    if result.no_transformations:
        log.info("%s: no transformations applicable", path)
    return record(project_name(path), seed, result, reproducible)


def _task(args):
    path, seed, cfg, out, emit, reproducible = args
    try:
        return path, seed, run_one(path, seed, cfg, out, emit, reproducible), None
    except (Sb3Error, OSError) as exc:
        return path, seed, None, f"{path}: {exc}"


def cmd_refactor(args) -> int:
    path = args.input
    if not path.is_file():
        print(f"{path}: no such file", file=sys.stderr)
        return EXIT_ERROR
    try:
        program = load(path)
    except (Sb3Error, OSError) as exc:
        print(f"{path}: {exc}", file=sys.stderr)
        return EXIT_ERROR
    cfg = SearchConfig(**{**config_from(args).__dict__, "n_jobs": max(1, args.jobs)})
    name = project_name(path)
    out = args.out_dir / name
    writer = CsvWriter(out / "stats.csv")
    done = {int(r["seed"]) for r in read_rows(writer.path)}
    nothing = False
    for rep in range(args.repetitions):
        seed = args.seed + rep
        if seed in done:
            continue
        result = search(program, SearchConfig(**{**cfg.__dict__, "seed": seed}))
        target = out if args.repetitions == 1 else out / f"seed-{seed}"
        write_front(result, target, "sb3" if path.suffix == ".sb3" else "json", args.emit)
        writer.write(record(name, seed, result, args.reproducible))
        nothing = nothing or result.no_transformations
    write_rows(writer.path, sort_rows(read_rows(writer.path)))
    return EXIT_NOTHING if nothing else EXIT_OK


def cmd_batch(args) -> int:
    corpus = args.input
    if not corpus.is_dir():
        print(f"{corpus}: not a directory", file=sys.stderr)
        return EXIT_ERROR
    projects = sorted(p for p in corpus.iterdir() if p.is_file() and p.suffix in PROJECT_SUFFIXES)
    if not projects:
        print(f"{corpus}: no projects", file=sys.stderr)
        return EXIT_ERROR
    cfg = config_from(args)
    writer = CsvWriter(args.out_dir / "stats.csv")
    done = {(r["project"], int(r["seed"])) for r in read_rows(writer.path)}
    tasks = []
    for path in projects:
        for rep in range(args.repetitions):
            seed = args.seed + rep
            if (project_name(path), seed) in done:
                continue
            out = args.out_dir / project_name(path) / f"seed-{seed}"
            tasks.append((path, seed, cfg, out, args.emit, args.reproducible))
    failures = 0

    def handle(item):
        nonlocal failures
        path, seed, row, error = item
        if error is not None:
            failures += 1
            log.error("%s", error)
            print(error, file=sys.stderr)
        else:
            writer.write(row)
            log.info("%s seed %d done", path.name, seed)

    if args.jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(args.jobs) as pool:
            for item in pool.map(_task, tasks):
                handle(item)
    else:
        for t in tasks:
            handle(_task(t))
    write_rows(writer.path, sort_rows(read_rows(writer.path)))
    return EXIT_ERROR if failures == len(tasks) and tasks else EXIT_OK


def cmd_metrics(args) -> int:
    try:
        program = load(args.input)
    except (Sb3Error, OSError) as exc:
        print(f"{args.input}: {exc}", file=sys.stderr)
        return EXIT_ERROR
    scripts = [
        {
            "actor": program.actors[ai].name,
            "script": si,
            **dict(zip(("blocks", "entropy", "difficulty"), script_metrics(s))),
        }
        for ai, si, s in program.scripts()
    ]
    report = {"fitness": evaluate(program, args.aggregation).as_dict(), "scripts": scripts}
    print(json.dumps(report, indent=1))
    return EXIT_OK


def cmd_deps(args) -> int:
    try:
        program = load(args.input)
    except (Sb3Error, OSError) as exc:
        print(f"{args.input}: {exc}", file=sys.stderr)
        return EXIT_ERROR
    sys.stdout.write(dependence_dot(program))
    return EXIT_OK


def cmd_aggregate(args) -> int:
    try:
        rows = read_rows(args.csv)
    except OSError as exc:
        print(f"{args.csv}: {exc}", file=sys.stderr)
        return EXIT_ERROR
    filled, summary = aggregate(rows)
    write_rows(args.output or args.csv, filled)
    print(json.dumps(summary, indent=1))
    return EXIT_OK


COMMANDS = {
    "refactor": cmd_refactor,
    "batch": cmd_batch,
    "metrics": cmd_metrics,
    "deps": cmd_deps,
    "aggregate": cmd_aggregate,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        if hasattr(args, "population"):
            config_from(args)
    except ValueError as exc:
        print(f"invalid configuration: {exc}", file=sys.stderr)
        return EXIT_ERROR
    return COMMANDS[args.command](args)


if __name__ == "__main__":
    sys.exit(main())
