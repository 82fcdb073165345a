"""NSGA-II over variable-length codon genotypes.

All randomness comes from one ``random.Random`` stream consumed only during
initialization, selection and variation. Fitness evaluation may run on a thread
pool; results are collected in submission order, so the outcome does not
depend on ``n_jobs``.
"""
from __future__ import annotations

import math
import random
import time
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

from .encoding import DEFAULT_CODON_UPPER_BOUND, DEFAULT_MAX_LENGTH, Decoder, Phenotype
from .metrics import AGGREGATIONS, FitnessVector, evaluate
from .scratch_ast import Program
from .transforms import catalog_for


@dataclass
class SearchConfig:
    population_size: int = 30
    max_generations: int = 100
    time_budget: float = 1800.0
    seed: int = 0
    codon_upper_bound: int = DEFAULT_CODON_UPPER_BOUND
    max_length: int = DEFAULT_MAX_LENGTH
    crossover_rate: float = 0.8
    aggregation: str = "mean"
    n_jobs: int = 1
    kinds: frozenset | None = None

    def __post_init__(self):
        if self.population_size < 4 or self.population_size % 2:
            raise ValueError("population_size must be even and at least 4")
        if self.max_generations < 0:
            raise ValueError("max_generations must be non-negative")
        if self.time_budget <= 0:
            raise ValueError("time_budget must be positive")
        if self.codon_upper_bound < 1 or self.max_length < 1:
            raise ValueError("codon_upper_bound and max_length must be positive")
        if not 0.0 <= self.crossover_rate <= 1.0:
            raise ValueError("crossover_rate must be a probability")
        if self.aggregation not in AGGREGATIONS:
            raise ValueError(f"aggregation must be one of {AGGREGATIONS}")
        if self.n_jobs < 1:
            raise ValueError("n_jobs must be at least 1")


@dataclass
class Candidate:
    genotype: tuple[int, ...]
    fitness: FitnessVector
    phenotype: Phenotype
    rank: int = -1
    crowding: float = 0.0


@dataclass
class RunStats:
    generations: int = 0
    evaluations: int = 0
    wall_secs: float = 0.0
    baseline: FitnessVector | None = None
    best: FitnessVector | None = None
    front_mean: tuple[float, float, float] | None = None
    front_size: int = 0
    n_transformations: float = 0.0
    kind_histogram: dict = field(default_factory=dict)

    @property
    def top_kind(self) -> str:
        if not self.kind_histogram:
            return ""
        return min(self.kind_histogram.items(), key=lambda kv: (-kv[1], kv[0]))[0]


@dataclass(frozen=True)
class NoTransformationsApplicable:
    """Marker for a program no transformation applies to."""

    baseline: FitnessVector


@dataclass
class SearchResult:
    original: Program
    baseline: FitnessVector
    front: list[Candidate]
    stats: RunStats
    no_transformations: bool = False

    @property
    def marker(self) -> NoTransformationsApplicable | None:
        return NoTransformationsApplicable(self.baseline) if self.no_transformations else None


# -- dominance ---------------------------------------------------------------

def dominates(a: Sequence[float], b: Sequence[float]) -> bool:
    """Minimization dominance: nowhere worse and somewhere strictly better."""
    strictly = False
    for x, y in zip(a, b):
        if x > y:
            return False
        if x < y:
            strictly = True
    return strictly


def fast_non_dominated_sort(points: Sequence[Sequence[float]]) -> list[list[int]]:
    """Indices of ``points`` grouped into fronts, best front first."""
    n = len(points)
    dominated_by = [[] for _ in range(n)]
    count = [0] * n
    fronts: list[list[int]] = [[]]
    for p in range(n):
        for q in range(n):
            if p == q:
                continue
            if dominates(points[p], points[q]):
                dominated_by[p].append(q)
            elif dominates(points[q], points[p]):
                count[p] += 1
        if count[p] == 0:
            fronts[0].append(p)
    i = 0
    while fronts[i]:
        nxt = []
        for p in fronts[i]:
            for q in dominated_by[p]:
                count[q] -= 1
                if count[q] == 0:
                    nxt.append(q)
        i += 1
        fronts.append(sorted(nxt))
    return fronts[:-1]


def crowding_distance(points: Sequence[Sequence[float]]) -> list[float]:
    """Crowding distance of each point within one front."""
    n = len(points)
    if n == 0:
        return []
    dist = [0.0] * n
    if n <= 2:
        return [math.inf] * n
    for m in range(len(points[0])):
        order = sorted(range(n), key=lambda i: (points[i][m], i))
        lo, hi = points[order[0]][m], points[order[-1]][m]
        dist[order[0]] = dist[order[-1]] = math.inf
        span = hi - lo
        if span == 0:
            continue
        for k in range(1, n - 1):
            i = order[k]
            if dist[i] != math.inf:
                dist[i] += (points[order[k + 1]][m] - points[order[k - 1]][m]) / span
    return dist


# -- variation ---------------------------------------------------------------

def random_genotype(rng: random.Random, codon_upper_bound: int, max_length: int) -> tuple[int, ...]:
    n = rng.randint(1, max_length)
    return tuple(rng.randrange(codon_upper_bound) for _ in range(n))


def mutate(g: Sequence[int], rng: random.Random, codon_upper_bound: int, max_length: int) -> tuple[int, ...]:
    """Each codon is replaced, preceded by a new codon, or deleted with probability 1/n."""
    n = len(g)
    out: list[int] = []
    for idx, codon in enumerate(g):
        if rng.random() >= 1.0 / n:
            out.append(codon)
            continue
        op = rng.randrange(3)
        remaining = len(out) + (n - idx - 1)
        if op == 2 and remaining == 0:
            op = 0
        if op == 0:
            out.append(rng.randrange(codon_upper_bound))
        elif op == 1:
            out.append(rng.randrange(codon_upper_bound))
            out.append(codon)
    return tuple(out[:max_length])


def crossover(a: Sequence[int], b: Sequence[int], rng: random.Random, max_length: int) -> tuple[tuple[int, ...], tuple[int, ...]]:
    """Single-point crossover with an independent cut in each parent."""
    ca = rng.randint(1, max(1, len(a) - 1))
    cb = rng.randint(1, max(1, len(b) - 1))
    return tuple((a[:ca] + b[cb:])[:max_length]), tuple((b[:cb] + a[ca:])[:max_length])


def _tournament(pop: list[Candidate], rng: random.Random) -> Candidate:
    x = pop[rng.randrange(len(pop))]
    y = pop[rng.randrange(len(pop))]
    if x.rank != y.rank:
        return x if x.rank < y.rank else y
    return x if x.crowding >= y.crowding else y


def _assign(pop: list[Candidate]) -> list[list[int]]:
    points = [c.fitness for c in pop]
    fronts = fast_non_dominated_sort(points)
    for r, front in enumerate(fronts):
        dist = crowding_distance([points[i] for i in front])
        for i, d in zip(front, dist):
            pop[i].rank = r
            pop[i].crowding = d
    return fronts


def _select(pop: list[Candidate], size: int) -> list[Candidate]:
    fronts = _assign(pop)
    chosen: list[Candidate] = []
    for front in fronts:
        if len(chosen) + len(front) <= size:
            chosen.extend(pop[i] for i in front)
            continue
        rest = sorted(front, key=lambda i: (-pop[i].crowding, i))
        chosen.extend(pop[i] for i in rest[: size - len(chosen)])
        break
    return chosen


# -- driver ------------------------------------------------------------------

class _Evaluator:
    def __init__(self, program: Program, cfg: SearchConfig):
        self.decoder = Decoder(program, catalog_for(cfg.kinds), cfg.codon_upper_bound)
        self.aggregation = cfg.aggregation
        self.metric_cache: dict = {}
        self.count = 0
        self.pool = ThreadPoolExecutor(cfg.n_jobs) if cfg.n_jobs > 1 else None

    def one(self, g: tuple[int, ...]) -> Candidate:
        ph = self.decoder.decode(g)
        return Candidate(g, evaluate(ph.program, self.aggregation, self.metric_cache), ph)

    def many(self, genotypes: list[tuple[int, ...]]) -> list[Candidate]:
        self.count += len(genotypes)
        if self.pool is None:
            return [self.one(g) for g in genotypes]
        return list(self.pool.map(self.one, genotypes))

    def close(self):
        if self.pool is not None:
            self.pool.shutdown()


def search(program: Program, cfg: SearchConfig | None = None, on_generation=None) -> SearchResult:
    """Run NSGA-II and return the first front plus run statistics.

    When nothing applies to the original program the result has
    ``no_transformations`` set and an empty front. ``on_generation`` is called
    with the generation number and the population after each selection.
    """
    cfg = cfg or SearchConfig()
    start = time.monotonic()
    rng = random.Random(cfg.seed)
    baseline = evaluate(program, cfg.aggregation)
    stats = RunStats(baseline=baseline)
    catalog = catalog_for(cfg.kinds)
    if not catalog.find(program):
        stats.wall_secs = time.monotonic() - start
        return SearchResult(program, baseline, [], stats, no_transformations=True)

    ev = _Evaluator(program, cfg)
    try:
        n = cfg.population_size
        pop = ev.many([random_genotype(rng, cfg.codon_upper_bound, cfg.max_length) for _ in range(n)])
        _assign(pop)
        generations = 0
        if on_generation is not None:
            on_generation(0, pop)
        while generations < cfg.max_generations and time.monotonic() - start < cfg.time_budget:
            children: list[tuple[int, ...]] = []
            while len(children) < n:
                a = _tournament(pop, rng).genotype
                b = _tournament(pop, rng).genotype
                if rng.random() < cfg.crossover_rate:
                    a, b = crossover(a, b, rng, cfg.max_length)
                children.append(mutate(a, rng, cfg.codon_upper_bound, cfg.max_length))
                children.append(mutate(b, rng, cfg.codon_upper_bound, cfg.max_length))
            pop = _select(pop + ev.many(children[:n]), n)
            generations += 1
            if on_generation is not None:
                on_generation(generations, pop)
        front = _final_front(pop, Candidate((), baseline, Phenotype([], program, 0)))
    finally:
        ev.close()

    stats.generations = generations
    stats.evaluations = ev.count
    stats.front_size = len(front)
    stats.best = FitnessVector(*(min(c.fitness[m] for c in front) for m in range(3)))
    stats.front_mean = tuple(sum(c.fitness[m] for c in front) / len(front) for m in range(3))
    stats.n_transformations = sum(len(c.phenotype.steps) for c in front) / len(front)
    stats.kind_histogram = dict(
        sorted(Counter(s.transformation.kind for c in front for s in c.phenotype.steps).items())
    )
    stats.wall_secs = time.monotonic() - start
    return SearchResult(program, baseline, front, stats)


def _final_front(pop: list[Candidate], original: Candidate) -> list[Candidate]:
    """Non-dominated members of the population and the original.

    Members with equal fitness collapse to the one with the shortest trace, so
    the original wins whenever nothing improves on it.
    """
    pool = [original, *pop]
    points = [c.fitness for c in pool]
    best = fast_non_dominated_sort(points)[0]
    seen = set()
    out = []
    for i in sorted(best, key=lambda i: (tuple(points[i]), len(pool[i].phenotype.steps), pool[i].genotype)):
        key = tuple(points[i])
        if key in seen:
            continue
        seen.add(key)
        out.append(pool[i])
    for c in out:
        c.rank = 0
    return out
