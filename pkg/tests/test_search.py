import math
import random
import time
from collections import Counter

import pytest
from hypothesis import given, strategies as st

from sbrefactor import build as B
from sbrefactor.samples import fig1a, fig3, fig5a
from sbrefactor.search import (
    NoTransformationsApplicable,
    SearchConfig,
    crossover,
    crowding_distance,
    dominates,
    fast_non_dominated_sort,
    mutate,
    random_genotype,
    search,
)

from oracles import brute_crowding, brute_fronts

points3 = st.lists(st.tuples(*[st.integers(0, 5)] * 3), min_size=1, max_size=30)


class Scripted:
    """Stand-in rng that replays fixed answers."""

    def __init__(self, randoms=(), ints=()):
        self.randoms = list(randoms)
        self.ints = list(ints)

    def random(self):
        return self.randoms.pop(0)

    def randrange(self, n):
        return self.ints.pop(0) % n

    def randint(self, a, b):
        return self.ints.pop(0)


def test_dominance_examples():
    assert not dominates((6, 2.58, 2.5), (9, 2.50, 3.5))
    assert not dominates((9, 2.50, 3.5), (6, 2.58, 2.5))
    assert not dominates((5, 1.0, 1.0), (5, 1.0, 1.0))
    assert dominates((4, 1.0, 1.0), (5, 1.0, 1.0))


def test_sorting_examples():
    assert fast_non_dominated_sort([(1, 1, 1)] * 4) == [[0, 1, 2, 3]]
    assert fast_non_dominated_sort([(3, 3, 3), (1, 1, 1), (2, 2, 2)]) == [[1], [2], [0]]
    assert fast_non_dominated_sort([]) == []


@given(points3)
def test_sorting_matches_brute_force(points):
    assert [sorted(f) for f in fast_non_dominated_sort(points)] == brute_fronts(points)


def test_crowding_examples():
    assert crowding_distance([(1, 2, 3), (2, 1, 3)]) == [math.inf, math.inf]
    d = crowding_distance([(0, 5, 5), (1, 5, 5), (2, 5, 5)])
    assert d[1] == pytest.approx(1.0) and d[0] == d[2] == math.inf


@given(st.lists(st.tuples(*[st.floats(0, 10, allow_nan=False)] * 3), min_size=1, max_size=20, unique=True))
def test_crowding_matches_second_implementation(points):
    got, want = crowding_distance(points), brute_crowding(points)
    for g, w in zip(got, want):
        assert g == w or g == pytest.approx(w, abs=1e-9)


def test_forced_delete_on_single_codon_becomes_replacement():
    # mutate position 0 (random 0.0 < 1/1), choose delete (2), new codon 77
    assert mutate((5,), Scripted(randoms=[0.0], ints=[2, 77]), 1024, 40) == (77,)


def test_mutation_operations():
    assert mutate((5, 6), Scripted(randoms=[0.0, 0.9], ints=[2]), 1024, 40) == (6,)
    assert mutate((5, 6), Scripted(randoms=[0.0, 0.9], ints=[1, 8]), 1024, 40) == (8, 5, 6)
    assert mutate((5, 6), Scripted(randoms=[0.9, 0.0], ints=[0, 8]), 1024, 40) == (5, 8)


class CountingRandom(random.Random):
    def __init__(self, seed):
        super().__init__(seed)
        self.ops = 0

    def randrange(self, n, *args):
        if n == 3 and not args:
            self.ops += 1
        return super().randrange(n, *args)


def test_about_one_modification_per_mutation():
    rng = CountingRandom(11)
    g = tuple(range(10))
    for _ in range(10000):
        mutate(g, rng, 1024, 40)
    assert rng.ops / 10000 == pytest.approx(1.0, rel=0.1)


def test_mutation_is_reproducible():
    g = tuple(range(12))
    a = [mutate(g, random.Random(3), 1024, 40) for _ in range(5)]
    assert len(set(a)) == 1


def test_crossover_trace():
    assert crossover((1, 2, 3), (9, 9), Scripted(ints=[1, 1]), 40) == ((1, 9), (9, 2, 3))
    assert crossover((4, 5, 6), (4, 5, 6), Scripted(ints=[2, 2]), 40) == ((4, 5, 6), (4, 5, 6))


def test_crossover_preserves_codon_multiset():
    rng = random.Random(5)
    for _ in range(1000):
        a = random_genotype(rng, 50, 10)
        b = random_genotype(rng, 50, 10)
        x, y = crossover(a, b, rng, 40)
        assert Counter(x) + Counter(y) == Counter(a) + Counter(b)
        assert x and y


def test_random_genotype_bounds():
    rng = random.Random(1)
    lengths = set()
    for _ in range(2000):
        g = random_genotype(rng, 16, 5)
        lengths.add(len(g))
        assert all(0 <= c < 16 for c in g)
    assert lengths == {1, 2, 3, 4, 5}


def test_config_validation():
    with pytest.raises(ValueError):
        SearchConfig(population_size=3)
    with pytest.raises(ValueError):
        SearchConfig(aggregation="sum")
    with pytest.raises(ValueError):
        SearchConfig(crossover_rate=1.5)


def test_timed_sequence_returns_marker():
    r = search(fig5a(), SearchConfig(population_size=8, max_generations=3))
    assert r.no_transformations and r.front == []
    assert isinstance(r.marker, NoTransformationsApplicable)
    assert r.marker.baseline == r.baseline


def test_fig1a_reaches_fig1b_shape():
    r = search(fig1a(), SearchConfig(population_size=30, max_generations=30, seed=1))
    assert r.marker is None
    assert any(c.fitness.blocks <= 6 and c.fitness.difficulty <= 2.5 for c in r.front)


def test_front_is_sound_and_elitist():
    history = []
    best_seen = []

    def watch(gen, pop):
        history.append(list(pop))
        best_seen.append(tuple(min(c.fitness[m] for c in pop) for m in range(3)))

    r = search(fig3(), SearchConfig(population_size=12, max_generations=8, seed=2), on_generation=watch)
    final = history[-1]
    for c in r.front:
        assert not any(dominates(o.fitness, c.fitness) for o in final)
    for prev, cur in zip(best_seen, best_seen[1:]):
        assert all(b <= a for a, b in zip(prev, cur))
    keys = [tuple(c.fitness) for c in r.front]
    assert len(keys) == len(set(keys))
    assert r.stats.generations == 8 and r.stats.evaluations == 12 * 9


def test_unchanging_programs_report_the_original():
    # swapping two unrelated statements never changes fitness
    p = B.program(B.sprite("S", B.script(B.when_flag(), B.say("hi"), B.move(10))))
    r = search(p, SearchConfig(population_size=8, max_generations=4, kinds={"SwapStatements"}))
    assert len(r.front) == 1 and r.front[0].fitness == r.baseline


def _summary(result):
    return [(c.genotype, tuple(c.fitness), c.phenotype.trace(result.original)) for c in result.front]


def test_thread_count_does_not_change_the_outcome():
    cfg = dict(population_size=10, max_generations=6, seed=9)
    a = search(fig3(), SearchConfig(**cfg, n_jobs=1))
    b = search(fig3(), SearchConfig(**cfg, n_jobs=4))
    assert _summary(a) == _summary(b)
    assert a.stats.evaluations == b.stats.evaluations


def test_time_budget_stops_the_run():
    start = time.monotonic()
    r = search(fig3(), SearchConfig(population_size=10, max_generations=10**6, time_budget=0.5))
    assert time.monotonic() - start < 5
    assert r.stats.generations < 10**6
