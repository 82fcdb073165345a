import math
import random

import pytest
from hypothesis import given, strategies as st

from sbrefactor import build as B
from sbrefactor.metrics import (
    category_entropy,
    evaluate,
    halstead_counts,
    halstead_difficulty,
    shannon_entropy,
)
from sbrefactor.samples import fig1a, fig1b, fig3
from sbrefactor.scratch_ast import Program, Actor, block_categories, deep_copy

from programs import shape_any

# frozen from an independent evaluation: -sum(p*log2(p)) with p over {1,1,1,2,2,2}/9
ENTROPY_111222 = 2.5032583347756456
# the loop-exit sample census under the Scratch palette: {1,1,1,1,3,2}/9
ENTROPY_FIG1A = 2.4193819456463714


def test_entropy_oracle_values():
    p = [c / 9 for c in (1, 1, 1, 2, 2, 2)]
    assert ENTROPY_111222 == pytest.approx(-math.fsum(x * math.log2(x) for x in p), abs=1e-12)


def test_entropy_of_published_census():
    assert shannon_entropy([1, 1, 1, 2, 2, 2]) == pytest.approx(ENTROPY_111222, abs=1e-12)
    assert round(shannon_entropy([1, 1, 1, 2, 2, 2]), 2) == 2.50


def test_uniform_six_categories():
    assert shannon_entropy([1] * 6) == pytest.approx(math.log2(6))
    assert round(math.log2(6), 2) == 2.58


def test_fig1a_metrics():
    f = evaluate(fig1a())
    assert f.blocks == 9
    assert f.entropy == pytest.approx(ENTROPY_FIG1A, abs=1e-12)
    assert f.difficulty == 3.5


def test_fig1b_metrics():
    f = evaluate(fig1b())
    assert (f.blocks, round(f.entropy, 2), f.difficulty) == (6, 2.58, 2.5)


def test_fig1a_halstead_census():
    ops, n_ops, operands, n_operands = halstead_counts(fig1a().sprites[0].scripts[0])
    assert len(ops) == 7 and n_ops == 7
    assert len(operands) == 4 and n_operands == 4


def test_fig1b_halstead_census():
    ops, _, operands, n_operands = halstead_counts(fig1b().sprites[0].scripts[0])
    assert (len(ops), len(operands), n_operands) == (5, 3, 3)


def test_difficulty_without_operands_is_zero():
    s = B.script(B.when_flag(), B.show())
    assert halstead_difficulty(s) == 0.0


def test_repeated_operands():
    s = B.script(B.when_flag(), B.move(10), B.move(10))
    # operators {hat, move}; operands 10, 10 with one distinct value
    assert halstead_difficulty(s) == (2 / 2) * (2 / 1)


def test_aggregations():
    p = fig3()
    e = [category_entropy(s) for s in p.sprites[0].scripts]
    assert evaluate(p, "max").entropy == max(e)
    assert evaluate(p, "mean").entropy == pytest.approx(sum(e) / 2)
    assert evaluate(p, "median").entropy == pytest.approx(sum(e) / 2)
    with pytest.raises(ValueError):
        evaluate(p, "mode")


def test_empty_program():
    f = evaluate(Program(Actor("Stage", True)))
    assert tuple(f) == (0, 0.0, 0.0)


def test_cache_does_not_change_results():
    cache = {}
    assert evaluate(fig3(), cache=cache) == evaluate(fig3())
    assert cache and evaluate(fig3(), cache=cache) == evaluate(fig3())


@given(st.integers(0, 100_000))
def test_entropy_bounds(seed):
    p = shape_any(random.Random(seed))
    for _, _, s in p.scripts():
        h = category_entropy(s)
        k = len(set(block_categories(s)))
        assert -1e-12 <= h <= math.log2(max(k, 1)) + 1e-12


@given(st.integers(0, 100_000))
def test_metrics_ignore_identity(seed):
    p = shape_any(random.Random(seed))
    assert evaluate(p) == evaluate(deep_copy(p))
