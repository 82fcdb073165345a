import random

import pytest
from hypothesis import given, settings, strategies as st

from sbrefactor.encoding import Decoder, Genotype, ReplayMismatch, decode, replay
from sbrefactor.samples import CORPUS, SAMPLES, fig3, fig5a
from sbrefactor.scratch_ast import deep_copy, structural_eq
from sbrefactor.transforms import apply, find_possible_transformations

from programs import shape_any

EXAMPLE_GENOTYPE = (5, 9, 10, 42, 17, 8, 13, 2, 13)
# the three kinds the worked example draws its options from
EXAMPLE_KINDS = frozenset({"ForeverIfToForeverWait", "MergeLoops", "IfIfNotToIfElse"})


def test_worked_example_decodes_two_steps():
    ph = decode(EXAMPLE_GENOTYPE, fig3(), kinds=EXAMPLE_KINDS)
    assert [s.n_options for s in ph.steps] == [3, 1]
    assert ph.choices == (2, 0)
    assert [s.transformation.kind for s in ph.steps] == ["MergeLoops", "IfIfNotToIfElse"]
    assert ph.consumed == 2
    assert find_possible_transformations(ph.program, kinds=EXAMPLE_KINDS) == []
    (loop,) = ph.program.sprites[0].scripts[0].body
    assert [b.opcode for b in loop.stack()] == ["control_if_else"]


def test_worked_example_under_full_catalog():
    # the full catalog offers three options after merging, so the second codon picks SplitLoop
    ph = decode(EXAMPLE_GENOTYPE, fig3())
    assert ph.steps[0].transformation.kind == "MergeLoops"
    assert ph.steps[1].n_options == 3
    assert ph.consumed == len(EXAMPLE_GENOTYPE)


def test_nothing_applicable():
    p = fig5a()
    ph = decode((3, 1, 4), p)
    assert ph.steps == [] and ph.consumed == 0
    assert ph.program is p


def test_empty_replay():
    p = fig3()
    assert replay([], p) is p


def test_replay_reproduces_worked_example():
    p = fig3()
    ph = decode(EXAMPLE_GENOTYPE, p, kinds=EXAMPLE_KINDS)
    assert structural_eq(replay(ph.steps, p, expected=ph.program), ph.program)


def test_replay_mismatch():
    p = fig3()
    ph = decode(EXAMPLE_GENOTYPE, p, kinds=EXAMPLE_KINDS)
    with pytest.raises(ReplayMismatch):
        replay(list(reversed(ph.steps)), p)
    with pytest.raises(ReplayMismatch):
        replay(ph.steps[:1], p, expected=ph.program)


def test_genotype_validation():
    Genotype((0, 1023)).validate()
    for bad in [(), (1024,), (-1,), tuple(range(41))]:
        with pytest.raises(ValueError):
            Genotype(bad).validate()
    with pytest.raises(ValueError):
        Genotype((5, 6)).validate(codon_upper_bound=6)


def test_trace_lines():
    p = fig3()
    ph = decode(EXAMPLE_GENOTYPE, p, kinds=EXAMPLE_KINDS)
    lines = ph.trace(p)
    assert lines[0].startswith("MergeLoops @ Sprite1/1/0 : ")
    assert lines[1].startswith("IfIfNotToIfElse @ Sprite1/0/0.0.0 : ")


def _reduced(codons, program):
    """Oracle: decode by hand, replacing each codon with its residue."""
    out = []
    for c in codons:
        options = find_possible_transformations(program)
        if not options:
            break
        r = c % len(options)
        out.append(r)
        program = apply(program, options[r])
    return tuple(out), program


@settings(max_examples=40)
@given(st.integers(0, 10**6), st.lists(st.integers(0, 1023), min_size=1, max_size=8))
def test_congruent_genotypes_decode_alike(seed, codons):
    p = shape_any(random.Random(seed))
    choices, program = _reduced(codons, p)
    ph = decode(codons, p)
    assert ph.choices == choices
    assert structural_eq(ph.program, program)
    # any codon congruent to the chosen residue picks the same option
    bumped = [c + s.n_options * 7 for c, s in zip(codons, ph.steps)] + list(codons[len(ph.steps):])
    assert decode(bumped, p).choices == choices


@settings(max_examples=30)
@given(st.integers(0, 10**6))
def test_decoding_is_pure_and_replayable(seed):
    rng = random.Random(seed)
    p = CORPUS[rng.choice(sorted(CORPUS))][0]()
    before = deep_copy(p)
    codons = [rng.randrange(1024) for _ in range(rng.randint(1, 12))]
    ph = decode(codons, p)
    assert ph.consumed <= len(codons)
    assert structural_eq(p, before)
    assert structural_eq(replay(ph.steps, p), ph.program)


def test_cached_decoder_matches_fresh_decoding():
    p = SAMPLES["fig1a"]()
    shared = Decoder(p)
    rng = random.Random(7)
    for _ in range(100):
        codons = [rng.randrange(1024) for _ in range(rng.randint(1, 10))]
        a = shared.decode(codons)
        b = decode(codons, p)
        assert a.choices == b.choices
        assert structural_eq(a.program, b.program)
