"""Genotype to phenotype mapping by codon-modulo selection.

Each codon picks ``codon % len(options)`` from the transformations applicable
to the current program; mapping stops when codons run out or nothing applies.
There is no wrapping.
"""
from __future__ import annotations

import logging
import threading
from collections import OrderedDict
from dataclasses import dataclass, field
from typing import Sequence

from .scratch_ast import Program, structural_eq
from .transforms import StaleTarget, Transformation, TransformationCatalog, catalog_for

logger = logging.getLogger(__name__)

DEFAULT_CODON_UPPER_BOUND = 1024
DEFAULT_MAX_LENGTH = 40


class ReplayMismatch(Exception):
    """Replaying recorded steps did not reproduce the decoded program."""


@dataclass(frozen=True)
class Genotype:
    codons: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "codons", tuple(int(c) for c in self.codons))

    def __len__(self) -> int:
        return len(self.codons)

    def validate(self, codon_upper_bound: int = DEFAULT_CODON_UPPER_BOUND, max_length: int = DEFAULT_MAX_LENGTH) -> None:
        if not 1 <= len(self.codons) <= max_length:
            raise ValueError(f"genotype length {len(self.codons)} outside [1, {max_length}]")
        bad = [c for c in self.codons if not 0 <= c < codon_upper_bound]
        if bad:
            raise ValueError(f"codons out of range [0, {codon_upper_bound}): {bad}")


@dataclass
class Step:
    transformation: Transformation
    codon: int
    n_options: int
    choice: int


@dataclass
class Phenotype:
    steps: list[Step]
    program: Program
    consumed: int
    _key: tuple | None = field(default=None, repr=False)

    @property
    def transformations(self) -> list[Transformation]:
        return [s.transformation for s in self.steps]

    @property
    def choices(self) -> tuple[int, ...]:
        return tuple(s.choice for s in self.steps)

    def key(self):
        if self._key is None:
            self._key = self.program.key()
        return self._key

    def trace(self, original: Program | None = None) -> list[str]:
        """Rendered trace lines; actor names are taken from ``original`` when given."""
        ref = original if original is not None else self.program
        return [s.transformation.render(ref) for s in self.steps]


class Decoder:
    """Decodes genotypes against one original program.

    States are memoized by the sequence of choices that produced them, so
    genotypes sharing a decoded prefix share work. Safe to call from several
    threads.
    """

    def __init__(
        self,
        program: Program,
        catalog: TransformationCatalog | None = None,
        codon_upper_bound: int = DEFAULT_CODON_UPPER_BOUND,
        cache_size: int = 50000,
    ):
        self.program = program
        self.catalog = catalog or catalog_for(None)
        self.codon_upper_bound = codon_upper_bound
        self.cache_size = cache_size
        self._cache: OrderedDict[tuple, tuple[Program, list[Transformation]]] = OrderedDict()
        self._lock = threading.Lock()
        self._warned = False

    def options(self, program: Program) -> list[Transformation]:
        return self.catalog.find(program)

    def _state(self, choices: tuple) -> tuple[Program, list[Transformation]] | None:
        with self._lock:
            hit = self._cache.get(choices)
            if hit is not None:
                self._cache.move_to_end(choices)
            return hit

    def _store(self, choices: tuple, value) -> None:
        with self._lock:
            self._cache[choices] = value
            while len(self._cache) > self.cache_size:
                self._cache.popitem(last=False)

    def decode(self, genotype: Genotype | Sequence[int]) -> Phenotype:
        codons = genotype.codons if isinstance(genotype, Genotype) else tuple(genotype)
        choices: tuple = ()
        state = self._state(choices)
        if state is None:
            state = (self.program, self.options(self.program))
            self._store(choices, state)
        program, options = state
        steps: list[Step] = []
        for codon in codons:
            if not options:
                break
            n = len(options)
            if n > self.codon_upper_bound and not self._warned:
                self._warned = True
                logger.warning("%d options exceed the codon upper bound %d", n, self.codon_upper_bound)
            r = codon % n
            t = options[r]
            steps.append(Step(t, codon, n, r))
            choices = choices + (r,)
            nxt = self._state(choices)
            if nxt is None:
                new_program = self.catalog.apply(program, t, check=False)
                nxt = (new_program, self.options(new_program))
                self._store(choices, nxt)
            program, options = nxt
        return Phenotype(steps, program, len(steps))


def decode(
    genotype: Genotype | Sequence[int],
    program: Program,
    kinds=None,
    codon_upper_bound: int = DEFAULT_CODON_UPPER_BOUND,
) -> Phenotype:
    """One-off decoding; use :class:`Decoder` to decode many genotypes."""
    return Decoder(program, catalog_for(kinds), codon_upper_bound).decode(genotype)


def replay(
    steps: Sequence[Step | Transformation],
    program: Program,
    kinds=None,
    expected: Program | None = None,
) -> Program:
    """Re-apply recorded steps to ``program``.

    Raises :class:`ReplayMismatch` when a step is no longer applicable or the
    result differs from ``expected``.
    """
    catalog = catalog_for(kinds)
    for i, step in enumerate(steps):
        t = step.transformation if isinstance(step, Step) else step
        try:
            program = catalog.apply(program, t)
        except StaleTarget as exc:
            raise ReplayMismatch(f"step {i} ({t.kind}) is not applicable: {exc}") from exc
    if expected is not None and not structural_eq(program, expected):
        raise ReplayMismatch("replayed program differs from the decoded one")
    return program
