"""Scikit-learn style front end to the refactoring search.

``X`` is a sequence of programs; each may be a :class:`Program`, a path to an
sb3 or project.json file, raw file bytes, or a parsed manifest dict.
"""
from __future__ import annotations

import os
from pathlib import Path

from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.exceptions import NotFittedError

from .encoding import DEFAULT_CODON_UPPER_BOUND, DEFAULT_MAX_LENGTH
from .scratch_ast import Program, structural_eq
from .search import SearchConfig, SearchResult, search
from .sb3 import load, loads


def check_program(p) -> Program:
    """Coerce one input to a :class:`Program`."""
    if isinstance(p, Program):
        return p
    if isinstance(p, (str, os.PathLike)):
        return load(Path(p))
    if isinstance(p, (bytes, bytearray, dict)):
        return loads(p)
    raise TypeError(f"cannot interpret {type(p).__name__} as a Scratch program")


def check_programs(X) -> list[Program]:
    if isinstance(X, (Program, str, os.PathLike, bytes, bytearray, dict)):
        X = [X]
    programs = [check_program(p) for p in X]
    if not programs:
        raise ValueError("expected at least one program")
    return programs


class ScratchRefactorer(TransformerMixin, BaseEstimator):
    """Search-based refactoring of Scratch programs.

    Parameters
    ----------
    population_size, max_generations, time_budget, codon_upper_bound,
    max_length, crossover_rate, aggregation, n_jobs, kinds
        Forwarded to :class:`SearchConfig`.
    random_state : int
        Seed of the search.

    Attributes
    ----------
    results_ : list of SearchResult
        One result per program seen by :meth:`fit`.
    fronts_ : list of list of Candidate
    """

    def __init__(
        self,
        population_size: int = 30,
        max_generations: int = 100,
        time_budget: float = 1800.0,
        codon_upper_bound: int = DEFAULT_CODON_UPPER_BOUND,
        max_length: int = DEFAULT_MAX_LENGTH,
        crossover_rate: float = 0.8,
        aggregation: str = "mean",
        n_jobs: int = 1,
        kinds=None,
        random_state: int = 0,
    ):
        self.population_size = population_size
        self.max_generations = max_generations
        self.time_budget = time_budget
        self.codon_upper_bound = codon_upper_bound
        self.max_length = max_length
        self.crossover_rate = crossover_rate
        self.aggregation = aggregation
        self.n_jobs = n_jobs
        self.kinds = kinds
        self.random_state = random_state

    def _config(self) -> SearchConfig:
        return SearchConfig(
            population_size=self.population_size,
            max_generations=self.max_generations,
            time_budget=self.time_budget,
            seed=self.random_state,
            codon_upper_bound=self.codon_upper_bound,
            max_length=self.max_length,
            crossover_rate=self.crossover_rate,
            aggregation=self.aggregation,
            n_jobs=self.n_jobs,
            kinds=frozenset(self.kinds) if self.kinds is not None else None,
        )

    def fit(self, X, y=None):
        cfg = self._config()
        self.results_: list[SearchResult] = [search(p, cfg) for p in check_programs(X)]
        self.fronts_ = [r.front for r in self.results_]
        return self

    def _result_for(self, program: Program) -> SearchResult:
        for r in self.results_:
            if r.original is program or structural_eq(r.original, program):
                return r
        return search(program, self._config())

    def transform(self, X) -> list[Program]:
        """The preferred front member for each program.

        The preferred member minimizes the sum of its objectives relative to
        the baseline; programs nothing applies to are returned unchanged.
        """
        if not hasattr(self, "results_"):
            raise NotFittedError("ScratchRefactorer is not fitted yet; call fit first")
        out = []
        for p in check_programs(X):
            r = self._result_for(p)
            if not r.front:
                out.append(r.original)
                continue
            out.append(min(r.front, key=lambda c: _relative(c.fitness, r.baseline)).phenotype.program)
        return out

    def score(self, X, y=None) -> float:
        """Mean relative objective sum of the preferred members (1.0 = unchanged, lower is better)."""
        programs = check_programs(X)
        scores = []
        for p in programs:
            r = self._result_for(p)
            best = min((_relative(c.fitness, r.baseline) for c in r.front), default=3.0)
            scores.append(best / 3.0)
        return sum(scores) / len(scores)


def _relative(fitness, baseline) -> float:
    return sum(f / b if b else f + 1.0 for f, b in zip(fitness, baseline))
