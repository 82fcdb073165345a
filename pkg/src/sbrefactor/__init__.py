"""Search-based readability refactoring for Scratch 3 projects.

The scikit-learn style front end lives in :mod:`sbrefactor.estimator` and is
not imported here, so the command line does not pay for loading scikit-learn.
"""
from .encoding import Genotype, decode, replay
from .metrics import FitnessVector, category_entropy, evaluate, halstead_difficulty
from .scratch_ast import Actor, Block, Program, Script, count_blocks, deep_copy, structural_eq
from .sb3 import dump, dumps, load, loads
from .search import SearchConfig, SearchResult, search
from .transforms import (
    KINDS,
    StaleTarget,
    Transformation,
    TransformationCatalog,
    apply,
    find_possible_transformations,
)

__version__ = "0.1.0"

__all__ = [
    "Actor",
    "Block",
    "FitnessVector",
    "Genotype",
    "KINDS",
    "Program",
    "Script",
    "SearchConfig",
    "SearchResult",
    "StaleTarget",
    "Transformation",
    "TransformationCatalog",
    "apply",
    "category_entropy",
    "count_blocks",
    "decode",
    "deep_copy",
    "dump",
    "dumps",
    "evaluate",
    "find_possible_transformations",
    "halstead_difficulty",
    "load",
    "loads",
    "replay",
    "search",
    "structural_eq",
]
