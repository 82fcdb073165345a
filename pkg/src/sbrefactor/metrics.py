"""Readability objectives: block count, block-category entropy, Halstead difficulty.

All three are minimized. Entropy and difficulty are computed per script and
aggregated over the program (mean by default).
"""
from __future__ import annotations

import math
import statistics
from collections import Counter
from typing import NamedTuple

from .scratch_ast import Block, Literal, Program, Script, VarRef, block_categories, count_blocks, iter_visible

AGGREGATIONS = ("mean", "max", "median")


class FitnessVector(NamedTuple):
    blocks: int
    entropy: float
    difficulty: float

    def as_dict(self) -> dict:
        return {"blocks": self.blocks, "entropy": self.entropy, "difficulty": self.difficulty}


def shannon_entropy(counts) -> float:
    """Entropy in bits of a histogram given as category counts."""
    # sorted so the value does not depend on the order categories appear in
    counts = sorted(c for c in counts if c > 0)
    total = sum(counts)
    if total == 0:
        return 0.0
    return -math.fsum(c / total * math.log2(c / total) for c in counts) + 0.0


def category_entropy(script: Script) -> float:
    return shannon_entropy(Counter(block_categories(script)).values())


def halstead_counts(script: Script) -> tuple[set, int, set, int]:
    """``(unique operators, total operators, unique operands, total operands)``.

    Operators are keyed by opcode: every non-menu block, including sensing and
    motion reporters. Operands are literals, variable references and drop-down
    values, keyed by kind and value.
    """
    operators: set = set()
    operands: set = set()
    n_operators = 0
    n_operands = 0
    for root in [script.hat, *script.body]:
        for node in iter_visible(root):
            if isinstance(node, Literal):
                operands.add(("lit", str(node.value)))
                n_operands += 1
            elif isinstance(node, VarRef):
                operands.add(("var", node.name))
                n_operands += 1
            elif isinstance(node, Block):
                if node.opcode in ("data_variable", "data_listcontents"):
                    operands.add(("var", node.field_value("VARIABLE") or node.field_value("LIST")))
                    n_operands += 1
                    continue
                if not node.shadow:
                    operators.add(node.opcode)
                    n_operators += 1
                for fname, value in node.fields.items():
                    kind = "var" if fname in ("VARIABLE", "LIST") else "menu"
                    operands.add((kind, str(value[0])))
                    n_operands += 1
    return operators, n_operators, operands, n_operands


def halstead_difficulty(script: Script) -> float:
    operators, _, operands, n_operands = halstead_counts(script)
    if not operands:
        return 0.0
    return (len(operators) / 2) * (n_operands / len(operands))


def _aggregate(values: list[float], how: str) -> float:
    if not values:
        return 0.0
    if how == "mean":
        return math.fsum(values) / len(values)
    if how == "max":
        return max(values)
    if how == "median":
        return float(statistics.median(values))
    raise ValueError(f"unknown aggregation {how!r}")


def script_metrics(script: Script) -> tuple[int, float, float]:
    return count_blocks(script), category_entropy(script), halstead_difficulty(script)


def evaluate(program: Program, aggregation: str = "mean", cache: dict | None = None) -> FitnessVector:
    """Fitness of a program. ``cache`` memoizes per-script values by structural key."""
    blocks = 0
    entropies = []
    difficulties = []
    for _, _, script in program.scripts():
        if cache is not None:
            key = script.key()
            m = cache.get(key)
            if m is None:
                m = cache[key] = script_metrics(script)
        else:
            m = script_metrics(script)
        blocks += m[0]
        entropies.append(m[1])
        difficulties.append(m[2])
    return FitnessVector(blocks, _aggregate(entropies, aggregation), _aggregate(difficulties, aggregation))
