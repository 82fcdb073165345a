"""The 26 atomic transformations: matchers, appliers and the option list.

Every matcher looks at one script (or, for the merging kinds, at the scripts of
one actor) and reports locations where its preconditions hold. Appliers never
mutate their input: they copy the scripts they change and share the rest.

Paths alternate statement index and substack index, so ``(2, 0, 1)`` is the
second statement in the first substack of the third top-level statement.
Script-level kinds use the empty path; merges of several scripts point at the
first statement of the later script.
"""
from __future__ import annotations

import copy
import re
import threading
from collections import OrderedDict
from dataclasses import dataclass, field
from typing import Callable, Iterable, Iterator

from . import build as B
from .dependence import (
    DependenceGraph,
    analyze,
    can_reorder,
    contains_terminator,
    contains_timing,
    defines_any,
    expression_uses,
    subtree_accesses,
)
from .scratch_ast import (
    Block,
    Input,
    Literal,
    Program,
    Script,
    VarRef,
    body_at,
    copy_tree,
    iter_statements,
    iter_visible,
)

KINDS = (
    "SwapStatements",
    "LoopUnrolling",
    "SequenceToLoop",
    "ForeverIfToForeverWait",
    "ForeverWaitToForeverIf",
    "ExtractLoopCondition",
    "InlineLoopCondition",
    "SplitIfBody",
    "MergeDoubleIf",
    "IfElseToIfIfNot",
    "IfIfNotToIfElse",
    "IfsToConjunction",
    "ConjunctionToIfs",
    "IfIfElseToConjunction",
    "ConjunctionToIfIfElse",
    "IfElseToDisjunction",
    "DisjunctionToIfElse",
    "SplitLoop",
    "MergeLoops",
    "SplitScript",
    "MergeScripts",
    "ExtractIndependentSubscripts",
    "ExtractEventsFromForever",
    "MergeEventsIntoForever",
    "SplitScriptAfterUntil",
    "MergeScriptsAfterUntil",
)
KIND_INDEX = {k: i for i, k in enumerate(KINDS)}

_PAIRS = (
    ("LoopUnrolling", "SequenceToLoop"),
    ("ForeverIfToForeverWait", "ForeverWaitToForeverIf"),
    ("ExtractLoopCondition", "InlineLoopCondition"),
    ("SplitIfBody", "MergeDoubleIf"),
    ("IfElseToIfIfNot", "IfIfNotToIfElse"),
    ("IfsToConjunction", "ConjunctionToIfs"),
    ("IfIfElseToConjunction", "ConjunctionToIfIfElse"),
    ("IfElseToDisjunction", "DisjunctionToIfElse"),
    ("SplitLoop", "MergeLoops"),
    ("SplitScript", "MergeScripts"),
    ("ExtractEventsFromForever", "MergeEventsIntoForever"),
    ("SplitScriptAfterUntil", "MergeScriptsAfterUntil"),
)
INVERSE: dict[str, str] = {"SwapStatements": "SwapStatements"}
for _a, _b in _PAIRS:
    INVERSE[_a] = _b
    INVERSE[_b] = _a
INVERTIBLE_PAIRS = _PAIRS


class StaleTarget(Exception):
    """A transformation was applied to a program it was not found on."""


@dataclass(frozen=True)
class Transformation:
    kind: str
    actor: int
    script: int
    path: tuple = ()
    extra: tuple = ()
    label: str = field(default="", compare=False)

    @property
    def target(self) -> tuple:
        return (self.kind, self.actor, self.script, self.path, self.extra)

    def sort_key(self) -> tuple:
        return (self.actor, self.script, self.path, KIND_INDEX[self.kind], self.extra)

    def render(self, program: Program | None = None) -> str:
        """One trace line: ``<kind> @ <actor>/<script#>/<path> : <description>``."""
        actor = program.actors[self.actor].name if program is not None else str(self.actor)
        path = ".".join(str(p) for p in self.path) or "-"
        return f"{self.kind} @ {actor}/{self.script}/{path} : {self.label}"


# -- small helpers -----------------------------------------------------------

COND = "CONDITION"


def _lists(body: list[Block], prefix: tuple = ()) -> Iterator[tuple[tuple, list[Block]]]:
    """Every statement list with the path of its container."""
    yield prefix, body
    for i, b in enumerate(body):
        for si, name in enumerate(b.stack_names()):
            yield from _lists(b.stacks[name], prefix + (i, si))


def _clone(node):
    return copy_tree(node, fresh=True)


def _clone_input(slot: Input) -> Input:
    return Input(block=_clone(slot.block), shadow=_clone(slot.shadow))


def _key(node):
    return None if node is None else node.key()


def _keys(blocks) -> tuple:
    return tuple(b.key() for b in blocks)


def _name(b: Block) -> str:
    return b.opcode.split("_", 1)[-1]


def _defs(blocks) -> frozenset:
    out: set = set()
    for b in blocks:
        out |= subtree_accesses(b)[0]
    return frozenset(out)


def _has_opcode(node, pred) -> bool:
    return any(isinstance(n, Block) and not n.shadow and pred(n) for n in iter_visible(node))


def _volatile(cond) -> bool:
    """Reads state that may change between two evaluations with nothing in between."""
    return _has_opcode(cond, lambda n: n.category == "sensing" or n.opcode == "operator_random")


def _random(cond) -> bool:
    return _has_opcode(cond, lambda n: n.opcode == "operator_random")


def _plain_if(b: Block) -> bool:
    return b.opcode == "control_if" and b.get(COND) is not None


def _operands(cond, opcode: str):
    if not (isinstance(cond, Block) and cond.opcode == opcode and not cond.shadow):
        return None
    x, y = cond.get("OPERAND1"), cond.get("OPERAND2")
    if not isinstance(x, (Block, VarRef)) or not isinstance(y, (Block, VarRef)):
        return None
    return x, y


def _negated(cond):
    if isinstance(cond, Block) and cond.opcode == "operator_not" and not cond.shadow:
        inner = cond.get("OPERAND")
        if isinstance(inner, (Block, VarRef)):
            return inner
    return None


def _literal_int(node) -> int | None:
    if isinstance(node, Literal) and re.fullmatch(r"\s*\d+\s*", str(node.value)):
        return int(str(node.value))
    return None


def _key_option(cond) -> str | None:
    if not (isinstance(cond, Block) and cond.opcode == "sensing_keypressed" and not cond.shadow):
        return None
    menu = cond.get("KEY_OPTION")
    if isinstance(menu, Block) and menu.shadow:
        return menu.field_value("KEY_OPTION")
    return None


def _no_forever(blocks) -> bool:
    return not any(b.opcode == "control_forever" for _, b in iter_statements(blocks))


def _independent(graph: DependenceGraph, groups: list[set[int]]) -> bool:
    for x in range(len(groups)):
        for y in range(x + 1, len(groups)):
            if graph.linked(groups[x], groups[y]):
                return False
    return True


def _runs_at(keys: list, s: int) -> tuple[int, int] | None:
    """Best ``(group length, repetitions)`` of a repeated group starting at ``s``.

    Only left-maximal runs count (the group does not also occur right before
    ``s``). Prefers the largest coverage, then the most repetitions.
    """
    n = len(keys)
    best = None
    for length in range(1, (n - s) // 2 + 1):
        group = keys[s : s + length]
        if s >= length and keys[s - length : s] == group:
            continue
        k = 1
        while s + (k + 1) * length <= n and keys[s + k * length : s + (k + 1) * length] == group:
            k += 1
        if k < 2:
            continue
        cand = (length * k, k, length)
        if best is None or cand[:2] > best[:2]:
            best = cand
    return None if best is None else (best[2], best[1])


class _Ctx:
    def __init__(self, script: Script, catalog: "TransformationCatalog"):
        self.script = script
        self.catalog = catalog
        self._graph = None

    @property
    def graph(self) -> DependenceGraph:
        if self._graph is None:
            self._graph = analyze(self.script.body)
        return self._graph


# -- per-script matchers -----------------------------------------------------
# each yields (path, extra, label)

def _m_swap(ctx):
    body = ctx.script.body
    for lp, lst in _lists(body):
        for i in range(len(lst) - 1):
            a, b = lst[i], lst[i + 1]
            if b.is_cap or a.key() == b.key():
                continue
            if can_reorder(body, lp + (i,), lp + (i + 1,), ctx.graph):
                yield lp + (i,), (), f"swap {_name(a)} and {_name(b)}"


def _m_unroll(ctx):
    lo, hi = ctx.catalog.unroll_bounds
    for lp, lst in _lists(ctx.script.body):
        keys = None
        for i, b in enumerate(lst):
            if b.opcode != "control_repeat":
                continue
            n = _literal_int(b.get("TIMES"))
            body = b.stack()
            if n is None or not lo <= n <= hi or not body or body[-1].is_cap:
                continue
            keys = keys or list(_keys(lst))
            unrolled = keys[:i] + list(_keys(body)) * n + keys[i + 1 :]
            # offered only where rolling the copies up again finds this loop
            if _runs_at(unrolled, i) != (len(body), n):
                continue
            yield lp + (i,), (), f"unroll repeat {n} with {len(body)} statement(s)"


def _m_seq_to_loop(ctx):
    for lp, lst in _lists(ctx.script.body):
        if len(lst) < 2:
            continue
        keys = list(_keys(lst))
        for s in range(len(lst) - 1):
            run = _runs_at(keys, s)
            if run is not None:
                length, k = run
                yield lp + (s,), run, f"roll {k} copies of {length} statement(s) into repeat {k}"


def _m_forever_if(ctx):
    for path, b in iter_statements(ctx.script.body):
        if b.opcode == "control_forever":
            inner = b.stack()
            if len(inner) == 1 and _plain_if(inner[0]):
                yield path, (), "forever if becomes forever wait until"


def _m_forever_wait(ctx):
    for path, b in iter_statements(ctx.script.body):
        if b.opcode == "control_forever":
            inner = b.stack()
            if inner and inner[0].opcode == "control_wait_until" and inner[0].get(COND) is not None:
                yield path, (), "forever wait until becomes forever if"


def _terminating_if(b: Block) -> str | None:
    """Stop option of an ``if C {stop}`` block, or None."""
    if not _plain_if(b):
        return None
    st = b.stack()
    if len(st) == 1 and st[0].opcode == "control_stop" and st[0].is_terminator:
        return st[0].field_value("STOP_OPTION")
    return None


def _m_extract_loop_cond(ctx):
    body = ctx.script.body
    if body and body[-1].opcode == "control_forever":
        inner = body[-1].stack()
        if inner and _terminating_if(inner[-1]) is not None:
            yield (len(body) - 1,), (), "forever with conditional stop becomes repeat until"


def _m_inline_loop_cond(ctx):
    body = ctx.script.body
    for u in (len(body) - 1, len(body) - 2):
        if u < 0:
            continue
        b = body[u]
        if b.opcode != "control_repeat_until" or b.get(COND) is None:
            continue
        tail = body[u + 1 :]
        if tail and not (
            len(tail) == 1 and tail[0].opcode == "control_stop" and tail[0].field_value("STOP_OPTION") == "all"
        ):
            continue
        inner = b.stack()
        if inner and inner[-1].is_cap:
            continue
        yield (u,), (), "repeat until becomes forever with conditional stop"


def _m_split_if(ctx):
    for path, b in iter_statements(ctx.script.body):
        if not _plain_if(b):
            continue
        cond = b.get(COND)
        body = b.stack()
        if len(body) < 2 or _volatile(cond):
            continue
        uses = expression_uses(cond)
        for k in range(1, len(body)):
            first = body[:k]
            if contains_timing(first) or defines_any(_defs(first), uses):
                break
            yield path, (k,), f"split if body after statement {k}"


def _m_merge_double_if(ctx):
    for lp, lst in _lists(ctx.script.body):
        for i in range(len(lst) - 1):
            a, b = lst[i], lst[i + 1]
            if not (_plain_if(a) and _plain_if(b)):
                continue
            cond = a.get(COND)
            if cond.key() != b.get(COND).key() or _volatile(cond):
                continue
            first, second = a.stack(), b.stack()
            if not first or not second or first[-1].is_cap:
                continue
            if contains_timing(first) or defines_any(_defs(first), expression_uses(cond)):
                continue
            yield lp + (i,), (), "merge two ifs with the same condition"


def _m_ifelse_to_ififnot(ctx):
    for path, b in iter_statements(ctx.script.body):
        if b.opcode != "control_if_else":
            continue
        cond = b.get(COND)
        if cond is None or _random(cond):
            continue
        then = b.stack("SUBSTACK")
        if contains_timing(then) or defines_any(_defs(then), expression_uses(cond)):
            continue
        yield path, (), "if else becomes if and if not"


def _m_ififnot_to_ifelse(ctx):
    for lp, lst in _lists(ctx.script.body):
        for i in range(len(lst) - 1):
            a, b = lst[i], lst[i + 1]
            if not (_plain_if(a) and _plain_if(b)):
                continue
            cond = a.get(COND)
            neg = _negated(b.get(COND))
            if neg is None or neg.key() != cond.key() or _random(cond):
                continue
            then = a.stack()
            if contains_timing(then) or defines_any(_defs(then), expression_uses(cond)):
                continue
            yield lp + (i,), (), "if and if not become if else"


def _m_ifs_to_conj(ctx):
    for path, b in iter_statements(ctx.script.body):
        if _plain_if(b):
            inner = b.stack()
            if len(inner) == 1 and _plain_if(inner[0]):
                yield path, (), "nested ifs become one if with and"


def _m_conj_to_ifs(ctx):
    for path, b in iter_statements(ctx.script.body):
        if _plain_if(b) and _operands(b.get(COND), "operator_and") is not None:
            yield path, (), "if with and becomes nested ifs"


def _m_ififelse_to_conj(ctx):
    for path, b in iter_statements(ctx.script.body):
        if not _plain_if(b) or _random(b.get(COND)):
            continue
        inner = b.stack()
        if len(inner) == 1 and inner[0].opcode == "control_if_else" and inner[0].get(COND) is not None:
            yield path, (), "if around if else becomes if else with and"


def _m_conj_to_ififelse(ctx):
    for path, b in iter_statements(ctx.script.body):
        if b.opcode != "control_if_else":
            continue
        ops = _operands(b.get(COND), "operator_and")
        if ops is None or _random(ops[0]):
            continue
        other = b.stack("SUBSTACK2")
        if len(other) == 1 and _plain_if(other[0]) and other[0].get(COND).key() == ops[0].key():
            yield path, (), "if else with and becomes if around if else"


def _m_ifelse_to_disj(ctx):
    for path, b in iter_statements(ctx.script.body):
        if b.opcode != "control_if_else" or b.get(COND) is None:
            continue
        other = b.stack("SUBSTACK2")
        if len(other) == 1 and _plain_if(other[0]):
            if _keys(other[0].stack()) == _keys(b.stack("SUBSTACK")):
                yield path, (), "if else with equal branches becomes if with or"


def _m_disj_to_ifelse(ctx):
    for path, b in iter_statements(ctx.script.body):
        if _plain_if(b) and _operands(b.get(COND), "operator_or") is not None:
            yield path, (), "if with or becomes if else"


def _m_split_loop(ctx):
    script = ctx.script
    for path, b in iter_statements(script.body):
        if b.opcode == "control_repeat" and len(b.stack()) >= 2:
            body = b.stack()
            times = expression_uses(b.get("TIMES"))
            graph = analyze([b])
            for k in range(1, len(body)):
                if defines_any(_defs(body[:k]), times):
                    break
                if _independent(graph, _halves(graph, (0, 0), k)):
                    yield path, (k,), f"split repeat loop after statement {k}"
    body = script.body
    if len(body) == 1 and body[0].opcode == "control_forever" and len(body[0].stack()) >= 2:
        graph = ctx.graph
        for k in range(1, len(body[0].stack())):
            if _independent(graph, _halves(graph, (0, 0), k)):
                yield (0,), (k,), f"split forever loop into two scripts after statement {k}"


def _halves(graph: DependenceGraph, prefix: tuple, k: int) -> list[set[int]]:
    n = len(prefix)
    first, second = set(), set()
    for idx, (p, _) in enumerate(graph.nodes):
        if len(p) > n and p[:n] == prefix:
            (first if p[n] < k else second).add(idx)
    return [first, second]


def _m_merge_loops_seq(ctx):
    for lp, lst in _lists(ctx.script.body):
        for i in range(len(lst) - 1):
            a, b = lst[i], lst[i + 1]
            if a.opcode != "control_repeat" or b.opcode != "control_repeat":
                continue
            ta, tb = a.inputs.get("TIMES"), b.inputs.get("TIMES")
            if ta is None or tb is None or ta.key() != tb.key():
                continue
            first, second = a.stack(), b.stack()
            if not first or not second or first[-1].is_cap:
                continue
            if defines_any(_defs(first), expression_uses(a.get("TIMES"))):
                continue
            merged = Block("control_repeat", inputs=a.inputs, stacks={"SUBSTACK": first + second})
            graph = analyze([merged])
            if _independent(graph, _halves(graph, (0, 0), len(first))):
                yield lp + (i,), (), "merge two repeat loops"


def _m_split_script(ctx):
    body = ctx.script.body
    if len(body) < 2:
        return
    graph = ctx.graph
    for k in range(1, len(body)):
        if _independent(graph, _halves(graph, (), k)):
            yield (), (k,), f"split script after statement {k}"


def _components(graph: DependenceGraph, n: int) -> list[list[int]]:
    parent = list(range(n))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for src, dst, _, _ in graph.edges:
        a, b = find(graph.nodes[src][0][0]), find(graph.nodes[dst][0][0])
        if a != b:
            parent[max(a, b)] = min(a, b)
    groups: dict[int, list[int]] = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(i)
    return sorted(groups.values(), key=lambda g: g[0])


def _m_extract_independent(ctx):
    body = ctx.script.body
    if len(body) < 2:
        return
    comps = _components(ctx.graph, len(body))
    if len(comps) >= 2:
        yield (), (), f"extract {len(comps)} independent scripts"


def _m_extract_events(ctx):
    script = ctx.script
    body = script.body
    if script.hat.opcode != "event_whenflagclicked" or len(body) != 1:
        return
    loop = body[0]
    if loop.opcode != "control_forever" or not loop.stack():
        return
    for b in loop.stack():
        if not _plain_if(b) or _key_option(b.get(COND)) is None:
            return
        inner = b.stack()
        if not inner or contains_terminator(inner) or not _no_forever(inner):
            return
    graph = ctx.graph
    groups = [graph.subtree((0, 0, m)) - {graph.index[(0, 0, m)]} for m in range(len(loop.stack()))]
    if _independent(graph, groups):
        yield (0,), (), f"forever with {len(groups)} key checks becomes key events"


def _m_split_after_until(ctx):
    body = ctx.script.body
    for u, b in enumerate(body[:-1]):
        if b.opcode != "control_repeat_until" or b.get(COND) is None:
            continue
        suffix = body[u + 1 :]
        if contains_terminator(body[: u + 1]):
            break
        if defines_any(_defs(suffix), expression_uses(b.get(COND))):
            continue
        yield (u,), (), "move statements after repeat until into a new script"


_PER_SCRIPT: tuple[tuple[str, Callable], ...] = (
    ("SwapStatements", _m_swap),
    ("LoopUnrolling", _m_unroll),
    ("SequenceToLoop", _m_seq_to_loop),
    ("ForeverIfToForeverWait", _m_forever_if),
    ("ForeverWaitToForeverIf", _m_forever_wait),
    ("ExtractLoopCondition", _m_extract_loop_cond),
    ("InlineLoopCondition", _m_inline_loop_cond),
    ("SplitIfBody", _m_split_if),
    ("MergeDoubleIf", _m_merge_double_if),
    ("IfElseToIfIfNot", _m_ifelse_to_ififnot),
    ("IfIfNotToIfElse", _m_ififnot_to_ifelse),
    ("IfsToConjunction", _m_ifs_to_conj),
    ("ConjunctionToIfs", _m_conj_to_ifs),
    ("IfIfElseToConjunction", _m_ififelse_to_conj),
    ("ConjunctionToIfIfElse", _m_conj_to_ififelse),
    ("IfElseToDisjunction", _m_ifelse_to_disj),
    ("DisjunctionToIfElse", _m_disj_to_ifelse),
    ("SplitLoop", _m_split_loop),
    ("MergeLoops", _m_merge_loops_seq),
    ("SplitScript", _m_split_script),
    ("ExtractIndependentSubscripts", _m_extract_independent),
    ("ExtractEventsFromForever", _m_extract_events),
    ("SplitScriptAfterUntil", _m_split_after_until),
)


# -- cross-script matchers ---------------------------------------------------
# each yields (script index, path, extra, label); the index and path point at
# the first statement of the later script, so merges sort after the options of
# the scripts they consume

def _usable(s: Script) -> bool:
    return not s.opaque


def _x_merge_forever(scripts):
    for j, sj in enumerate(scripts):
        if not _single_forever(sj):
            continue
        for i in range(j):
            si = scripts[i]
            if not _single_forever(si) or si.hat.key() != sj.hat.key():
                continue
            first, second = si.body[0].stack(), sj.body[0].stack()
            merged = [Block("control_forever", stacks={"SUBSTACK": first + second})]
            graph = analyze(merged)
            if _independent(graph, _halves(graph, (0, 0), len(first))):
                yield j, (0,), (i,), f"merge forever loops of scripts {i} and {j}"


def _single_forever(s: Script) -> bool:
    return (
        _usable(s)
        and len(s.body) == 1
        and s.body[0].opcode == "control_forever"
        and bool(s.body[0].stack())
    )


def _x_merge_scripts(scripts):
    for j, sj in enumerate(scripts):
        if not _usable(sj) or not sj.body:
            continue
        for i in range(j):
            si = scripts[i]
            if not _usable(si) or not si.body or si.hat.key() != sj.hat.key():
                continue
            for order, (first, second) in enumerate(((si.body, sj.body), (sj.body, si.body))):
                if contains_timing(first) or contains_terminator(first) or first[-1].is_cap:
                    continue
                keys = (si.key()[1], sj.key()[1]) if order == 0 else (sj.key()[1], si.key()[1])
                if _concatenation_independent(first, second, keys):
                    a, b = (i, j) if order == 0 else (j, i)
                    yield j, (0,), (i, order), f"merge script {b} after script {a}"


def _concatenation_independent(first, second, keys) -> bool:
    """Whether ``first + second`` has no dependence across the seam, memoized by body keys."""
    ok = _SEAM_CACHE.get(keys)
    if ok is None:
        graph = analyze(first + second)
        ok = _independent(graph, _halves(graph, (), len(first)))
        _SEAM_CACHE.put(keys, ok)
    return ok


def _when_key_body(s: Script) -> bool:
    return (
        _usable(s)
        and s.hat.opcode == "event_whenkeypressed"
        and bool(s.body)
        and not contains_terminator(s.body)
        and _no_forever(s.body)
    )


def _x_merge_events(scripts):
    for i in range(len(scripts)):
        n = 0
        while i + n < len(scripts) and _when_key_body(scripts[i + n]):
            n += 1
            merged = _events_forever(scripts[i : i + n], copy_blocks=False)
            graph = analyze(merged)
            groups = [graph.subtree((0, 0, m)) - {graph.index[(0, 0, m)]} for m in range(n)]
            if not _independent(graph, groups):
                break
            yield i, (0,), (n,), f"merge {n} key event script(s) into a forever loop"


def _events_forever(scripts: list[Script], copy_blocks: bool = True) -> list[Block]:
    ifs = []
    for s in scripts:
        key = s.hat.field_value("KEY_OPTION")
        body = [b for b in s.body]
        ifs.append(B.if_(B.key_pressed(key), *body))
    return [B.forever(*ifs)]


def _x_merge_after_until(scripts):
    for j, sj in enumerate(scripts):
        if not _usable(sj) or len(sj.body) < 2:
            continue
        head = sj.body[0]
        if head.opcode != "control_wait_until" or head.get(COND) is None:
            continue
        suffix = sj.body[1:]
        for i in range(j):
            si = scripts[i]
            if not _usable(si) or not si.body or si.hat.key() != sj.hat.key():
                continue
            loop = si.body[-1]
            if loop.opcode != "control_repeat_until" or loop.get(COND) is None:
                continue
            if loop.get(COND).key() != head.get(COND).key() or contains_terminator(si.body):
                continue
            if defines_any(_defs(suffix), expression_uses(loop.get(COND))):
                continue
            yield j, (0,), (i,), f"append script {j} after the repeat until of script {i}"


_CROSS: tuple[tuple[str, Callable], ...] = (
    ("MergeLoops", _x_merge_forever),
    ("MergeScripts", _x_merge_scripts),
    ("MergeEventsIntoForever", _x_merge_events),
    ("MergeScriptsAfterUntil", _x_merge_after_until),
)


# -- appliers ----------------------------------------------------------------
# each takes the actor's script list and returns a new list

def _locate(s: Script, path: tuple) -> tuple[list[Block], int]:
    return body_at(s, path[:-1]), path[-1]


def _shallow(b: Block) -> Block:
    dup = copy.copy(b)
    dup.inputs = dict(b.inputs)
    dup.fields = dict(b.fields)
    dup.stacks = {k: list(v) for k, v in b.stacks.items()}
    return dup


def _cow(s: Script, path: tuple) -> Script:
    """Copy of ``s`` where only the lists and blocks along ``path`` are new.

    Appliers mutate nothing but those, so everything else can be shared with
    the original program.
    """
    out = Script(s.hat, list(s.body), s.script_id)
    lst = out.body
    for depth in range(0, len(path), 2):
        b = lst[path[depth]] = _shallow(lst[path[depth]])
        if depth + 1 < len(path):
            lst = b.stacks[b.stack_names()[path[depth + 1]]]
    return out


def _edit(fn):
    """Wrap a per-script edit working in place on a path copy of the target script."""

    def run(scripts: list[Script], t: Transformation) -> list[Script]:
        s = _cow(scripts[t.script], t.path)
        added = fn(s, t) or []
        out = list(scripts)
        out[t.script : t.script + 1] = [s, *added]
        return out

    return run


@_edit
def _a_swap(s, t):
    lst, i = _locate(s, t.path)
    lst[i], lst[i + 1] = lst[i + 1], lst[i]


@_edit
def _a_unroll(s, t):
    lst, i = _locate(s, t.path)
    loop = lst[i]
    n = _literal_int(loop.get("TIMES"))
    body = loop.stack()
    copies = list(body)
    for _ in range(n - 1):
        copies.extend(b.clone() for b in body)
    lst[i : i + 1] = copies


@_edit
def _a_seq_to_loop(s, t):
    lst, i = _locate(s, t.path)
    length, k = t.extra
    lst[i : i + length * k] = [B.repeat(k, *lst[i : i + length])]


@_edit
def _a_forever_if(s, t):
    lst, i = _locate(s, t.path)
    loop = lst[i]
    cond_if = loop.stack()[0]
    loop.stacks["SUBSTACK"] = [B.wait_until(cond_if.get(COND)), *cond_if.stack()]


@_edit
def _a_forever_wait(s, t):
    lst, i = _locate(s, t.path)
    loop = lst[i]
    wait, *rest = loop.stack()
    loop.stacks["SUBSTACK"] = [B.if_(wait.get(COND), *rest)]


@_edit
def _a_extract_loop_cond(s, t):
    lst, i = _locate(s, t.path)
    loop = lst[i]
    *prefix, cond_if = loop.stack()
    stop = cond_if.stack()[0]
    out = [B.repeat_until(cond_if.get(COND), *prefix)]
    if stop.field_value("STOP_OPTION") == "all":
        out.append(stop)
    lst[i:] = out


@_edit
def _a_inline_loop_cond(s, t):
    lst, i = _locate(s, t.path)
    loop = lst[i]
    tail = lst[i + 1 :]
    stop = tail[0] if tail else B.stop("this script")
    lst[i:] = [B.forever(*loop.stack(), B.if_(loop.get(COND), stop))]


@_edit
def _a_split_if(s, t):
    lst, i = _locate(s, t.path)
    b = lst[i]
    (k,) = t.extra
    body = b.stack()
    b.stacks["SUBSTACK"] = body[:k]
    lst.insert(i + 1, B.if_(_clone(b.get(COND)), *body[k:]))


@_edit
def _a_merge_double_if(s, t):
    lst, i = _locate(s, t.path)
    a, b = lst[i], lst[i + 1]
    a.stacks["SUBSTACK"] = a.stack() + b.stack()
    del lst[i + 1]


@_edit
def _a_ifelse_to_ififnot(s, t):
    lst, i = _locate(s, t.path)
    b = lst[i]
    cond = b.get(COND)
    lst[i : i + 1] = [
        B.if_(cond, *b.stack("SUBSTACK")),
        B.if_(B.not_(_clone(cond)), *b.stack("SUBSTACK2")),
    ]


@_edit
def _a_ififnot_to_ifelse(s, t):
    lst, i = _locate(s, t.path)
    a, b = lst[i], lst[i + 1]
    lst[i : i + 2] = [B.if_else(a.get(COND), a.stack(), b.stack())]


@_edit
def _a_ifs_to_conj(s, t):
    lst, i = _locate(s, t.path)
    outer = lst[i]
    inner = outer.stack()[0]
    lst[i] = B.if_(B.and_(outer.get(COND), inner.get(COND)), *inner.stack())


@_edit
def _a_conj_to_ifs(s, t):
    lst, i = _locate(s, t.path)
    b = lst[i]
    x, y = _operands(b.get(COND), "operator_and")
    lst[i] = B.if_(x, B.if_(y, *b.stack()))


@_edit
def _a_ififelse_to_conj(s, t):
    lst, i = _locate(s, t.path)
    outer = lst[i]
    inner = outer.stack()[0]
    c1 = outer.get(COND)
    lst[i] = B.if_else(
        B.and_(c1, inner.get(COND)),
        inner.stack("SUBSTACK"),
        [B.if_(_clone(c1), *inner.stack("SUBSTACK2"))],
    )


@_edit
def _a_conj_to_ififelse(s, t):
    lst, i = _locate(s, t.path)
    b = lst[i]
    x, y = _operands(b.get(COND), "operator_and")
    other = b.stack("SUBSTACK2")[0]
    lst[i] = B.if_(x, B.if_else(y, b.stack("SUBSTACK"), other.stack()))


@_edit
def _a_ifelse_to_disj(s, t):
    lst, i = _locate(s, t.path)
    b = lst[i]
    other = b.stack("SUBSTACK2")[0]
    lst[i] = B.if_(B.or_(b.get(COND), other.get(COND)), *b.stack("SUBSTACK"))


@_edit
def _a_disj_to_ifelse(s, t):
    lst, i = _locate(s, t.path)
    b = lst[i]
    x, y = _operands(b.get(COND), "operator_or")
    body = b.stack()
    lst[i] = B.if_else(x, body, [B.if_(y, *(c.clone() for c in body))])


@_edit
def _a_split_loop(s, t):
    lst, i = _locate(s, t.path)
    loop = lst[i]
    (k,) = t.extra
    body = loop.stack()
    loop.stacks["SUBSTACK"] = body[:k]
    if loop.opcode == "control_forever":
        return [Script(s.hat.clone(), [B.forever(*body[k:])])]
    rest = Block("control_repeat", inputs={"TIMES": _clone_input(loop.inputs["TIMES"])}, stacks={"SUBSTACK": body[k:]})
    lst.insert(i + 1, rest)
    return None


def _a_merge_loops(scripts, t):
    if not t.extra:
        return _a_merge_repeat(scripts, t)
    (i,) = t.extra
    first, second = _cow(scripts[i], (0,)), scripts[t.script]
    loop = first.body[0]
    loop.stacks["SUBSTACK"] = loop.stack() + second.body[0].stack()
    out = list(scripts)
    out[i] = first
    del out[t.script]
    return out


@_edit
def _a_merge_repeat(s, t):
    lst, i = _locate(s, t.path)
    a, b = lst[i], lst[i + 1]
    a.stacks["SUBSTACK"] = a.stack() + b.stack()
    del lst[i + 1]


@_edit
def _a_split_script(s, t):
    (k,) = t.extra
    rest = s.body[k:]
    del s.body[k:]
    return [Script(s.hat.clone(), rest)]


def _a_merge_scripts(scripts, t):
    i, order = t.extra
    si, sj = scripts[i], scripts[t.script]
    body = si.body + sj.body if order == 0 else sj.body + si.body
    out = list(scripts)
    out[i] = Script(si.hat, body, si.script_id)
    del out[t.script]
    return out


@_edit
def _a_extract_independent(s, t):
    comps = _components(analyze(s.body), len(s.body))
    body = s.body
    s.body = [body[x] for x in comps[0]]
    return [Script(s.hat.clone(), [body[x] for x in comp]) for comp in comps[1:]]


def _a_extract_events(scripts, t):
    s = scripts[t.script]
    new = [
        Script(B.when_key(_key_option(b.get(COND))), list(b.stack()))
        for b in s.body[0].stack()
    ]
    out = list(scripts)
    out[t.script : t.script + 1] = new
    return out


def _a_merge_events(scripts, t):
    (n,) = t.extra
    group = scripts[t.script : t.script + n]
    out = list(scripts)
    out[t.script : t.script + n] = [Script(B.when_flag(), _events_forever(group))]
    return out


@_edit
def _a_split_after_until(s, t):
    (u,) = t.path
    loop = s.body[u]
    rest = s.body[u + 1 :]
    del s.body[u + 1 :]
    return [Script(s.hat.clone(), [B.wait_until(_clone(loop.get(COND))), *rest])]


def _a_merge_after_until(scripts, t):
    (i,) = t.extra
    si, sj = _cow(scripts[i], ()), scripts[t.script]
    si.body.extend(sj.body[1:])
    out = list(scripts)
    out[i] = si
    del out[t.script]
    return out


_APPLY: dict[str, Callable] = {
    "SwapStatements": _a_swap,
    "LoopUnrolling": _a_unroll,
    "SequenceToLoop": _a_seq_to_loop,
    "ForeverIfToForeverWait": _a_forever_if,
    "ForeverWaitToForeverIf": _a_forever_wait,
    "ExtractLoopCondition": _a_extract_loop_cond,
    "InlineLoopCondition": _a_inline_loop_cond,
    "SplitIfBody": _a_split_if,
    "MergeDoubleIf": _a_merge_double_if,
    "IfElseToIfIfNot": _a_ifelse_to_ififnot,
    "IfIfNotToIfElse": _a_ififnot_to_ifelse,
    "IfsToConjunction": _a_ifs_to_conj,
    "ConjunctionToIfs": _a_conj_to_ifs,
    "IfIfElseToConjunction": _a_ififelse_to_conj,
    "ConjunctionToIfIfElse": _a_conj_to_ififelse,
    "IfElseToDisjunction": _a_ifelse_to_disj,
    "DisjunctionToIfElse": _a_disj_to_ifelse,
    "SplitLoop": _a_split_loop,
    "MergeLoops": _a_merge_loops,
    "SplitScript": _a_split_script,
    "MergeScripts": _a_merge_scripts,
    "ExtractIndependentSubscripts": _a_extract_independent,
    "ExtractEventsFromForever": _a_extract_events,
    "MergeEventsIntoForever": _a_merge_events,
    "SplitScriptAfterUntil": _a_split_after_until,
    "MergeScriptsAfterUntil": _a_merge_after_until,
}


# -- catalog -----------------------------------------------------------------

class _Lru:
    def __init__(self, size: int):
        self.size = size
        self.data: OrderedDict = OrderedDict()
        self.lock = threading.Lock()

    def get(self, key):
        with self.lock:
            value = self.data.get(key)
            if value is not None:
                self.data.move_to_end(key)
            return value

    def put(self, key, value):
        with self.lock:
            self.data[key] = value
            self.data.move_to_end(key)
            while len(self.data) > self.size:
                self.data.popitem(last=False)


_SEAM_CACHE = _Lru(50000)


class TransformationCatalog:
    """Matchers and appliers with memoized per-script results.

    ``kinds`` restricts the catalog to a subset of the 26 kinds; the relative
    order of the remaining options is unchanged.
    """

    def __init__(self, kinds: Iterable[str] | None = None, unroll_bounds: tuple[int, int] = (2, 4), cache_size: int = 20000):
        if kinds is not None:
            kinds = frozenset(kinds)
            unknown = kinds - set(KINDS)
            if unknown:
                raise ValueError(f"unknown transformation kinds: {sorted(unknown)}")
        self.kinds = kinds
        self.unroll_bounds = tuple(unroll_bounds)
        self._scripts = _Lru(cache_size)
        self._actors = _Lru(cache_size)

    def _allowed(self, kind: str) -> bool:
        return self.kinds is None or kind in self.kinds

    def _script_options(self, script: Script) -> list[tuple]:
        key = script.key()
        hit = self._scripts.get(key)
        if hit is not None:
            return hit
        out = []
        if not script.opaque:
            ctx = _Ctx(script, self)
            for kind, matcher in _PER_SCRIPT:
                if self._allowed(kind):
                    out.extend((kind, path, extra, label) for path, extra, label in matcher(ctx))
        self._scripts.put(key, out)
        return out

    def _cross_options(self, scripts: list[Script]) -> list[tuple]:
        key = tuple(s.key() for s in scripts)
        hit = self._actors.get(key)
        if hit is not None:
            return hit
        out = []
        for kind, matcher in _CROSS:
            if self._allowed(kind):
                out.extend((kind, *m) for m in matcher(scripts))
        self._actors.put(key, out)
        return out

    def actor_options(self, program: Program, actor: int) -> list[Transformation]:
        scripts = program.actors[actor].scripts
        found = []
        for si, script in enumerate(scripts):
            for kind, path, extra, label in self._script_options(script):
                found.append(Transformation(kind, actor, si, path, extra, label))
        if len(scripts) > 0:
            for kind, si, path, extra, label in self._cross_options(scripts):
                found.append(Transformation(kind, actor, si, path, extra, label))
        found.sort(key=Transformation.sort_key)
        return found

    def find(self, program: Program) -> list[Transformation]:
        """All applicable transformations in canonical order."""
        out = []
        for ai in range(len(program.actors)):
            out.extend(self.actor_options(program, ai))
        return out

    def apply(self, program: Program, t: Transformation, check: bool = True) -> Program:
        """New program with ``t`` applied; the input is left untouched.

        ``check=False`` skips re-matching, for callers that took ``t`` straight
        from :meth:`find` on this very program.
        """
        if not 0 <= t.actor < len(program.actors):
            raise StaleTarget(f"no actor {t.actor}")
        if check and t.target not in {o.target for o in self.actor_options(program, t.actor)}:
            raise StaleTarget(f"{t.kind} is not applicable at {t.actor}/{t.script}/{t.path}")
        actor = program.actors[t.actor]
        changed = actor.shallow()
        changed.scripts = _APPLY[t.kind](list(actor.scripts), t)
        return program.with_actor(t.actor, changed)


_DEFAULT = TransformationCatalog()
_RESTRICTED: dict[frozenset, TransformationCatalog] = {}
_restricted_lock = threading.Lock()


def catalog_for(kinds: Iterable[str] | None = None) -> TransformationCatalog:
    """Shared catalog instance for a kind subset (``None`` means all kinds)."""
    if kinds is None:
        return _DEFAULT
    key = frozenset(kinds)
    with _restricted_lock:
        cat = _RESTRICTED.get(key)
        if cat is None:
            cat = _RESTRICTED[key] = TransformationCatalog(key)
        return cat


def find_possible_transformations(program: Program, kinds: Iterable[str] | None = None) -> list[Transformation]:
    return catalog_for(kinds).find(program)


def apply(program: Program, t: Transformation, kinds: Iterable[str] | None = None) -> Program:
    return catalog_for(kinds).apply(program, t)


def inverse_of(before: Program, t: Transformation) -> Transformation | None:
    """Location of the inverse of ``t`` in the program ``t`` produces.

    Merges of scripts ``i`` and ``j`` are inverted exactly only when ``j = i + 1``
    and the earlier script comes first; splits always put the new script right
    after the original.
    """
    kind = t.kind
    inv = INVERSE.get(kind)
    if inv is None:
        return None
    scripts = before.actors[t.actor].scripts

    def at(script, path=(), extra=()):
        return Transformation(inv, t.actor, script, path, extra)

    if kind in ("SwapStatements", "ForeverIfToForeverWait", "ForeverWaitToForeverIf",
                "ExtractLoopCondition", "InlineLoopCondition", "IfElseToIfIfNot", "IfIfNotToIfElse",
                "IfsToConjunction", "ConjunctionToIfs", "IfIfElseToConjunction", "ConjunctionToIfIfElse",
                "IfElseToDisjunction", "DisjunctionToIfElse", "SplitIfBody"):
        return at(t.script, t.path)
    script = scripts[t.script]
    if kind == "LoopUnrolling":
        lst, i = body_at(script, t.path[:-1]), t.path[-1]
        loop = lst[i]
        return at(t.script, t.path, (len(loop.stack()), _literal_int(loop.get("TIMES"))))
    if kind == "SequenceToLoop":
        return at(t.script, t.path)
    if kind == "MergeDoubleIf":
        lst, i = body_at(script, t.path[:-1]), t.path[-1]
        return at(t.script, t.path, (len(lst[i].stack()),))
    if kind == "SplitLoop":
        if t.path == (0,) and script.body[0].opcode == "control_forever":
            return at(t.script + 1, (0,), (t.script,))
        return at(t.script, t.path)
    if kind == "MergeLoops":
        if not t.extra:
            lst, i = body_at(script, t.path[:-1]), t.path[-1]
            return at(t.script, t.path, (len(lst[i].stack()),))
        (i,) = t.extra
        return at(i, (0,), (len(scripts[i].body[0].stack()),))
    if kind == "SplitScript":
        return at(t.script + 1, (0,), (t.script, 0))
    if kind == "MergeScripts":
        i, order = t.extra
        first = scripts[i] if order == 0 else scripts[t.script]
        return at(i, (), (len(first.body),))
    if kind == "ExtractEventsFromForever":
        return at(t.script, (0,), (len(script.body[0].stack()),))
    if kind == "MergeEventsIntoForever":
        return at(t.script, (0,))
    if kind == "SplitScriptAfterUntil":
        return at(t.script + 1, (0,), (t.script,))
    if kind == "MergeScriptsAfterUntil":
        (i,) = t.extra
        return at(i, (len(scripts[i].body) - 1,))
    return None
