"""Control, data, and time dependencies between the statements of one script.

Nodes are statement occurrences in pre-order; a compound statement's node
stands for its header (condition or repeat count), not its substacks. Edges
point from the earlier to the dependent statement and carry a kind: ``C``
(control), ``D`` (data) or ``T`` (time).
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

from . import opcodes
from .opcodes import ANY, conflicts
from .scratch_ast import Block, Literal, Script, VarRef, iter_expressions, iter_statements

Edge = tuple  # (src, dst, kind, label)


# -- def/use ---------------------------------------------------------------

def expression_uses(node) -> set:
    """Resources read by an expression tree."""
    out: set = set()
    if node is None or isinstance(node, Literal):
        return out
    if isinstance(node, VarRef):
        out.add(node.resource)
        return out
    out |= _own_uses(node)
    for inner in iter_expressions(node):
        if isinstance(inner, VarRef):
            out.add(inner.resource)
        elif isinstance(inner, Block):
            out |= _own_uses(inner)
    return out


def _own_uses(block: Block) -> set:
    if block.shadow:
        return set()
    info = opcodes.info(block.opcode)
    uses = {opcodes.resource(t, block) for t in info.uses}
    if block.opcode == "sensing_of":
        uses.add(_sensing_of(block))
    return uses


def _sensing_of(block: Block) -> tuple:
    target = block.get("OBJECT")
    if not (isinstance(target, Block) and target.shadow):
        return ANY
    actor = target.field_value("OBJECT") or ""
    prop = block.field_value("PROPERTY") or ""
    attr = opcodes._OF_PROPERTIES.get(prop)
    if attr is None:
        return ("var-of", actor, prop)
    return ("attr", actor, attr)


def statement_accesses(block: Block) -> tuple[frozenset, frozenset]:
    """``(defs, uses)`` of a statement's own header, excluding its substacks."""
    info = opcodes.info(block.opcode)
    defs = {opcodes.resource(t, block) for t in info.defs}
    uses = {opcodes.resource(t, block) for t in info.uses}
    if block.opcode in ("event_broadcast", "event_broadcastandwait"):
        msg = block.get("BROADCAST_INPUT")
        defs.add(("msg", msg.value) if isinstance(msg, Literal) else ANY)
    elif block.opcode == "control_stop" and not block.is_terminator:
        defs.add(ANY)
    for node in iter_expressions(block):
        if isinstance(node, VarRef):
            uses.add(node.resource)
        elif isinstance(node, Block):
            uses |= _own_uses(node)
    return frozenset(defs), frozenset(uses)


def subtree_accesses(block: Block) -> tuple[frozenset, frozenset]:
    """Union of accesses over a statement and everything nested in it."""
    defs: set = set()
    uses: set = set()
    for _, stmt in iter_statements([block]):
        d, u = statement_accesses(stmt)
        defs |= d
        uses |= u
    return frozenset(defs), frozenset(uses)


def contains_timing(blocks: list[Block]) -> bool:
    return any(opcodes.is_timing(b.opcode) for _, b in iter_statements(blocks))


def contains_terminator(blocks: list[Block]) -> bool:
    return any(b.is_terminator for _, b in iter_statements(blocks))


def defines_any(defs, uses) -> bool:
    return any(conflicts(d, u) for d in defs for u in uses)


# -- control flow graph ----------------------------------------------------

class _Cfg:
    def __init__(self, body: list[Block]):
        self.nodes = list(iter_statements(body))
        self.index = {path: i for i, (path, _) in enumerate(self.nodes)}
        self.succ: list[set[int]] = [set() for _ in self.nodes]
        self.entry = self._link(body, (), frozenset())

    def _link(self, body, prefix, follow):
        nxt = follow
        for i in reversed(range(len(body))):
            nxt = self._stmt(body[i], prefix + (i,), nxt)
        return nxt

    def _stmt(self, b: Block, path, follow):
        idx = self.index[path]
        names = b.stack_names()
        stacks = [(path + (s,), b.stacks[n]) for s, n in enumerate(names)]
        op = b.opcode
        if b.is_terminator:
            succ = frozenset()
        elif op == "control_if":
            succ = frozenset(follow)
            for prefix, body in stacks:
                succ |= self._link(body, prefix, follow)
        elif op == "control_if_else":
            succ = frozenset()
            for prefix, body in stacks:
                succ |= self._link(body, prefix, follow)
        elif op == "control_forever":
            succ = frozenset()
            for prefix, body in stacks:
                succ |= self._link(body, prefix, frozenset({idx}))
        elif stacks:
            # repeat, repeat-until, and unknown C-blocks behave as loops
            succ = frozenset(follow)
            for prefix, body in stacks:
                succ |= self._link(body, prefix, frozenset({idx}) | follow)
        else:
            succ = frozenset(follow)
        self.succ[idx] = set(succ)
        return frozenset({idx})

    def reachable(self, start: int) -> set[int]:
        seen: set[int] = set()
        todo = deque(self.succ[start])
        while todo:
            n = todo.popleft()
            if n in seen:
                continue
            seen.add(n)
            todo.extend(self.succ[n])
        return seen


# -- graph -----------------------------------------------------------------

@dataclass
class DependenceGraph:
    nodes: list[tuple[tuple, Block]]
    edges: set = field(default_factory=set)

    def __post_init__(self):
        self.index = {path: i for i, (path, _) in enumerate(self.nodes)}

    def of_kind(self, kinds: str) -> "DependenceGraph":
        return DependenceGraph(self.nodes, {e for e in self.edges if e[2] in kinds})

    def pairs(self, kinds: str = "CDT") -> set[tuple[int, int]]:
        return {(e[0], e[1]) for e in self.edges if e[2] in kinds}

    def subtree(self, path: tuple) -> set[int]:
        n = len(path)
        return {i for i, (p, _) in enumerate(self.nodes) if p[:n] == path}

    def linked(self, a: set[int], b: set[int], kinds: str = "CDT") -> bool:
        """Whether any edge of ``kinds`` connects the two node sets, either way."""
        for src, dst, kind, _ in self.edges:
            if kind not in kinds:
                continue
            if (src in a and dst in b) or (src in b and dst in a):
                return True
        return False

    def to_dot(self, name: str = "script") -> str:
        lines = [f'digraph "{name}" {{']
        for i, (_, b) in enumerate(self.nodes):
            lines.append(f'  n{i} [label="{b.opcode} #{i}"];')
        for src, dst, kind, label in sorted(self.edges):
            text = kind if not label else f"{kind} {label}"
            lines.append(f'  n{src} -> n{dst} [label="{text}"];')
        lines.append("}")
        return "\n".join(lines)


def _body(script) -> list[Block]:
    return script.body if isinstance(script, Script) else script


def control_dependencies(script) -> DependenceGraph:
    """Structural nesting edges plus edges from statements that may stop the script."""
    cfg = _Cfg(_body(script))
    edges = set()
    for i, (path, _) in enumerate(cfg.nodes):
        if len(path) > 1:
            edges.add((cfg.index[path[:-2]], i, "C", ""))
    for i, (_, b) in enumerate(cfg.nodes):
        if contains_terminator([b]) and not b.is_terminator:
            for j in cfg.reachable(i):
                if j != i:
                    edges.add((i, j, "C", "stop"))
    return DependenceGraph(cfg.nodes, edges)


def time_dependencies(script) -> DependenceGraph:
    """Edges from every timing-related statement to every statement that may follow it."""
    cfg = _Cfg(_body(script))
    edges = set()
    for i, (_, b) in enumerate(cfg.nodes):
        if opcodes.is_timing(b.opcode):
            for j in cfg.reachable(i):
                if j != i:
                    edges.add((i, j, "T", ""))
    return DependenceGraph(cfg.nodes, edges)


def data_dependencies(script) -> DependenceGraph:
    """Flow, anti and output edges from a reaching definitions/uses fixpoint."""
    cfg = _Cfg(_body(script))
    n = len(cfg.nodes)
    acc = [statement_accesses(b) for _, b in cfg.nodes]
    preds: list[set[int]] = [set() for _ in range(n)]
    for i, ss in enumerate(cfg.succ):
        for j in ss:
            preds[j].add(i)
    gen = []
    kill = []
    for i, (defs, uses) in enumerate(acc):
        gen.append(
            frozenset((i, r, "d") for r in defs) | frozenset((i, r, "u") for r in uses)
        )
        kill.append(frozenset(r for r in defs if r != ANY))
    out: list[frozenset] = [frozenset()] * n
    changed = True
    while changed:
        changed = False
        for i in range(n):
            inn = frozenset().union(*(out[p] for p in preds[i])) if preds[i] else frozenset()
            new = gen[i] | frozenset(f for f in inn if f[1] not in kill[i])
            if new != out[i]:
                out[i] = new
                changed = True
    edges = set()
    for i in range(n):
        inn = frozenset().union(*(out[p] for p in preds[i])) if preds[i] else frozenset()
        defs, uses = acc[i]
        for src, res, kind in inn:
            if src == i:
                continue
            for d in defs:
                if conflicts(res, d):
                    label = "output" if kind == "d" else "anti"
                    edges.add((src, i, "D", f"{label}:{_fmt(res)}"))
            if kind == "d":
                for u in uses:
                    if conflicts(res, u):
                        edges.add((src, i, "D", f"flow:{_fmt(res)}"))
    return DependenceGraph(cfg.nodes, edges)


def _fmt(res: tuple) -> str:
    return ".".join(str(x) for x in res)


def analyze(script) -> DependenceGraph:
    """All three kinds of dependence in one graph."""
    c = control_dependencies(script)
    d = data_dependencies(script)
    t = time_dependencies(script)
    return DependenceGraph(c.nodes, c.edges | d.edges | t.edges)


# -- queries ---------------------------------------------------------------

def _identity_edges(graph: DependenceGraph, remap: dict[int, int]) -> set:
    out = set()
    for src, dst, kind, label in graph.edges:
        a = id(graph.nodes[src][1])
        b = id(graph.nodes[dst][1])
        out.add((remap.get(a, a), remap.get(b, b), kind, label))
    return out


def swapped_body(body: list[Block], path: tuple) -> tuple[list[Block], dict[int, int]]:
    """Copy of ``body`` with the statement at ``path`` swapped with its next sibling.

    Only the containers along the path are copied; the returned map sends ids of
    copied containers back to their originals.
    """
    import copy as _copy

    remap: dict[int, int] = {}

    def rec(lst: list[Block], rest: tuple) -> list[Block]:
        lst = list(lst)
        i = rest[0]
        if len(rest) == 1:
            lst[i], lst[i + 1] = lst[i + 1], lst[i]
            return lst
        b = lst[i]
        dup = _copy.copy(b)
        dup.stacks = dict(b.stacks)
        name = b.stack_names()[rest[1]]
        dup.stacks[name] = rec(b.stacks[name], rest[2:])
        remap[id(dup)] = id(b)
        lst[i] = dup
        return lst

    return rec(body, path), remap


def can_reorder(script, i: tuple, j: tuple, graph: DependenceGraph | None = None) -> bool:
    """Whether adjacent siblings ``i`` and ``j`` may be swapped.

    Requires no edge between them in either direction and that the swap adds or
    removes no edge anywhere else in the script.
    """
    if i[:-1] != j[:-1] or abs(i[-1] - j[-1]) != 1:
        raise ValueError("statements are not adjacent siblings")
    if j[-1] < i[-1]:
        i, j = j, i
    body = _body(script)
    graph = graph or analyze(body)
    if graph.linked(graph.subtree(i), graph.subtree(j)):
        return False
    swapped, remap = swapped_body(body, i)
    after = analyze(swapped)
    return _identity_edges(graph, {}) == _identity_edges(after, remap)
