"""In-memory Scratch program representation.

Programs are treated as immutable once built: transformations copy the
scripts they touch and share the rest. Block ids from the source file are not
kept; ``uid`` is a process-local tag used only to follow statements through
transformations and never affects equality or serialization.
"""
from __future__ import annotations

import copy
import itertools
import json
from dataclasses import dataclass, field
from typing import Iterator, Union

from . import opcodes

_uids = itertools.count(1)


def next_uid() -> int:
    return next(_uids)


@dataclass(eq=False)
class Literal:
    """A typed-in slot value. Not a block: it is neither counted nor categorized."""

    type: int
    value: object
    id: str | None = None

    def key(self):
        return ("lit", self.type, str(self.value), self.id)


@dataclass(eq=False)
class VarRef:
    """A variable or list reporter in compressed sb3 form."""

    type: int  # 12 variable, 13 list
    name: str
    id: str
    uid: int = field(default_factory=next_uid)
    origin: int | None = None

    def key(self):
        return ("var", self.type, self.name, self.id)

    @property
    def resource(self) -> tuple:
        return ("var" if self.type == 12 else "list", self.id or self.name)


@dataclass(eq=False)
class Input:
    """One input slot; ``block`` obscures ``shadow`` when both are set."""

    block: "Node | None" = None
    shadow: "Node | None" = None

    @property
    def visible(self) -> "Node | None":
        return self.block if self.block is not None else self.shadow

    def key(self):
        return (
            None if self.block is None else self.block.key(),
            None if self.shadow is None else self.shadow.key(),
        )


@dataclass(eq=False)
class Block:
    opcode: str
    inputs: dict[str, Input] = field(default_factory=dict)
    fields: dict[str, list] = field(default_factory=dict)
    stacks: dict[str, list["Block"]] = field(default_factory=dict)
    shadow: bool = False
    mutation: dict | None = None
    comment: str | None = None
    uid: int = field(default_factory=next_uid)
    origin: int | None = None

    @property
    def category(self) -> str:
        if self.shadow:
            return "menu"
        return opcodes.category_of(self.opcode)

    @property
    def is_terminator(self) -> bool:
        if self.opcode == "control_delete_this_clone":
            return True
        if self.opcode == "control_stop":
            option = self.fields.get("STOP_OPTION", [None])[0]
            return option in opcodes.TERMINATING_STOP_OPTIONS
        return False

    @property
    def is_cap(self) -> bool:
        return self.is_terminator or self.opcode == "control_forever"

    def field_value(self, name: str):
        f = self.fields.get(name)
        return f[0] if f else None

    def get(self, name: str) -> "Node | None":
        slot = self.inputs.get(name)
        return None if slot is None else slot.visible

    def stack(self, name: str = "SUBSTACK") -> list["Block"]:
        return self.stacks.get(name, [])

    def stack_names(self) -> list[str]:
        return sorted(self.stacks)

    def key(self):
        inputs = tuple(
            sorted(
                (name, slot.key())
                for name, slot in self.inputs.items()
                if slot.block is not None or slot.shadow is not None
            )
        )
        fields = tuple(sorted((k, tuple(v)) for k, v in self.fields.items()))
        stacks = tuple(
            (name, tuple(b.key() for b in body))
            for name, body in sorted(self.stacks.items())
            if body
        )
        mutation = (
            json.dumps(self.mutation, sort_keys=True) if self.mutation is not None else None
        )
        return ("blk", self.opcode, self.shadow, inputs, fields, stacks, mutation)

    def clone(self, fresh: bool = True) -> "Block":
        """Deep copy. With ``fresh`` the copy gets new uids that remember their source."""
        return copy_tree(self, fresh)


Node = Union[Block, Literal, VarRef]


@dataclass(eq=False)
class Script:
    hat: Block
    body: list[Block] = field(default_factory=list)
    script_id: str | None = None
    _key: tuple | None = field(default=None, init=False, repr=False)

    def key(self):
        if self._key is None:
            self._key = (self.hat.key(), tuple(b.key() for b in self.body))
        return self._key

    @property
    def opaque(self) -> bool:
        return self.hat.opcode == "procedures_definition"

    def copy(self) -> "Script":
        return Script(copy_tree(self.hat), [copy_tree(b) for b in self.body], self.script_id)


@dataclass(eq=False)
class Actor:
    name: str
    is_stage: bool = False
    scripts: list[Script] = field(default_factory=list)
    variables: dict[str, list] = field(default_factory=dict)
    lists: dict[str, list] = field(default_factory=dict)
    broadcasts: dict[str, str] = field(default_factory=dict)
    # stacks without a hat and compressed top-level reporters, kept verbatim
    orphans: list = field(default_factory=list)
    comments: dict[str, dict] = field(default_factory=dict)
    raw: dict = field(default_factory=dict)

    def key(self):
        orphans = tuple(
            tuple(b.key() for b in o) if isinstance(o, list) and o and isinstance(o[0], Block)
            else json.dumps(o, sort_keys=True)
            for o in self.orphans
        )
        return (
            "actor",
            self.name,
            self.is_stage,
            tuple(s.key() for s in self.scripts),
            tuple(sorted((k, v[0]) for k, v in self.variables.items())),
            tuple(sorted((k, v[0]) for k, v in self.lists.items())),
            orphans,
        )

    def shallow(self) -> "Actor":
        """Copy sharing scripts; callers replace scripts they change."""
        dup = copy.copy(self)
        dup.scripts = list(self.scripts)
        return dup


@dataclass(eq=False)
class Program:
    stage: Actor
    sprites: list[Actor] = field(default_factory=list)
    meta: dict = field(default_factory=dict)
    assets: dict[str, bytes] | None = None
    source_format: str = "json"
    warnings: list[str] = field(default_factory=list)

    @property
    def actors(self) -> list[Actor]:
        return [self.stage, *self.sprites]

    def key(self):
        return tuple(a.key() for a in self.actors)

    def scripts(self) -> Iterator[tuple[int, int, Script]]:
        for ai, actor in enumerate(self.actors):
            for si, script in enumerate(actor.scripts):
                yield ai, si, script

    def with_actor(self, index: int, actor: Actor) -> "Program":
        dup = copy.copy(self)
        if index == 0:
            dup.stage = actor
        else:
            dup.sprites = list(self.sprites)
            dup.sprites[index - 1] = actor
        return dup

    def validate(self) -> None:
        if not self.stage.is_stage:
            raise ValueError("program stage is not flagged as stage")
        names = [s.name for s in self.sprites]
        if any(s.is_stage for s in self.sprites):
            raise ValueError("more than one stage")
        if len(set(names)) != len(names):
            raise ValueError("sprite names are not unique")


def copy_tree(node, fresh: bool = False):
    """Copy a block tree. Literals and mutation records are never modified in
    place, so they are shared; everything else is new.

    With ``fresh`` blocks and variable references get new uids that remember
    their source, and block comments are dropped.
    """
    if isinstance(node, Block):
        dup = Block.__new__(Block)
        dup.opcode = node.opcode
        dup.inputs = {
            k: Input(copy_tree(v.block, fresh), copy_tree(v.shadow, fresh)) for k, v in node.inputs.items()
        }
        dup.fields = {k: list(v) for k, v in node.fields.items()}
        dup.stacks = {k: [copy_tree(c, fresh) for c in v] for k, v in node.stacks.items()}
        dup.shadow = node.shadow
        dup.mutation = node.mutation
        if fresh:
            dup.comment = None
            dup.uid = next_uid()
            dup.origin = node.origin if node.origin is not None else node.uid
        else:
            dup.comment = node.comment
            dup.uid = node.uid
            dup.origin = node.origin
        return dup
    if isinstance(node, VarRef):
        if not fresh:
            return VarRef(node.type, node.name, node.id, node.uid, node.origin)
        return VarRef(node.type, node.name, node.id, next_uid(), node.origin if node.origin is not None else node.uid)
    return node


def deep_copy(program: Program) -> Program:
    """Structurally equal copy sharing no mutable state (assets are immutable bytes)."""
    memo = {}
    if program.assets is not None:
        memo[id(program.assets)] = dict(program.assets)
    return copy.deepcopy(program, memo)


def structural_eq(a, b) -> bool:
    """Isomorphism ignoring block ids and canvas coordinates."""
    return a.key() == b.key()


def iter_tree(node) -> Iterator:
    """Pre-order walk over a block and everything under it."""
    if node is None:
        return
    yield node
    if isinstance(node, Block):
        for name in sorted(node.inputs):
            slot = node.inputs[name]
            yield from iter_tree(slot.block)
            yield from iter_tree(slot.shadow)
        for name in node.stack_names():
            for child in node.stacks[name]:
                yield from iter_tree(child)


def iter_visible(node) -> Iterator:
    """Like :func:`iter_tree` but skips shadows hidden under a reporter."""
    if node is None:
        return
    yield node
    if isinstance(node, Block):
        for name in sorted(node.inputs):
            yield from iter_visible(node.inputs[name].visible)
        for name in node.stack_names():
            for child in node.stacks[name]:
                yield from iter_visible(child)


def iter_expressions(block: Block) -> Iterator:
    """Visible expression nodes under ``block``, not descending into substacks."""
    for name in sorted(block.inputs):
        yield from _iter_expr(block.inputs[name].visible)


def _iter_expr(node):
    if node is None:
        return
    yield node
    if isinstance(node, Block):
        for name in sorted(node.inputs):
            yield from _iter_expr(node.inputs[name].visible)


def iter_statements(body: list[Block], prefix: tuple = ()) -> Iterator[tuple[tuple, Block]]:
    """Yield ``(path, block)`` in pre-order. Paths alternate index, substack, index..."""
    for i, stmt in enumerate(body):
        path = prefix + (i,)
        yield path, stmt
        for s, name in enumerate(stmt.stack_names()):
            yield from iter_statements(stmt.stacks[name], path + (s,))


def statement_at(script: Script, path: tuple) -> Block:
    body = script.body
    stmt = None
    for depth in range(0, len(path), 2):
        stmt = body[path[depth]]
        if depth + 1 < len(path):
            body = stmt.stacks[stmt.stack_names()[path[depth + 1]]]
    if stmt is None:
        raise IndexError(path)
    return stmt


def body_at(script: Script, list_path: tuple) -> list[Block]:
    """Statement list addressed by ``list_path`` (``()`` is the script body)."""
    body = script.body
    for depth in range(0, len(list_path), 2):
        stmt = body[list_path[depth]]
        body = stmt.stacks[stmt.stack_names()[list_path[depth + 1]]]
    return body


def block_size(node) -> int:
    """Number of blocks under ``node`` (drop-downs count, literals do not)."""
    total = 0
    for n in iter_visible(node):
        if isinstance(n, VarRef):
            total += 1
        elif isinstance(n, Block):
            total += 1
            if not n.shadow and n.opcode not in ("data_variable", "data_listcontents"):
                total += len(n.fields)
    return total


def count_blocks(scope) -> int:
    """Block count of a program or a script; orphaned stacks are not counted."""
    if isinstance(scope, Program):
        return sum(count_blocks(s) for _, _, s in scope.scripts())
    if isinstance(scope, Script):
        return block_size(scope.hat) + sum(block_size(b) for b in scope.body)
    return block_size(scope)


def block_categories(script: Script) -> list[str]:
    """Category of every counted block in ``script``; drop-down fields are menus."""
    out: list[str] = []
    for root in [script.hat, *script.body]:
        for n in iter_visible(root):
            if isinstance(n, VarRef):
                out.append("variables")
            elif isinstance(n, Block):
                out.append(n.category)
                if not n.shadow and n.opcode not in ("data_variable", "data_listcontents"):
                    out.extend("menu" for _ in n.fields)
    return out
