"""Reading and writing Scratch 3 projects (``.sb3`` archives or bare ``project.json``)."""
from __future__ import annotations

import copy
import io
import json
import logging
import os
import zipfile
from itertools import count

from . import opcodes
from .scratch_ast import Actor, Block, Input, Literal, Program, Script, VarRef, iter_tree

logger = logging.getLogger(__name__)

MANIFEST = "project.json"
_BLOCK_KEYS = ("opcode", "next", "parent", "inputs", "fields", "topLevel")
_ACTOR_KEYS = ("name", "isStage", "variables", "lists", "broadcasts", "blocks", "comments")


class Sb3Error(Exception):
    """Base class for project I/O errors."""


class MalformedArchive(Sb3Error):
    pass


class SchemaError(Sb3Error):
    def __init__(self, message: str, path: str = ""):
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path


class UnsupportedVersion(Sb3Error):
    pass


class SerializationError(Sb3Error):
    pass


# -- parsing ---------------------------------------------------------------

def load(path: str | os.PathLike) -> Program:
    """Parse a ``.sb3`` archive or a bare ``project.json`` from disk."""
    with open(path, "rb") as fh:
        data = fh.read()
    return loads(data)


def loads(data: bytes | str | dict) -> Program:
    """Parse archive bytes, manifest text, or an already-decoded manifest."""
    if isinstance(data, dict):
        return parse_manifest(data)
    if isinstance(data, bytes) and data[:2] == b"PK":
        return _parse_archive(data)
    try:
        manifest = json.loads(data)
    except (ValueError, UnicodeDecodeError) as exc:
        raise MalformedArchive(f"neither a ZIP archive nor JSON: {exc}") from None
    return parse_manifest(manifest)


def _parse_archive(data: bytes) -> Program:
    try:
        zf = zipfile.ZipFile(io.BytesIO(data))
    except zipfile.BadZipFile as exc:
        raise MalformedArchive(str(exc)) from None
    with zf:
        names = zf.namelist()
        if MANIFEST not in names:
            raise MalformedArchive("archive has no project.json")
        try:
            manifest = json.loads(zf.read(MANIFEST).decode("utf-8"))
        except ValueError as exc:
            raise MalformedArchive(f"project.json is not valid JSON: {exc}") from None
        assets = {name: zf.read(name) for name in names if name != MANIFEST}
    program = parse_manifest(manifest)
    program.assets = assets
    program.source_format = "sb3"
    return program


def parse_manifest(manifest: dict) -> Program:
    if not isinstance(manifest, dict):
        raise SchemaError("manifest is not a JSON object")
    if "targets" not in manifest:
        if "objName" in manifest or "children" in manifest:
            raise UnsupportedVersion("Scratch 2 project (sb2) is not supported")
        raise UnsupportedVersion("manifest has no 'targets' array")
    targets = manifest["targets"]
    if not isinstance(targets, list):
        raise SchemaError("'targets' is not a list", "$.targets")
    stages = [t for t in targets if isinstance(t, dict) and t.get("isStage")]
    if len(stages) != 1:
        raise SchemaError(f"expected exactly one stage target, found {len(stages)}", "$.targets")
    warnings: list[str] = []
    actors = [_parse_target(t, f"$.targets[{i}]", warnings) for i, t in enumerate(targets)]
    stage_index = next(i for i, t in enumerate(targets) if t.get("isStage"))
    stage = actors[stage_index]
    sprites = [a for i, a in enumerate(actors) if i != stage_index]
    meta = {k: copy.deepcopy(v) for k, v in manifest.items() if k != "targets"}
    meta["_stage_index"] = stage_index
    program = Program(stage, sprites, meta, None, "json", warnings)
    _declare_missing(program, warnings)
    for w in warnings:
        logger.warning(w)
    return program


def _parse_target(target: dict, path: str, warnings: list[str]) -> Actor:
    if not isinstance(target, dict):
        raise SchemaError("target is not an object", path)
    for key in ("name", "isStage"):
        if key not in target:
            raise SchemaError(f"missing key {key!r}", path)
    blocks = target.get("blocks", {})
    if not isinstance(blocks, dict):
        raise SchemaError("'blocks' is not an object", path + ".blocks")
    parser = _TargetParser(blocks, path + ".blocks")
    scripts: list[Script] = []
    orphans: list = []
    for bid, rec in blocks.items():
        if isinstance(rec, list):
            orphans.append(copy.deepcopy(rec))
            continue
        if not isinstance(rec, dict):
            raise SchemaError("block record is neither object nor array", f"{path}.blocks.{bid}")
        parser.check(bid, rec)
        if not rec.get("topLevel"):
            continue
        if opcodes.is_hat(rec["opcode"]):
            hat = parser.block(bid)
            body = parser.chain(rec.get("next"))
            scripts.append(Script(hat, body, script_id=bid))
        else:
            stack = parser.chain(bid)
            orphans.append(stack)
            warnings.append(f"{path}: dropped orphaned stack starting at {rec['opcode']}")
    raw = {k: copy.deepcopy(v) for k, v in target.items() if k not in _ACTOR_KEYS}
    return Actor(
        name=target["name"],
        is_stage=bool(target["isStage"]),
        scripts=scripts,
        variables=copy.deepcopy(target.get("variables", {})),
        lists=copy.deepcopy(target.get("lists", {})),
        broadcasts=copy.deepcopy(target.get("broadcasts", {})),
        orphans=orphans,
        comments=copy.deepcopy(target.get("comments", {})),
        raw=raw,
    )


class _TargetParser:
    def __init__(self, blocks: dict, path: str):
        self.blocks = blocks
        self.path = path

    def check(self, bid: str, rec: dict) -> None:
        for key in _BLOCK_KEYS:
            if key not in rec:
                raise SchemaError(f"missing key {key!r}", f"{self.path}.{bid}")

    def record(self, bid: str) -> dict:
        rec = self.blocks.get(bid)
        if not isinstance(rec, dict):
            raise SchemaError(f"dangling block reference {bid!r}", self.path)
        self.check(bid, rec)
        return rec

    def chain(self, bid: str | None) -> list[Block]:
        out = []
        seen = set()
        while bid is not None:
            if bid in seen:
                raise SchemaError(f"cycle in next-chain at {bid!r}", self.path)
            seen.add(bid)
            out.append(self.block(bid))
            bid = self.blocks[bid].get("next")
        return out

    def block(self, bid: str) -> Block:
        rec = self.record(bid)
        opcode = rec["opcode"]
        fields = {k: list(v) for k, v in rec.get("fields", {}).items()}
        b = Block(
            opcode,
            fields=fields,
            shadow=bool(rec.get("shadow", False)),
            mutation=copy.deepcopy(rec.get("mutation")),
            comment=rec.get("comment"),
        )
        for name, value in rec.get("inputs", {}).items():
            where = f"{self.path}.{bid}.inputs.{name}"
            if not isinstance(value, list) or not value:
                raise SchemaError("malformed input", where)
            if name.startswith("SUBSTACK"):
                target = value[1] if len(value) > 1 else None
                b.stacks[name] = self.chain(target) if isinstance(target, str) else []
                continue
            b.inputs[name] = self.input(value, where)
        for name in opcodes.C_STACKS.get(opcode, ()):
            b.stacks.setdefault(name, [])
        return b

    def input(self, value: list, where: str) -> Input:
        kind = value[0]
        first = value[1] if len(value) > 1 else None
        if kind == 1:
            return Input(shadow=self.node(first, where))
        if kind == 2:
            return Input(block=self.node(first, where))
        if kind == 3:
            second = value[2] if len(value) > 2 else None
            return Input(block=self.node(first, where), shadow=self.node(second, where))
        raise SchemaError(f"unknown input kind {kind!r}", where)

    def node(self, value, where: str):
        if value is None:
            return None
        if isinstance(value, str):
            rec = self.record(value)
            prim = opcodes.PRIMITIVE_OPCODES.get(rec["opcode"])
            if prim is not None and rec.get("shadow"):
                type_, fname = prim
                return Literal(type_, rec["fields"][fname][0])
            return self.block(value)
        if isinstance(value, list) and value:
            return _primitive(value, where)
        raise SchemaError("malformed input value", where)


def _primitive(arr: list, where: str):
    code = arr[0]
    if code in (12, 13):
        return VarRef(code, arr[1], arr[2] if len(arr) > 2 else None)
    if code == 11:
        return Literal(11, arr[1], arr[2] if len(arr) > 2 else None)
    if 4 <= code <= 10:
        return Literal(code, arr[1])
    raise SchemaError(f"unknown primitive code {code!r}", where)


def _declare_missing(program: Program, warnings: list[str]) -> None:
    """Auto-declare variables and lists that are referenced but never declared."""
    declared_v = set(program.stage.variables)
    declared_l = set(program.stage.lists)
    for actor in program.sprites:
        declared_v |= set(actor.variables)
        declared_l |= set(actor.lists)
    for actor in program.actors:
        for s in actor.scripts:
            for root in [s.hat, *s.body]:
                for n in iter_tree(root):
                    for kind, ident, name in _var_refs(n):
                        pool, table = (
                            (declared_v, program.stage.variables)
                            if kind == "var"
                            else (declared_l, program.stage.lists)
                        )
                        if ident in pool:
                            continue
                        pool.add(ident)
                        table[ident] = [name, 0 if kind == "var" else []]
                        warnings.append(
                            f"{actor.name}: undeclared {kind} {name!r} auto-declared on stage"
                        )


def _var_refs(node):
    if isinstance(node, VarRef) and node.id:
        yield ("var" if node.type == 12 else "list", node.id, node.name)
    elif isinstance(node, Block):
        for fname, kind in (("VARIABLE", "var"), ("LIST", "list")):
            f = node.fields.get(fname)
            if f and len(f) > 1 and f[1]:
                yield kind, f[1], f[0]


# -- serialization ---------------------------------------------------------

def to_manifest(program: Program, id_seed: int = 0) -> dict:
    """Build the ``project.json`` object; block ids come from a seeded counter."""
    try:
        program.validate()
    except ValueError as exc:
        raise SerializationError(str(exc)) from None
    writer = _Writer(id_seed)
    stage_index = program.meta.get("_stage_index", 0)
    ordered = list(program.sprites)
    ordered.insert(min(stage_index, len(ordered)), program.stage)
    targets = [writer.target(a) for a in ordered]
    manifest = {"targets": targets}
    for k, v in program.meta.items():
        if k != "_stage_index":
            manifest[k] = copy.deepcopy(v)
    manifest.setdefault("meta", {"semver": "3.0.0", "vm": "0.2.0", "agent": "sbrefactor"})
    manifest.setdefault("monitors", [])
    manifest.setdefault("extensions", [])
    return manifest


def dumps(program: Program, fmt: str | None = None, id_seed: int = 0) -> bytes:
    """Serialize to archive bytes (``fmt='sb3'``) or manifest JSON (``'json'``).

    Defaults to the format the program was read from.
    """
    fmt = fmt or program.source_format
    manifest = to_manifest(program, id_seed)
    text = json.dumps(manifest, ensure_ascii=False, separators=(",", ":"))
    if fmt == "json":
        return text.encode("utf-8")
    buf = io.BytesIO()
    with zipfile.ZipFile(buf, "w", zipfile.ZIP_DEFLATED) as zf:
        # fixed timestamps keep the archive bytes reproducible
        info = zipfile.ZipInfo(MANIFEST, date_time=(1980, 1, 1, 0, 0, 0))
        info.compress_type = zipfile.ZIP_DEFLATED
        zf.writestr(info, text.encode("utf-8"))
        for name, data in (program.assets or {}).items():
            zf.writestr(zipfile.ZipInfo(name, date_time=(1980, 1, 1, 0, 0, 0)), data)
    return buf.getvalue()


def dump(program: Program, path: str | os.PathLike, fmt: str | None = None, id_seed: int = 0) -> None:
    with open(path, "wb") as fh:
        fh.write(dumps(program, fmt, id_seed))


class _Writer:
    ROW_HEIGHT = 48
    GAP = 96

    def __init__(self, seed: int):
        self.seed = seed
        self.counter = count()

    def new_id(self) -> str:
        return f"b{self.seed}-{next(self.counter)}"

    def target(self, actor: Actor) -> dict:
        self.blocks: dict = {}
        self.comment_owner: dict[str, str] = {}
        y = 0
        for s in actor.scripts:
            hat_id = self.stack([s.hat, *s.body], None)
            rec = self.blocks[hat_id]
            rec["topLevel"] = True
            rec["x"], rec["y"] = 0, y
            y += self.ROW_HEIGHT * (len(s.body) + 1) + self.GAP
        for orphan in actor.orphans:
            if isinstance(orphan, list) and orphan and isinstance(orphan[0], Block):
                top = self.stack(orphan, None)
                self.blocks[top]["topLevel"] = True
                self.blocks[top]["x"], self.blocks[top]["y"] = 600, y
                y += self.ROW_HEIGHT * len(orphan) + self.GAP
            else:
                self.blocks[self.new_id()] = copy.deepcopy(orphan)
        comments = copy.deepcopy(actor.comments)
        for cid, c in comments.items():
            if isinstance(c, dict) and c.get("blockId") is not None:
                c["blockId"] = self.comment_owner.get(cid)
        out = {"isStage": actor.is_stage, "name": actor.name}
        out["variables"] = copy.deepcopy(actor.variables)
        out["lists"] = copy.deepcopy(actor.lists)
        out["broadcasts"] = copy.deepcopy(actor.broadcasts)
        out["blocks"] = self.blocks
        out["comments"] = comments
        for k, v in actor.raw.items():
            out[k] = copy.deepcopy(v)
        return out

    def stack(self, blocks: list[Block], parent: str | None) -> str:
        ids = [self.new_id() for _ in blocks]
        for i, (b, bid) in enumerate(zip(blocks, ids)):
            prev = parent if i == 0 else ids[i - 1]
            nxt = ids[i + 1] if i + 1 < len(ids) else None
            self.block(b, bid, prev, nxt)
        return ids[0]

    def block(self, b: Block, bid: str, parent: str | None, nxt: str | None) -> None:
        rec = {
            "opcode": b.opcode,
            "next": nxt,
            "parent": parent,
            "inputs": {},
            "fields": {k: list(v) for k, v in b.fields.items()},
            "shadow": b.shadow,
            "topLevel": False,
        }
        self.blocks[bid] = rec
        for name in sorted(b.inputs):
            rec["inputs"][name] = self.input(b.inputs[name], bid)
        for name in b.stack_names():
            body = b.stacks[name]
            if body:
                rec["inputs"][name] = [2, self.stack(body, bid)]
        if b.mutation is not None:
            rec["mutation"] = copy.deepcopy(b.mutation)
        if b.comment is not None and b.comment not in self.comment_owner:
            self.comment_owner[b.comment] = bid
            rec["comment"] = b.comment

    def input(self, slot: Input, parent: str) -> list:
        if slot.block is None:
            return [1, self.node(slot.shadow, parent)]
        if slot.shadow is None:
            return [2, self.node(slot.block, parent)]
        return [3, self.node(slot.block, parent), self.node(slot.shadow, parent)]

    def node(self, n, parent: str):
        if n is None:
            return None
        if isinstance(n, Literal):
            if n.type == 11:
                return [11, n.value, n.id]
            return [n.type, n.value]
        if isinstance(n, VarRef):
            return [n.type, n.name, n.id]
        bid = self.new_id()
        self.block(n, bid, parent, None)
        return bid
