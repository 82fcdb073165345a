"""Terse constructors for Scratch blocks and programs.

Used by the transformation appliers and for crafting sample projects::

    p = program(sprite("Cat", script(when_flag(), forever(say("Hi"), move(10)))))
"""
from __future__ import annotations

from .scratch_ast import Actor, Block, Input, Literal, Program, Script, VarRef, iter_tree

_STOP_MUTATION_FALSE = {"tagName": "mutation", "children": [], "hasnext": "false"}
_STOP_MUTATION_TRUE = {"tagName": "mutation", "children": [], "hasnext": "true"}


def lit(value, type_: int = 4) -> Input:
    return Input(shadow=Literal(type_, str(value)))


def num(value) -> Input:
    return lit(value, 4)


def whole(value) -> Input:
    return lit(value, 6)


def text(value) -> Input:
    return lit(value, 10)


def slot(node, default: Literal | None = None) -> Input:
    """Put ``node`` into an input; plain values become number literals."""
    if isinstance(node, Input):
        return node
    if isinstance(node, (Block, VarRef)):
        return Input(block=node, shadow=default)
    if isinstance(node, Literal):
        return Input(shadow=node)
    if isinstance(node, str):
        return text(node)
    return num(node)


def menu(opcode: str, field_name: str, value: str) -> Input:
    return Input(shadow=Block(opcode, fields={field_name: [value, None]}, shadow=True))


def blk(opcode: str, inputs: dict | None = None, fields: dict | None = None, **stacks) -> Block:
    return Block(
        opcode,
        inputs={k: slot(v) for k, v in (inputs or {}).items()},
        fields=dict(fields or {}),
        stacks={k: list(v) for k, v in stacks.items()},
    )


# hats

def when_flag() -> Block:
    return Block("event_whenflagclicked")


def when_key(key: str) -> Block:
    return Block("event_whenkeypressed", fields={"KEY_OPTION": [key, None]})


def when_clicked() -> Block:
    return Block("event_whenthisspriteclicked")


def when_received(message: str) -> Block:
    return Block(
        "event_whenbroadcastreceived", fields={"BROADCAST_OPTION": [message, f"msg-{message}"]}
    )


# statements

def say(message, secs=None) -> Block:
    if secs is None:
        return blk("looks_say", {"MESSAGE": slot(message if not isinstance(message, (int, float)) else str(message))})
    return blk("looks_sayforsecs", {"MESSAGE": slot(message), "SECS": num(secs)})


def think(message) -> Block:
    return blk("looks_think", {"MESSAGE": slot(message)})


def move(steps) -> Block:
    return blk("motion_movesteps", {"STEPS": slot(steps)})


def turn(degrees) -> Block:
    return blk("motion_turnright", {"DEGREES": slot(degrees)})


def turn_left(degrees) -> Block:
    return blk("motion_turnleft", {"DEGREES": slot(degrees)})


def goto_xy(x, y) -> Block:
    return blk("motion_gotoxy", {"X": slot(x), "Y": slot(y)})


def change_x(dx) -> Block:
    return blk("motion_changexby", {"DX": slot(dx)})


def change_y(dy) -> Block:
    return blk("motion_changeyby", {"DY": slot(dy)})


def bounce() -> Block:
    return Block("motion_ifonedgebounce")


def switch_costume(name: str) -> Block:
    return Block("looks_switchcostumeto", inputs={"COSTUME": menu("looks_costume", "COSTUME", name)})


def next_costume() -> Block:
    return Block("looks_nextcostume")


def switch_backdrop(name: str) -> Block:
    return Block(
        "looks_switchbackdropto", inputs={"BACKDROP": menu("looks_backdrops", "BACKDROP", name)}
    )


def change_size(delta) -> Block:
    return blk("looks_changesizeby", {"CHANGE": slot(delta)})


def set_size(value) -> Block:
    return blk("looks_setsizeto", {"SIZE": slot(value)})


def show() -> Block:
    return Block("looks_show")


def hide() -> Block:
    return Block("looks_hide")


def play_sound(name: str, until_done: bool = False) -> Block:
    opcode = "sound_playuntildone" if until_done else "sound_play"
    return Block(opcode, inputs={"SOUND_MENU": menu("sound_sounds_menu", "SOUND_MENU", name)})


def wait(secs) -> Block:
    return blk("control_wait", {"DURATION": slot(secs)})


def wait_until(cond) -> Block:
    return Block("control_wait_until", inputs=_cond(cond))


def broadcast(message: str, and_wait: bool = False) -> Block:
    opcode = "event_broadcastandwait" if and_wait else "event_broadcast"
    return Block(opcode, inputs={"BROADCAST_INPUT": Input(shadow=Literal(11, message, f"msg-{message}"))})


def set_var(name: str, value) -> Block:
    return Block(
        "data_setvariableto",
        inputs={"VALUE": slot(value if not isinstance(value, (int, float)) else text(value))},
        fields={"VARIABLE": [name, f"var-{name}"]},
    )


def change_var(name: str, value) -> Block:
    return Block(
        "data_changevariableby",
        inputs={"VALUE": slot(value)},
        fields={"VARIABLE": [name, f"var-{name}"]},
    )


def add_to_list(name: str, item) -> Block:
    return Block(
        "data_addtolist", inputs={"ITEM": slot(item)}, fields={"LIST": [name, f"list-{name}"]}
    )


def stop(option: str = "this script") -> Block:
    mutation = _STOP_MUTATION_TRUE if option == "other scripts in sprite" else _STOP_MUTATION_FALSE
    return Block("control_stop", fields={"STOP_OPTION": [option, None]}, mutation=dict(mutation))


def _cond(cond) -> dict:
    return {} if cond is None else {"CONDITION": Input(block=cond)}


def forever(*body: Block) -> Block:
    return Block("control_forever", stacks={"SUBSTACK": list(body)})


def repeat(times, *body: Block) -> Block:
    return Block(
        "control_repeat", inputs={"TIMES": slot(times) if not isinstance(times, int) else whole(times)},
        stacks={"SUBSTACK": list(body)},
    )


def repeat_until(cond, *body: Block) -> Block:
    return Block("control_repeat_until", inputs=_cond(cond), stacks={"SUBSTACK": list(body)})


def if_(cond, *body: Block) -> Block:
    return Block("control_if", inputs=_cond(cond), stacks={"SUBSTACK": list(body)})


def if_else(cond, then: list[Block], otherwise: list[Block]) -> Block:
    return Block(
        "control_if_else",
        inputs=_cond(cond),
        stacks={"SUBSTACK": list(then), "SUBSTACK2": list(otherwise)},
    )


# reporters

def var(name: str) -> VarRef:
    return VarRef(12, name, f"var-{name}")


def key_pressed(key: str) -> Block:
    return Block(
        "sensing_keypressed", inputs={"KEY_OPTION": menu("sensing_keyoptions", "KEY_OPTION", key)}
    )


def touching(target: str) -> Block:
    return Block(
        "sensing_touchingobject",
        inputs={
            "TOUCHINGOBJECTMENU": menu("sensing_touchingobjectmenu", "TOUCHINGOBJECTMENU", target)
        },
    )


def mouse_down() -> Block:
    return Block("sensing_mousedown")


def x_position() -> Block:
    return Block("motion_xposition")


def _binary(opcode, a, b, names=("OPERAND1", "OPERAND2")) -> Block:
    inputs = {}
    for name, value in zip(names, (a, b)):
        if value is None:
            continue
        inputs[name] = Input(block=value) if isinstance(value, (Block, VarRef)) else slot(value)
    return Block(opcode, inputs=inputs)


def and_(a, b) -> Block:
    return _binary("operator_and", a, b)


def or_(a, b) -> Block:
    return _binary("operator_or", a, b)


def not_(a) -> Block:
    return Block("operator_not", inputs={} if a is None else {"OPERAND": Input(block=a)})


def equals(a, b) -> Block:
    return _binary("operator_equals", _txt(a), _txt(b))


def gt(a, b) -> Block:
    return _binary("operator_gt", _txt(a), _txt(b))


def lt(a, b) -> Block:
    return _binary("operator_lt", _txt(a), _txt(b))


def add(a, b) -> Block:
    return _binary("operator_add", a, b, ("NUM1", "NUM2"))


def _txt(v):
    return text(v) if isinstance(v, (int, float)) else v


# containers

def script(hat: Block, *body: Block) -> Script:
    return Script(hat, list(body))


def sprite(name: str, *scripts: Script, **raw) -> Actor:
    return Actor(name, False, list(scripts), raw=dict(raw))


def program(*sprites: Actor, stage_scripts: tuple[Script, ...] = ()) -> Program:
    """Assemble a program and declare every variable and list it references."""
    stage = Actor("Stage", True, list(stage_scripts))
    p = Program(stage, list(sprites))
    for actor in p.actors:
        for s in actor.scripts:
            for root in [s.hat, *s.body]:
                for n in iter_tree(root):
                    _declare(stage, n)
    return p


def _declare(stage: Actor, node) -> None:
    if isinstance(node, VarRef):
        target = stage.variables if node.type == 12 else stage.lists
        target.setdefault(node.id, [node.name, 0 if node.type == 12 else []])
    elif isinstance(node, Block):
        f = node.fields.get("VARIABLE")
        if f and len(f) > 1 and f[1]:
            stage.variables.setdefault(f[1], [f[0], 0])
        f = node.fields.get("LIST")
        if f and len(f) > 1 and f[1]:
            stage.lists.setdefault(f[1], [f[0], []])
        f = node.fields.get("BROADCAST_OPTION")
        if f and len(f) > 1 and f[1]:
            stage.broadcasts.setdefault(f[1], f[0])
        for s in node.inputs.values():
            if isinstance(s.shadow, Literal) and s.shadow.type == 11 and s.shadow.id:
                stage.broadcasts.setdefault(s.shadow.id, s.shadow.value)
