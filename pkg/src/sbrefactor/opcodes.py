"""Opcode table for Scratch 3 blocks.

Every opcode maps to a palette category, a shape, and a def/use signature
over resources. The dependence analysis and the metrics both read from here,
so this is the single place to edit when adding blocks.

Resources are plain tuples:

    ("var", id)               a variable
    ("list", id)              a list
    ("attr", actor, name)     one of the five sprite attributes
    ("state", actor, name)    coarse per-actor state (pen, sound, effects, ...)
    ("msg", name)             a broadcast message
    ("answer",), ("timer",)   global sensing state
    ("*",)                    anything; conflicts with every resource

``actor`` is ``"self"`` for the script's owner and ``"_stage_"`` for the stage.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

logger = logging.getLogger(__name__)

CATEGORIES = (
    "motion",
    "looks",
    "sound",
    "control",
    "sensing",
    "operators",
    "variables",
    "events",
    "menu",
    "other",
)

ATTRIBUTES = ("position", "rotation", "costume", "size", "visibility")

ANY = ("*",)


@dataclass(frozen=True)
class OpInfo:
    category: str
    shape: str  # hat | stack | cap | c | reporter | boolean | menu
    defs: tuple[str, ...] = ()
    uses: tuple[str, ...] = ()
    timing: bool = False


_SENSE_SELF = ("position", "rotation", "costume", "size", "visibility")
_PEN_DEFS = ("position", "pen")


def _op(category, shape, defs=(), uses=(), timing=False):
    return OpInfo(category, shape, tuple(defs), tuple(uses), timing)


OPCODES: dict[str, OpInfo] = {
    # motion
    # movesteps deliberately reads position only, not rotation: turn/move
    # pairs are reorderable as observed in the reference runs.
    "motion_movesteps": _op("motion", "stack", _PEN_DEFS, ("position",)),
    "motion_turnright": _op("motion", "stack", ("rotation",), ("rotation",)),
    "motion_turnleft": _op("motion", "stack", ("rotation",), ("rotation",)),
    "motion_goto": _op("motion", "stack", _PEN_DEFS),
    "motion_gotoxy": _op("motion", "stack", _PEN_DEFS),
    "motion_glideto": _op("motion", "stack", _PEN_DEFS, ("position",), True),
    "motion_glidesecstoxy": _op("motion", "stack", _PEN_DEFS, ("position",), True),
    "motion_pointindirection": _op("motion", "stack", ("rotation",)),
    "motion_pointtowards": _op("motion", "stack", ("rotation",), ("position",)),
    "motion_changexby": _op("motion", "stack", _PEN_DEFS, ("position",)),
    "motion_setx": _op("motion", "stack", _PEN_DEFS, ("position",)),
    "motion_changeyby": _op("motion", "stack", _PEN_DEFS, ("position",)),
    "motion_sety": _op("motion", "stack", _PEN_DEFS, ("position",)),
    "motion_ifonedgebounce": _op(
        "motion", "stack", ("position", "rotation", "pen"), _SENSE_SELF
    ),
    "motion_setrotationstyle": _op("motion", "stack", ("rotation",)),
    "motion_xposition": _op("motion", "reporter", (), ("position",)),
    "motion_yposition": _op("motion", "reporter", (), ("position",)),
    "motion_direction": _op("motion", "reporter", (), ("rotation",)),
    "motion_goto_menu": _op("motion", "menu"),
    "motion_glideto_menu": _op("motion", "menu"),
    "motion_pointtowards_menu": _op("motion", "menu"),
    # looks
    "looks_sayforsecs": _op("looks", "stack", timing=True),
    "looks_say": _op("looks", "stack"),
    "looks_thinkforsecs": _op("looks", "stack", timing=True),
    "looks_think": _op("looks", "stack"),
    "looks_switchcostumeto": _op("looks", "stack", ("costume",)),
    "looks_nextcostume": _op("looks", "stack", ("costume",), ("costume",)),
    "looks_switchbackdropto": _op("looks", "stack", ("stage.costume",)),
    "looks_switchbackdroptoandwait": _op(
        "looks", "stack", ("stage.costume",), (), True
    ),
    "looks_nextbackdrop": _op("looks", "stack", ("stage.costume",), ("stage.costume",)),
    "looks_changeeffectby": _op("looks", "stack", ("effects",), ("effects",)),
    "looks_seteffectto": _op("looks", "stack", ("effects",), ("effects",)),
    "looks_cleargraphiceffects": _op("looks", "stack", ("effects",)),
    "looks_changesizeby": _op("looks", "stack", ("size",), ("size",)),
    "looks_setsizeto": _op("looks", "stack", ("size",)),
    "looks_show": _op("looks", "stack", ("visibility",)),
    "looks_hide": _op("looks", "stack", ("visibility",)),
    "looks_gotofrontback": _op("looks", "stack", ("layer",), ("layer",)),
    "looks_goforwardbackwardlayers": _op("looks", "stack", ("layer",), ("layer",)),
    "looks_costumenumbername": _op("looks", "reporter", (), ("costume",)),
    "looks_backdropnumbername": _op("looks", "reporter", (), ("stage.costume",)),
    "looks_size": _op("looks", "reporter", (), ("size",)),
    "looks_costume": _op("looks", "menu"),
    "looks_backdrops": _op("looks", "menu"),
    # sound
    "sound_playuntildone": _op("sound", "stack", ("sound",), ("sound",), True),
    "sound_play": _op("sound", "stack", ("sound",), ("sound",)),
    "sound_stopallsounds": _op("sound", "stack", ("sound",)),
    "sound_changeeffectby": _op("sound", "stack", ("sound",), ("sound",)),
    "sound_seteffectto": _op("sound", "stack", ("sound",), ("sound",)),
    "sound_cleareffects": _op("sound", "stack", ("sound",)),
    "sound_changevolumeby": _op("sound", "stack", ("sound",), ("sound",)),
    "sound_setvolumeto": _op("sound", "stack", ("sound",)),
    "sound_volume": _op("sound", "reporter", (), ("sound",)),
    "sound_sounds_menu": _op("sound", "menu"),
    # events
    "event_whenflagclicked": _op("events", "hat"),
    "event_whenkeypressed": _op("events", "hat"),
    "event_whenthisspriteclicked": _op("events", "hat"),
    "event_whenstageclicked": _op("events", "hat"),
    "event_whenbackdropswitchesto": _op("events", "hat"),
    "event_whengreaterthan": _op("events", "hat"),
    "event_whenbroadcastreceived": _op("events", "hat"),
    "event_whentouchingobject": _op("events", "hat"),
    "event_broadcast": _op("events", "stack"),
    "event_broadcastandwait": _op("events", "stack", timing=True),
    "event_broadcast_menu": _op("events", "menu"),
    "event_touchingobjectmenu": _op("events", "menu"),
    # control
    "control_wait": _op("control", "stack", timing=True),
    "control_repeat": _op("control", "c", timing=True),
    "control_forever": _op("control", "c", timing=True),
    "control_if": _op("control", "c"),
    "control_if_else": _op("control", "c"),
    "control_wait_until": _op("control", "stack", timing=True),
    "control_repeat_until": _op("control", "c", timing=True),
    "control_stop": _op("control", "cap"),
    "control_start_as_clone": _op("control", "hat"),
    "control_create_clone_of": _op("control", "stack", ("*",), ("*",)),
    "control_delete_this_clone": _op("control", "cap"),
    "control_create_clone_of_menu": _op("control", "menu"),
    # sensing
    "sensing_touchingobject": _op("sensing", "boolean", (), _SENSE_SELF),
    "sensing_touchingcolor": _op("sensing", "boolean", (), _SENSE_SELF),
    "sensing_coloristouchingcolor": _op("sensing", "boolean", (), _SENSE_SELF),
    "sensing_distanceto": _op("sensing", "reporter", (), ("position",)),
    "sensing_askandwait": _op("sensing", "stack", ("answer",), (), True),
    "sensing_answer": _op("sensing", "reporter", (), ("answer",)),
    "sensing_keypressed": _op("sensing", "boolean"),
    "sensing_mousedown": _op("sensing", "boolean"),
    "sensing_mousex": _op("sensing", "reporter"),
    "sensing_mousey": _op("sensing", "reporter"),
    "sensing_setdragmode": _op("sensing", "stack", ("drag",)),
    "sensing_loudness": _op("sensing", "reporter"),
    "sensing_timer": _op("sensing", "reporter", (), ("timer",)),
    "sensing_resettimer": _op("sensing", "stack", ("timer",)),
    "sensing_of": _op("sensing", "reporter"),
    "sensing_current": _op("sensing", "reporter"),
    "sensing_dayssince2000": _op("sensing", "reporter"),
    "sensing_username": _op("sensing", "reporter"),
    "sensing_touchingobjectmenu": _op("sensing", "menu"),
    "sensing_distancetomenu": _op("sensing", "menu"),
    "sensing_keyoptions": _op("sensing", "menu"),
    "sensing_of_object_menu": _op("sensing", "menu"),
    # operators
    **{
        f"operator_{name}": _op("operators", shape)
        for name, shape in (
            ("add", "reporter"),
            ("subtract", "reporter"),
            ("multiply", "reporter"),
            ("divide", "reporter"),
            ("random", "reporter"),
            ("lt", "boolean"),
            ("gt", "boolean"),
            ("equals", "boolean"),
            ("and", "boolean"),
            ("or", "boolean"),
            ("not", "boolean"),
            ("join", "reporter"),
            ("letter_of", "reporter"),
            ("length", "reporter"),
            ("contains", "boolean"),
            ("mod", "reporter"),
            ("round", "reporter"),
            ("mathop", "reporter"),
        )
    },
    # variables and lists; resources come from the VARIABLE/LIST field
    "data_setvariableto": _op("variables", "stack", ("$field",)),
    "data_changevariableby": _op("variables", "stack", ("$field",), ("$field",)),
    "data_showvariable": _op("variables", "stack", ("$monitor",)),
    "data_hidevariable": _op("variables", "stack", ("$monitor",)),
    "data_variable": _op("variables", "reporter", (), ("$field",)),
    "data_addtolist": _op("variables", "stack", ("$field",), ("$field",)),
    "data_deleteoflist": _op("variables", "stack", ("$field",), ("$field",)),
    "data_deletealloflist": _op("variables", "stack", ("$field",)),
    "data_insertatlist": _op("variables", "stack", ("$field",), ("$field",)),
    "data_replaceitemoflist": _op("variables", "stack", ("$field",), ("$field",)),
    "data_itemoflist": _op("variables", "reporter", (), ("$field",)),
    "data_itemnumoflist": _op("variables", "reporter", (), ("$field",)),
    "data_lengthoflist": _op("variables", "reporter", (), ("$field",)),
    "data_listcontainsitem": _op("variables", "boolean", (), ("$field",)),
    "data_showlist": _op("variables", "stack", ("$monitor",)),
    "data_hidelist": _op("variables", "stack", ("$monitor",)),
    "data_listcontents": _op("variables", "reporter", (), ("$field",)),
    # custom blocks are opaque: calls may touch anything and may yield
    "procedures_definition": _op("other", "hat"),
    "procedures_prototype": _op("other", "menu"),
    "procedures_call": _op("other", "stack", ("*",), ("*",), True),
    "argument_reporter_string_number": _op("other", "reporter"),
    "argument_reporter_boolean": _op("other", "boolean"),
    # pen extension: one coarse resource per actor
    "pen_clear": _op("other", "stack", ("pen",)),
    "pen_stamp": _op("other", "stack", ("pen",), ("pen",) + _SENSE_SELF),
    "pen_penDown": _op("other", "stack", ("pen",), ("pen", "position")),
    "pen_penUp": _op("other", "stack", ("pen",), ("pen",)),
    "pen_setPenColorToColor": _op("other", "stack", ("pen",), ("pen",)),
    "pen_changePenColorParamBy": _op("other", "stack", ("pen",), ("pen",)),
    "pen_setPenColorParamTo": _op("other", "stack", ("pen",), ("pen",)),
    "pen_changePenSizeBy": _op("other", "stack", ("pen",), ("pen",)),
    "pen_setPenSizeTo": _op("other", "stack", ("pen",), ("pen",)),
    "pen_menu_colorParam": _op("other", "menu"),
}

# primitive shadow opcodes that sb3 normally stores in compressed form
PRIMITIVE_OPCODES = {
    "math_number": (4, "NUM"),
    "math_positive_number": (5, "NUM"),
    "math_whole_number": (6, "NUM"),
    "math_integer": (7, "NUM"),
    "math_angle": (8, "NUM"),
    "colour_picker": (9, "COLOUR"),
    "text": (10, "TEXT"),
}

TERMINATING_STOP_OPTIONS = ("all", "this script")

# substacks every C-block carries, present even when empty
C_STACKS = {
    "control_if": ("SUBSTACK",),
    "control_if_else": ("SUBSTACK", "SUBSTACK2"),
    "control_forever": ("SUBSTACK",),
    "control_repeat": ("SUBSTACK",),
    "control_repeat_until": ("SUBSTACK",),
}

LOOPS = ("control_forever", "control_repeat", "control_repeat_until")

_PALETTE_PREFIXES = {
    "motion": "motion",
    "looks": "looks",
    "sound": "sound",
    "event": "events",
    "control": "control",
    "sensing": "sensing",
    "operator": "operators",
    "data": "variables",
}

_unknown_seen: set[str] = set()


def info(opcode: str) -> OpInfo:
    """Table entry for ``opcode``; unknown opcodes get a conservative entry."""
    try:
        return OPCODES[opcode]
    except KeyError:
        pass
    if opcode not in _unknown_seen:
        _unknown_seen.add(opcode)
        logger.warning("unknown opcode %r treated as opaque", opcode)
    prefix = opcode.split("_", 1)[0]
    category = _PALETTE_PREFIXES.get(prefix, "other")
    return OpInfo(category, "stack", ("*",), ("*",), True)


def is_known(opcode: str) -> bool:
    return opcode in OPCODES


def category_of(opcode: str) -> str:
    return info(opcode).category


def is_hat(opcode: str) -> bool:
    return opcode in OPCODES and OPCODES[opcode].shape == "hat"


def is_timing(opcode: str) -> bool:
    return info(opcode).timing


def resource(token: str, block=None) -> tuple:
    """Expand a table token into a concrete resource tuple."""
    if token == "*":
        return ANY
    if token in ATTRIBUTES:
        return ("attr", "self", token)
    if token == "stage.costume":
        return ("attr", "_stage_", "costume")
    if token in ("answer", "timer"):
        return (token,)
    if token in ("$field", "$monitor"):
        ref = _field_ref(block)
        if ref is None:
            return ANY
        return ref if token == "$field" else ("monitor",) + ref
    return ("state", "self", token)


def _field_ref(block):
    for name, kind in (("VARIABLE", "var"), ("LIST", "list")):
        f = block.fields.get(name) if block is not None else None
        if f:
            ident = f[1] if len(f) > 1 and f[1] else f[0]
            return (kind, ident)
    return None


def conflicts(a: tuple, b: tuple) -> bool:
    return a == b or a == ANY or b == ANY


# sensing "of" property names that read a sprite attribute
_OF_PROPERTIES = {
    "x position": "position",
    "y position": "position",
    "direction": "rotation",
    "costume #": "costume",
    "costume name": "costume",
    "size": "size",
    "backdrop #": "costume",
    "backdrop name": "costume",
}
