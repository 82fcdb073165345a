"""Hand-built sample programs and the bundled mini-corpus.

The ``fig*`` builders are small learner programs used as worked examples.
Each corpus project carries at least one smell the transformations target.
"""
from __future__ import annotations

import os
from importlib import resources
from pathlib import Path
from typing import Callable

from . import build as B
from .scratch_ast import Program


def fig1a() -> Program:
    """Loop whose exit test is an ``if`` with a stop inside a forever."""
    return B.program(
        B.sprite(
            "Sprite1",
            B.script(
                B.when_flag(),
                B.forever(
                    B.say("Hello!"),
                    B.move(10),
                    B.if_(B.key_pressed("space"), B.stop("this script")),
                ),
            ),
        )
    )


def fig1b() -> Program:
    """The readable rewrite of :func:`fig1a`."""
    return B.program(
        B.sprite(
            "Sprite1",
            B.script(
                B.when_flag(),
                B.repeat_until(B.key_pressed("space"), B.say("Hello!"), B.move(10)),
            ),
        )
    )


def fig3() -> Program:
    """Two flag scripts, each a forever around an if, with negated conditions."""
    def cond():
        return B.touching("_mouse_")

    return B.program(
        B.sprite(
            "Sprite1",
            B.script(B.when_flag(), B.forever(B.if_(cond(), B.say("Hi")))),
            B.script(B.when_flag(), B.forever(B.if_(B.not_(cond()), B.say("Bye")))),
        )
    )


def fig5a() -> Program:
    """A storytelling sequence where every statement depends on the previous one."""
    return B.program(
        B.sprite(
            "Narrator",
            B.script(
                B.when_flag(),
                B.switch_costume("wave"),
                B.say("Once upon a time", 2),
                B.switch_costume("point"),
                B.say("there was a cat", 2),
                B.switch_costume("sit"),
                B.say("The end", 3),
            ),
        )
    )


# -- corpus ------------------------------------------------------------------

def _key_controls() -> Program:
    return B.program(
        B.sprite(
            "Player",
            B.script(
                B.when_flag(),
                B.forever(
                    B.if_(B.key_pressed("right arrow"), B.change_x(10)),
                    B.if_(B.key_pressed("up arrow"), B.turn(15)),
                    B.if_(B.key_pressed("c"), B.next_costume()),
                    B.if_(B.key_pressed("space"), B.play_sound("jump")),
                ),
            ),
        )
    )


def _duplicate_ifs() -> Program:
    return B.program(
        B.sprite(
            "Ball",
            B.script(
                B.when_flag(),
                B.forever(
                    B.move(5),
                    B.if_(B.gt(B.var("level"), 2), B.play_sound("boing")),
                    B.if_(B.gt(B.var("level"), 2), B.switch_costume("spiky")),
                    B.bounce(),
                ),
            ),
        )
    )


def _setup_script() -> Program:
    return B.program(
        B.sprite(
            "Hero",
            B.script(
                B.when_flag(),
                B.set_var("lives", 3),
                B.goto_xy(0, -120),
                B.show(),
                B.set_size(80),
                B.set_var("score", 0),
                B.broadcast("start"),
                B.play_sound("pop"),
            ),
        )
    )


def _repeated_moves() -> Program:
    return B.program(
        B.sprite(
            "Walker",
            B.script(
                B.when_key("space"),
                B.move(10),
                B.next_costume(),
                B.move(10),
                B.next_costume(),
                B.move(10),
                B.next_costume(),
            ),
            B.script(
                B.when_clicked(),
                B.turn(15),
                B.turn(15),
                B.turn(15),
                B.change_size(10),
            ),
        )
    )


def _guarded_forever() -> Program:
    return B.program(
        B.sprite(
            "Rocket",
            B.script(
                B.when_flag(),
                B.goto_xy(0, -150),
                B.forever(
                    B.change_y(4),
                    B.if_(B.gt(B.x_position(), 200), B.stop("this script")),
                ),
            ),
            B.script(
                B.when_flag(),
                B.forever(B.if_(B.touching("edge"), B.hide())),
            ),
        )
    )


def _if_else_negation() -> Program:
    def cond():
        return B.gt(B.var("speed"), 5)

    return B.program(
        B.sprite(
            "Car",
            B.script(
                B.when_flag(),
                B.set_var("speed", 0),
                B.forever(
                    B.if_(cond(), B.switch_costume("fast")),
                    B.if_(B.not_(cond()), B.switch_costume("slow")),
                    B.change_var("speed", 1),
                    B.wait(0.5),
                ),
            ),
        )
    )


def _nested_ifs() -> Program:
    return B.program(
        B.sprite(
            "Guard",
            B.script(
                B.when_flag(),
                B.forever(
                    B.if_(
                        B.touching("Thief"),
                        B.if_(B.key_pressed("x"), B.say("Caught!"), B.change_var("caught", 1)),
                    ),
                    B.move(3),
                    B.bounce(),
                ),
            ),
        )
    )


def _wait_then_more() -> Program:
    return B.program(
        B.sprite(
            "Door",
            B.script(
                B.when_flag(),
                B.hide(),
                B.repeat_until(B.equals(B.var("keys"), 3), B.wait(1)),
                B.show(),
                B.say("Open!"),
                B.play_sound("creak"),
            ),
            B.script(
                B.when_key("k"),
                B.change_var("keys", 1),
                B.play_sound("ding"),
            ),
        )
    )


def _twin_loops() -> Program:
    return B.program(
        B.sprite(
            "Fish",
            B.script(B.when_flag(), B.forever(B.move(2), B.bounce())),
            B.script(B.when_flag(), B.forever(B.next_costume(), B.wait(0.3))),
            B.script(B.when_flag(), B.forever(B.if_(B.touching("Shark"), B.hide()))),
        )
    )


def _maze_game() -> Program:
    return B.program(
        B.sprite(
            "Mouse",
            B.script(
                B.when_flag(),
                B.goto_xy(-200, 150),
                B.set_var("cheese", 0),
                B.show(),
                B.forever(
                    B.if_(B.key_pressed("right arrow"), B.change_x(3)),
                    B.if_(B.key_pressed("left arrow"), B.change_x(-3)),
                    B.if_(B.touching("Wall"), B.goto_xy(-200, 150)),
                    B.if_(B.touching("Cheese"), B.change_var("cheese", 1)),
                ),
            ),
        ),
        B.sprite(
            "Cat",
            B.script(
                B.when_flag(),
                B.forever(
                    B.if_(B.touching("Mouse"), B.say("Got you!"), B.broadcast("lost")),
                    B.if_(B.touching("Mouse"), B.stop("all")),
                ),
            ),
        ),
    )


def _stage_music() -> Program:
    return B.program(
        B.sprite(
            "Drummer",
            B.script(
                B.when_received("beat"),
                B.next_costume(),
                B.play_sound("drum"),
                B.next_costume(),
                B.play_sound("drum"),
            ),
        ),
        stage_scripts=(
            B.script(
                B.when_flag(),
                B.switch_backdrop("concert"),
                B.set_var("tempo", 120),
                B.repeat(4, B.broadcast("beat", and_wait=True)),
            ),
        ),
    )


SAMPLES: dict[str, Callable[[], Program]] = {
    "fig1a": fig1a,
    "fig1b": fig1b,
    "fig3": fig3,
    "fig5a": fig5a,
}

# name -> (builder, stored format)
CORPUS: dict[str, tuple[Callable[[], Program], str]] = {
    "fig1a_loop_exit": (fig1a, "sb3"),
    "fig3_negated_ifs": (fig3, "json"),
    "fig5a_timed_story": (fig5a, "sb3"),
    "key_controls": (_key_controls, "sb3"),
    "duplicate_ifs": (_duplicate_ifs, "json"),
    "setup_script": (_setup_script, "sb3"),
    "repeated_moves": (_repeated_moves, "json"),
    "guarded_forever": (_guarded_forever, "sb3"),
    "if_else_negation": (_if_else_negation, "json"),
    "nested_ifs": (_nested_ifs, "sb3"),
    "wait_then_more": (_wait_then_more, "json"),
    "twin_loops": (_twin_loops, "sb3"),
    "maze_game": (_maze_game, "json"),
    "stage_music": (_stage_music, "sb3"),
}

# projects the search is expected to leave untouched
DEGENERATE = frozenset({"fig5a_timed_story"})


def corpus_dir() -> Path:
    return Path(str(resources.files(__package__) / "corpus"))


def corpus_files() -> list[Path]:
    d = corpus_dir()
    return sorted(p for p in d.iterdir() if p.suffix in (".sb3", ".json"))


def write_corpus(directory: str | os.PathLike) -> list[Path]:
    """Serialize every corpus project into ``directory`` in its stored format."""
    from .sb3 import dump

    out = []
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    for name, (builder, fmt) in CORPUS.items():
        path = directory / f"{name}.{fmt}"
        dump(builder(), path, fmt=fmt)
        out.append(path)
    return out
