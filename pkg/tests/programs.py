"""Random program generators for property tests.

Each ``shape_*`` function embeds one pattern a transformation looks for in
random surroundings, so most generated programs offer that transformation.
"""
from __future__ import annotations

import random

from sbrefactor import build as B
from sbrefactor.scratch_ast import Block, VarRef, iter_tree

VARS = ("a", "b", "c")
KEYS = ("space", "left arrow", "up arrow", "x", "z")
SPRITES = ("Ball", "Wall", "edge")


def stmt(rng: random.Random, timing: bool = True):
    choices = [
        lambda: B.move(rng.randint(1, 9)),
        lambda: B.turn(rng.choice((15, 90))),
        lambda: B.say(rng.choice(("hi", "yo", "ok"))),
        lambda: B.next_costume(),
        lambda: B.set_var(rng.choice(VARS), rng.randint(0, 3)),
        lambda: B.change_var(rng.choice(VARS), rng.randint(1, 2)),
        lambda: B.play_sound(rng.choice(("pop", "meow"))),
        lambda: B.show(),
        lambda: B.hide(),
        lambda: B.change_size(rng.randint(1, 5)),
        lambda: B.set_var(rng.choice(VARS), B.add(B.var(rng.choice(VARS)), 1)),
        lambda: B.broadcast(rng.choice(("go", "stop"))),
    ]
    if timing:
        choices.append(lambda: B.wait(rng.choice((0.1, 1))))
        choices.append(lambda: B.say(rng.choice(("hi", "yo")), 1))
    return rng.choice(choices)()


def cond(rng: random.Random, sensing: bool = True):
    choices = [
        lambda: B.gt(B.var(rng.choice(VARS)), rng.randint(0, 3)),
        lambda: B.equals(B.var(rng.choice(VARS)), rng.randint(0, 3)),
        lambda: B.lt(B.var(rng.choice(VARS)), rng.randint(0, 3)),
    ]
    if sensing:
        choices.append(lambda: B.key_pressed(rng.choice(KEYS)))
        choices.append(lambda: B.touching(rng.choice(SPRITES)))
    return rng.choice(choices)()


def body(rng: random.Random, lo: int = 1, hi: int = 3, timing: bool = True) -> list:
    return [stmt(rng, timing) for _ in range(rng.randint(lo, hi))]


def duplicate(block):
    """Structurally equal copy that counts as a different statement, as if typed twice."""
    dup = block.clone()
    for n in iter_tree(dup):
        if isinstance(n, (Block, VarRef)):
            n.origin = None
    return dup


def hat(rng: random.Random):
    return rng.choice((B.when_flag, B.when_clicked, lambda: B.when_key(rng.choice(KEYS))))()


def _wrap(rng: random.Random, core: list, loose: bool = True):
    """Program with ``core`` inside a script between random statements."""
    pre = body(rng, 0, 2) if loose else []
    post = body(rng, 0, 2) if loose else []
    scripts = [B.script(B.when_flag(), *pre, *core, *post)]
    if rng.random() < 0.4:
        scripts.append(B.script(hat(rng), *body(rng, 1, 3)))
    rng.shuffle(scripts)
    return B.program(B.sprite("Sprite1", *scripts))


def shape_any(rng: random.Random, loop_free: bool = False):
    """A few scripts of random, possibly nested statements."""
    def block(depth):
        r = rng.random()
        if depth < 2 and r < 0.2:
            return B.if_(cond(rng), *[block(depth + 1) for _ in range(rng.randint(1, 2))])
        if depth < 2 and r < 0.3:
            return B.if_else(cond(rng), [block(depth + 1)], [block(depth + 1)])
        if not loop_free and depth < 2 and r < 0.38:
            return B.repeat(rng.randint(2, 4), *[block(depth + 1) for _ in range(rng.randint(1, 2))])
        return stmt(rng)

    scripts = [B.script(hat(rng), *[block(0) for _ in range(rng.randint(1, 4))]) for _ in range(rng.randint(1, 2))]
    return B.program(B.sprite("Sprite1", *scripts))


def shape_loop_unrolling(rng):
    return _wrap(rng, [B.repeat(rng.randint(2, 4), *body(rng, 1, 2))])


def shape_forever_if(rng):
    inner = B.if_(cond(rng), *body(rng, 1, 3))
    return B.program(B.sprite("Sprite1", B.script(hat(rng), *body(rng, 0, 2), B.forever(inner))))


def shape_extract_loop_condition(rng):
    loop = B.forever(*body(rng, 1, 3), B.if_(cond(rng), B.stop(rng.choice(("this script", "all")))))
    return B.program(B.sprite("Sprite1", B.script(hat(rng), *body(rng, 0, 2), loop)))


def shape_split_if_body(rng):
    return _wrap(rng, [B.if_(cond(rng, sensing=False), *body(rng, 2, 4, timing=False))])


def shape_if_else(rng):
    return _wrap(rng, [B.if_else(cond(rng), body(rng, 1, 2, timing=False), body(rng, 1, 2))])


def shape_ifs_to_conjunction(rng):
    return _wrap(rng, [B.if_(cond(rng), B.if_(cond(rng), *body(rng, 1, 2)))])


def shape_if_if_else(rng):
    return _wrap(rng, [B.if_(cond(rng), B.if_else(cond(rng), body(rng, 1, 2), body(rng, 1, 2)))])


def shape_if_else_disjunction(rng):
    then = body(rng, 1, 2)
    twin = [duplicate(b) for b in then]
    return _wrap(rng, [B.if_else(cond(rng), then, [B.if_(cond(rng), *twin)])])


def _independent_stmts(rng, n):
    pool = [
        lambda: B.move(rng.randint(1, 9)),
        lambda: B.turn(15),
        lambda: B.next_costume(),
        lambda: B.change_var("a", 1),
        lambda: B.change_var("b", 1),
        lambda: B.play_sound("pop"),
        lambda: B.change_size(2),
        lambda: B.say("hi"),
    ]
    picks = rng.sample(range(len(pool)), n)
    return [pool[i]() for i in picks]


def shape_split_loop(rng):
    stmts = _independent_stmts(rng, rng.randint(2, 4))
    if rng.random() < 0.5:
        return B.program(B.sprite("Sprite1", B.script(B.when_flag(), B.forever(*stmts))))
    return _wrap(rng, [B.repeat(rng.randint(2, 5), *stmts)])


def shape_split_script(rng):
    stmts = _independent_stmts(rng, rng.randint(2, 4))
    extra = [B.script(hat(rng), *body(rng, 1, 2))] if rng.random() < 0.3 else []
    return B.program(B.sprite("Sprite1", B.script(hat(rng), *stmts), *extra))


def shape_extract_events(rng):
    keys = rng.sample(KEYS, rng.randint(2, 3))
    stmts = _independent_stmts(rng, len(keys))
    ifs = [B.if_(B.key_pressed(k), s) for k, s in zip(keys, stmts)]
    return B.program(B.sprite("Sprite1", B.script(B.when_flag(), B.forever(*ifs))))


def shape_split_after_until(rng):
    loop = B.repeat_until(cond(rng), *body(rng, 1, 2, timing=False))
    return B.program(
        B.sprite("Sprite1", B.script(hat(rng), *body(rng, 0, 2, timing=False), loop, *body(rng, 1, 3, timing=False)))
    )


# forward kind -> generator of programs offering it
FORWARD_SHAPES = {
    "SwapStatements": shape_any,
    "LoopUnrolling": shape_loop_unrolling,
    "ForeverIfToForeverWait": shape_forever_if,
    "ExtractLoopCondition": shape_extract_loop_condition,
    "SplitIfBody": shape_split_if_body,
    "IfElseToIfIfNot": shape_if_else,
    "IfsToConjunction": shape_ifs_to_conjunction,
    "IfIfElseToConjunction": shape_if_if_else,
    "IfElseToDisjunction": shape_if_else_disjunction,
    "SplitLoop": shape_split_loop,
    "SplitScript": shape_split_script,
    "ExtractEventsFromForever": shape_extract_events,
    "SplitScriptAfterUntil": shape_split_after_until,
}


def loop_free(rng: random.Random):
    """Loop-free program of at most 8 statements, in one or two scripts."""
    budget = rng.randint(1, 8)

    def block(depth):
        nonlocal budget
        budget -= 1
        r = rng.random()
        if depth < 2 and budget >= 2 and r < 0.25:
            inner = [block(depth + 1) for _ in range(rng.randint(1, min(2, budget)))]
            return B.if_(cond(rng), *inner)
        if depth < 2 and budget >= 2 and r < 0.35:
            return B.if_else(cond(rng), [block(depth + 1)], [block(depth + 1)])
        if depth < 2 and budget >= 1 and r < 0.42:
            c = cond(rng)
            return B.if_(B.not_(c), block(depth + 1)) if r < 0.39 else B.if_(duplicate(c), block(depth + 1))
        return stmt(rng)

    scripts = []
    for _ in range(rng.randint(1, 2)):
        stmts = []
        while budget > 0 and len(stmts) < 5:
            stmts.append(block(0))
            if rng.random() < 0.3:
                break
        if stmts:
            scripts.append(B.script(hat(rng), *stmts))
    if not scripts:
        scripts.append(B.script(hat(rng), stmt(rng)))
    if rng.random() < 0.3:
        # a duplicated statement run or a duplicated if makes merges and loops reachable
        s = scripts[0]
        s.body.append(duplicate(s.body[-1]))
    if rng.random() < 0.25:
        k = rng.choice(KEYS)
        scripts.append(B.script(B.when_key(k), stmt(rng, timing=False)))
        scripts.append(B.script(B.when_key(rng.choice(KEYS)), stmt(rng, timing=False)))
    return B.program(B.sprite("Sprite1", *scripts))
