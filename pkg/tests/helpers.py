"""Shared test helpers: scripted host callbacks and session setup."""

from __future__ import annotations

from shmkb import rulelang, store
from shmkb.engine import Session
from shmkb.store import Arena


def build_value(arena: Arena, spec):
    """Turn a plain-python spec into a relation id.

    str -> word; int/float -> number; ("phrase", s) -> word combination;
    ("list", [...]) -> level-1 list of built values.
    """
    if isinstance(spec, bool):
        raise TypeError("ambiguous bool spec")
    if isinstance(spec, str):
        return arena.intern_word(spec)
    if isinstance(spec, (int, float)):
        return arena.intern_number(spec)
    if isinstance(spec, tuple) and spec and spec[0] == "phrase":
        return rulelang.phrase_rid(arena, spec[1])
    if isinstance(spec, tuple) and spec and spec[0] == "list":
        items = [build_value(arena, s) for s in spec[1]]
        return arena.make_relation(store.LIST, items, level=1)
    raise TypeError(f"bad value spec {spec!r}")


def render(arena: Arena, rid) -> str:
    if rid is None:
        return "?"
    node = arena.node(rid)
    if arena.is_word(rid) or node.is_number or arena.is_variable(rid):
        return arena.text_of(rid)
    return arena.sentence_text(rid)


class Script:
    """A host callback driven by a list of (binds, return_code) steps.

    Each invocation records the (partially) instantiated arguments,
    applies the next step's bindings into the call's table, and returns
    the step's code; extra calls return 0.
    """

    def __init__(self, steps=()):
        self.steps = list(steps)
        self.calls: list[list[str]] = []

    def __call__(self, session: Session, args, table) -> int:
        arena = session.arena
        self.calls.append([render(arena, session.instantiate(a, table))
                           for a in args])
        if not self.steps:
            return 0
        binds, code = self.steps.pop(0)
        for name, spec in binds.items():
            table.bind(arena.variable(name), build_value(arena, spec))
        return code


def session_from_text(tmp_path, text: str, **kw) -> tuple[Arena, Session]:
    arena = Arena()
    path = tmp_path / "rules.rules"
    path.write_text(text)
    rfid = rulelang.translate_file(path, arena)
    session = Session(arena, **kw)
    session.add_rule_file(rfid)
    return arena, session
