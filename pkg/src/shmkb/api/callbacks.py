"""Scripted host callbacks for headless runs.

A script file drives the window units of a rule program:

    {"events": [
      {"key": "0413",
       "callbacks": {
         "win3a": [{"bind": {"Art": "7"}, "code": "0423"}],
         "win3b": [{"bind": {"s": {"list": ["first", "second"]}},
                    "code": "0423"}]}}
    ]}

Codes and keys are octal when written as 0-prefixed strings.  Bind values:
a string is a word, a number is a number, {"list": [...]} a list and
{"phrase": "..."} a word combination.  Each invocation consumes the next
step; exhausted callbacks return 0.
"""

from __future__ import annotations

import json
from typing import Any

from .. import rulelang, store
from ..engine import Session, VarTable
from ..errors import DomainError
from ..store import Arena


def parse_code(value: Any) -> int:
    if isinstance(value, int):
        return value
    if isinstance(value, str):
        text = value.strip()
        if text.startswith("0o"):
            return int(text, 8)
        if len(text) > 1 and text.startswith("0") and \
                all(c in "01234567" for c in text):
            return int(text, 8)
        return int(text, 10)
    raise DomainError(f"bad key/code value {value!r}")


def build_value(arena: Arena, spec: Any) -> int:
    if isinstance(spec, bool):
        raise DomainError("boolean is not a value")
    if isinstance(spec, str):
        return arena.intern_word(spec)
    if isinstance(spec, (int, float)):
        return arena.intern_number(spec)
    if isinstance(spec, dict):
        if "list" in spec:
            items = [build_value(arena, s) for s in spec["list"]]
            return arena.make_relation(store.LIST, items, level=1)
        if "phrase" in spec:
            return rulelang.phrase_rid(arena, spec["phrase"])
        if "number" in spec:
            return arena.intern_number(spec["number"])
    raise DomainError(f"bad bind value {spec!r}")


class ScriptedCallback:
    def __init__(self, name: str, steps: list[dict]):
        self.name = name
        self.steps = list(steps)
        self.calls: list[list[str]] = []

    def __call__(self, session: Session, args: list[int],
                 table: VarTable) -> int:
        arena = session.arena
        self.calls.append(
            [arena.sentence_text(session.instantiate(a, table))
             for a in args])
        if not self.steps:
            return 0
        step = self.steps.pop(0)
        for name, spec in step.get("bind", {}).items():
            table.bind(arena.variable(name), build_value(arena, spec))
        return parse_code(step.get("code", 1))


class Script:
    """A whole scripted run: key events plus callback behaviours."""

    def __init__(self, spec: dict):
        self.events = spec.get("events", [])

    @classmethod
    def load(cls, path: str) -> "Script":
        with open(path, "r", encoding="utf-8") as f:
            return cls(json.load(f))

    def run(self, session: Session) -> list[tuple[int, int]]:
        """Fire each event; returns (key, return code) pairs."""
        results = []
        for event in self.events:
            callbacks = {}
            for name, steps in event.get("callbacks", {}).items():
                cb = ScriptedCallback(name, steps)
                callbacks[name] = cb
                session.register_host(name, cb)
            key = parse_code(event["key"])
            results.append((key, session.fire_entry_rules(key)))
        return results
