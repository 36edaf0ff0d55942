"""The service core shared by the CLI and the HTTP layer.

All mutations are funneled through one lock (the single-writer role);
snapshots set a flag instead of holding the lock, so reads proceed while
a snapshot is written and a racing write is refused with ServiceBusy.
"""

from __future__ import annotations

import os
import threading
from typing import Optional

from .. import rulelang, semantics, store
from ..engine import Session
from ..errors import DomainError, ShmkbError
from ..semantics import SHAPE_COND, SHAPE_DOUBLE, SHAPE_SQA, Semantics
from ..store import Arena
from .config import Config

SHAPE_NAMES = {"sqa": SHAPE_SQA, "condcons": SHAPE_COND,
               "doublecondcons": SHAPE_DOUBLE,
               "cond": SHAPE_COND, "double": SHAPE_DOUBLE}
SHAPE_LABELS = {SHAPE_SQA: "SQA", SHAPE_COND: "CondCons",
                SHAPE_DOUBLE: "DoubleCondCons"}


class ServiceBusy(ShmkbError):
    """A write raced a running snapshot."""


def shape_of(name: str) -> str:
    try:
        return SHAPE_NAMES[name.strip().lower()]
    except KeyError:
        raise DomainError(f"unknown shape {name!r}") from None


class KnowledgeService:
    def __init__(self, config: Optional[Config] = None):
        self.config = config or Config()
        if self.config.arena_path and os.path.exists(self.config.arena_path):
            self.arena = Arena.load(self.config.arena_path,
                                    cap_bytes=self.config.arena_cap_bytes)
        else:
            self.arena = Arena(cap_bytes=self.config.arena_cap_bytes)
        self.session = Session(self.arena,
                               depth_cap=self.config.depth_cap,
                               enable_spawn=self.config.enable_spawn)
        self.semantics = Semantics(self.arena,
                                   depth_cap=self.config.depth_cap)
        self._lock = threading.RLock()
        self._snapshotting = False
        self._register_semantic_callbacks()
        self.load_rules()

    # ------------------------------------------------------------- lifecycle

    def _register_semantic_callbacks(self) -> None:
        # the teaching units of the demonstration rules: argument order
        # is (question, sentence, answer)
        def add_rule0(session, args, table):
            values = [session.value_of(a, table) for a in args]
            if any(v is None for v in values) or len(values) != 3:
                return 0
            q, s, a = values
            out = self.semantics.teach(SHAPE_SQA, [s, q], a)
            return 1 if out.status in ("created", "merged") else 0

        def del_rule0(session, args, table):
            values = [session.value_of(a, table) for a in args]
            if any(v is None for v in values) or len(values) != 3:
                return 0
            q, s, a = values
            self.semantics.unteach(SHAPE_SQA, [s, q], a)
            return 1

        self.session.register_host("add_rule0", add_rule0)
        self.session.register_host("del_rule0", del_rule0)

    def load_rules(self) -> None:
        for path in self.config.rules_paths:
            root = f"rulefile:{os.path.abspath(path)}"
            rfid = self.arena.get_root(root)
            if rfid:
                rulelang.retranslate_if_modified(rfid, self.arena)
            else:
                rfid = rulelang.translate_file(path, self.arena)
            self.session.add_rule_file(rfid)

    def _write_guard(self) -> None:
        if self._snapshotting:
            raise ServiceBusy("a snapshot is being written")

    def save(self, path: Optional[str] = None) -> Optional[str]:
        target = path or self.config.arena_path
        if not target:
            return None
        with self._lock:
            self._snapshotting = True
        try:
            self.arena.snapshot(target)
        finally:
            with self._lock:
                self._snapshotting = False
        return target

    # ------------------------------------------------------------ operations

    def fire(self, key_code: int) -> int:
        with self._lock:
            self._write_guard()
            return self.session.fire_entry_rules(key_code)

    def teach(self, shape: str, s: Optional[str], q: Optional[str],
              a: str, conds: Optional[list[str]] = None) -> dict:
        sh = shape_of(shape)
        if sh == SHAPE_SQA:
            if s is None or q is None:
                raise DomainError("SQA needs fields s and q")
            left = [s, q]
        elif sh == SHAPE_COND:
            if s is None:
                raise DomainError("CondCons needs field s")
            left = [s]
        else:
            if not conds or len(conds) != 2:
                raise DomainError("DoubleCondCons needs two conds")
            left = list(conds)
        with self._lock:
            self._write_guard()
            out = self.semantics.teach_texts(sh, left, a)
        if out.status == "created":
            return {"outcome": "Created", "rule": out.rule}
        if out.status == "merged":
            return {"outcome": "MergedInto", "rule": out.rule}
        return {"outcome": "Rejected", "reason": out.reason}

    def unteach(self, shape: str, s: Optional[str], q: Optional[str],
                a: str, conds: Optional[list[str]] = None) -> None:
        sh = shape_of(shape)
        if sh == SHAPE_SQA:
            left = [s or "", q or ""]
        elif sh == SHAPE_COND:
            left = [s or ""]
        else:
            left = list(conds or [])
        with self._lock:
            self._write_guard()
            self.semantics.unteach_texts(sh, left, a)

    def ingest(self, article_id: str, text: str) -> dict:
        with self._lock:
            self._write_guard()
            art = self.semantics.ingest_article(article_id, text)
        return {"id": art.id_text, "sentences": len(art.sentences)}

    def ask(self, question: str) -> list[dict]:
        with self._lock:
            return [{"text": t, "article": a}
                    for t, a in self.semantics.answer(question)]

    def article(self, article_id: str) -> Optional[dict]:
        with self._lock:
            art = self.semantics.article(article_id)
        if art is None:
            return None
        sem = self.semantics
        return {"id": art.id_text,
                "sentences": [sem.render(s) for s in art.sentences]}

    def articles(self) -> list[dict]:
        with self._lock:
            return [{"id": aid,
                     "sentences": [self.semantics.render(s)
                                   for s in sentences]}
                    for aid, sentences in self.semantics.articles_list()]

    def rules_summary(self) -> list[dict]:
        sem = self.semantics
        arena = self.arena
        with self._lock:
            out = []
            for view in sem.rules():
                slots = sem.slots_of(view)
                names = {s: arena.variable_name(s) for s in slots}

                def part_text(part: int) -> str:
                    bits = []
                    for tok in arena.node(part).inverse_refs:
                        if tok in names:
                            vals = ",".join(arena.text_of(v)
                                            for v in
                                            arena.paradigm_values(tok))
                            bits.append("{" + vals + "}")
                        elif arena.is_word(tok) or \
                                arena.node(tok).is_number:
                            bits.append(arena.text_of(tok))
                        else:
                            bits.append("( " + sem.render(tok) + " )")
                    return " ".join(bits)

                conds = []
                for cslots, combos_node in view.conds:
                    combos = [[arena.text_of(v)
                               for v in arena.node(c).inverse_refs]
                              for c in arena.node(combos_node).inverse_refs]
                    conds.append({"slots": [names.get(s, "?")
                                            for s in cslots],
                                  "combos": combos})
                out.append({
                    "id": view.rid,
                    "shape": SHAPE_LABELS[view.shape],
                    "left": [part_text(p) for p in view.left],
                    "right": part_text(view.right),
                    "slots": {names[s]: [arena.text_of(v) for v in
                                         arena.paradigm_values(s)]
                              for s in slots},
                    "conditions": conds,
                    "samples": len(arena.node(view.samples).inverse_refs),
                })
            return out

    def proposals(self) -> list[dict]:
        arena = self.arena
        with self._lock:
            return [{"id": p.id,
                     "slots": [arena.variable_name(s) for s in p.slots],
                     "shared": [arena.text_of(v) for v in p.shared]}
                    for p in self.semantics.proposals()]

    def confirm_proposal(self, proposal_id: str, accept: bool) -> None:
        with self._lock:
            self._write_guard()
            self.semantics.confirm_generalization(proposal_id, accept)

    def stats(self) -> dict:
        with self._lock:
            s = self.arena.stats()
            return {"nodes_by_level": s.nodes_by_level,
                    "total_nodes": s.total_nodes,
                    "arena_bytes": s.arena_bytes,
                    "mapped_bytes": s.mapped_bytes,
                    "usage_total": s.usage_total,
                    "lookups": s.lookups,
                    "rules": len(self.semantics.rules()),
                    "articles": len(self.semantics.articles_list())}
