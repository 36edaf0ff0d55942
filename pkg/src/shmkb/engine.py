"""Recursive rule execution.

A Session owns the global variable table, the `key` event register, the
host-callback registry and the derivation stack.  Rules fire in rule-file
order; a body sequence B1..Bn stops at the first return code 0 or -1;
derivative-rule search starts for non-executable sentences and for calls
that completed with a code >= 0o410 (the search-cutting rule), and a call
code > 0o410 also sets `key`.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Iterator, Optional

from . import builtins as builtins_mod
from . import rulelang, store
from .errors import (
    ArityError,
    BindingError,
    ExitUnwind,
    FileSearchError,
    LinkError,
)
from .store import Arena

KEY_FLOOR = 0o410

log = logging.getLogger(__name__)


@dataclass
class VarTable:
    """Current-variable bindings; global bindings live on the session."""

    session: "Session"
    current: dict[int, int] = field(default_factory=dict)

    def derive_bi(self) -> "VarTable":
        # B-position: a fresh child built from the parent alone
        return VarTable(self.session, dict(self.current))

    def derive_ci(self) -> "VarTable":
        # C-position: the derived table is the initial table
        return self

    def lookup(self, var: int) -> Optional[int]:
        s = self.session
        if var == s.key_var:
            return s.arena.intern_number(s.key)
        if s.arena.node(var).kind == store.GLOBAL_VAR:
            return s.globals.get(var)
        return self.current.get(var)

    def bind(self, var: int, value: int) -> None:
        s = self.session
        if var == s.key_var:
            s.key = int(s.arena.number_value(value))
            return
        if s.arena.node(var).kind == store.GLOBAL_VAR:
            s.globals[var] = value
        else:
            self.current[var] = value

    def raw_state(self, var: int) -> tuple[bool, Optional[int]]:
        """(bound?, value) without special-casing `key`."""
        s = self.session
        if var == s.key_var:
            return True, s.arena.intern_number(s.key)
        if s.arena.node(var).kind == store.GLOBAL_VAR:
            return var in s.globals, s.globals.get(var)
        return var in self.current, self.current.get(var)

    def unbind(self, var: int) -> None:
        s = self.session
        if s.arena.node(var).kind == store.GLOBAL_VAR:
            s.globals.pop(var, None)
        else:
            self.current.pop(var, None)


@dataclass
class SentenceView:
    rid: int
    call_name: Optional[str] = None   # includes '#'
    named: Optional[str] = None       # includes '$'
    args: list[int] = field(default_factory=list)
    target: Optional[int] = None      # second-level following sentence

    @property
    def is_exec(self) -> bool:
        return self.call_name is not None


def sentence_view(arena: Arena, rid: int) -> SentenceView:
    node = arena.node(rid)
    view = SentenceView(rid)
    if node.level == 2 and node.inverse_refs and \
            arena.is_word(node.inverse_refs[0]):
        text = arena.word_text(node.inverse_refs[0])
        if text.startswith("#") or text.startswith("$"):
            args: list[int] = []
            target = None
            for c in node.inverse_refs[1:]:
                if arena.node(c).level == 2:
                    target = c
                else:
                    args = list(arena.node(c).inverse_refs)
            if text.startswith("#"):
                view.call_name = text
            else:
                view.named = text
            view.args = args
            view.target = target
    return view


HostFn = Callable[["Session", list[int], VarTable], int]


class Session:
    """One sequential execution context over an arena."""

    def __init__(self, arena: Arena, depth_cap: int = 256,
                 enable_spawn: bool = False):
        self.arena = arena
        self.globals: dict[int, int] = {}
        self.key = 0
        self.depth_cap = depth_cap
        self.enable_spawn = enable_spawn
        self.rule_files: list[int] = []
        self.hosts: dict[str, HostFn] = {}
        self.key_var = arena.variable("key")
        self._stack: list[tuple] = []
        self._stack_set: set[tuple] = set()
        self._linkage: dict[int, object] = {}   # call relation -> resolution
        self.list_cursors: dict[int, tuple[int, int]] = {}

    # ------------------------------------------------------------- plumbing

    def add_rule_file(self, rfid: int) -> None:
        if rfid not in self.rule_files:
            self.rule_files.append(rfid)

    def register_host(self, name: str, fn: HostFn) -> None:
        self.hosts[name.lstrip("#")] = fn
        self._linkage.clear()

    def all_rules(self) -> Iterator[int]:
        for rfid in self.rule_files:
            yield from rulelang.rule_file_rules(self.arena, rfid)

    # ------------------------------------------------------ values, matching

    def instantiate(self, rid: int, table: VarTable,
                    partial: bool = True) -> int:
        """Rebuild a relation with variables replaced by their values."""
        a = self.arena
        node = a.node(rid)
        if a.is_variable(rid) or rid == self.key_var:
            value = table.lookup(rid)
            if value is None:
                if partial:
                    return rid
                raise BindingError(
                    f"variable {a.variable_name(rid)!r} is unbound")
            return value
        if not node.has_vars:
            return rid
        # {x} splices a bound list value whole
        if node.code == store.LIST and len(node.inverse_refs) == 1 and \
                a.is_variable(node.inverse_refs[0]):
            value = table.lookup(node.inverse_refs[0])
            if value is not None:
                if a.node(value).code == store.LIST:
                    return value
                return a.make_relation(store.LIST, [value], level=node.level)
        children = [self.instantiate(c, table, partial)
                    for c in node.inverse_refs]
        if children == list(node.inverse_refs):
            return rid
        return a.make_relation(node.code, children, level=node.level,
                               kind=node.kind, policy=node.policy)

    def _lookup2(self, var: int, table: VarTable, scratch: dict) -> Optional[int]:
        if var in scratch:
            return scratch[var]
        return table.lookup(var)

    def match(self, pattern: int, value: int, table: VarTable,
              scratch: dict[int, int]) -> bool:
        """One-way match of a scheme against a (mostly ground) relation.

        Variables on the value side act as wildcards; interning makes
        ground-to-ground comparison an id check.
        """
        a = self.arena
        if pattern == value:
            return True
        if a.is_variable(pattern) or pattern == self.key_var:
            bound = self._lookup2(pattern, table, scratch)
            if bound is not None:
                return self.match(bound, value, table, scratch) \
                    if bound != value else True
            if a.is_variable(value):
                return True   # unbound caller variable: wildcard
            scratch[pattern] = value
            return True
        if a.is_variable(value):
            return True
        pnode, vnode = a.node(pattern), a.node(value)
        if pnode.is_elementary or vnode.is_elementary:
            return False
        if not pnode.inverse_refs or not vnode.inverse_refs:
            return False
        if pnode.level != vnode.level:
            return False
        # a {x} pattern captures the whole list
        if pnode.code == store.LIST and len(pnode.inverse_refs) == 1 and \
                a.is_variable(pnode.inverse_refs[0]) and \
                vnode.code == store.LIST:
            return self.match(pnode.inverse_refs[0], value, table, scratch)
        if pnode.code != vnode.code:
            return False
        pc, vc = pnode.inverse_refs, vnode.inverse_refs
        if pnode.code == store.UNORDERED:
            return self._match_multiset(pc, vc, table, scratch)
        if pnode.code == store.DISJUNCTION:
            return any(self.match(c, value, table, dict(scratch))
                       for c in pc)
        if len(pc) != len(vc):
            return False
        saved = dict(scratch)
        for p, v in zip(pc, vc):
            if not self.match(p, v, table, scratch):
                scratch.clear()
                scratch.update(saved)
                return False
        return True

    def _match_multiset(self, pats: list[int], vals: list[int],
                        table: VarTable, scratch: dict) -> bool:
        if len(pats) != len(vals):
            return False
        if not pats:
            return True
        p, rest = pats[0], pats[1:]
        for i, v in enumerate(vals):
            trial = dict(scratch)
            if self.match(p, v, table, trial) and \
                    self._match_multiset(rest, vals[:i] + vals[i + 1:],
                                         table, trial):
                scratch.clear()
                scratch.update(trial)
                return True
        return False

    def pattern_bindings(self, pattern: int, value: int) -> dict[int, int]:
        """Variable -> value pairs read off an already-matching pair."""
        out: dict[int, int] = {}
        self._collect_bindings(pattern, value, out)
        return out

    def _collect_bindings(self, pattern: int, value: int,
                          out: dict[int, int]) -> None:
        a = self.arena
        if a.is_variable(pattern):
            out.setdefault(pattern, value)
            return
        pnode, vnode = a.node(pattern), a.node(value)
        if pnode.is_elementary or pattern == value:
            return
        if pnode.code == store.LIST and len(pnode.inverse_refs) == 1 and \
                a.is_variable(pnode.inverse_refs[0]):
            out.setdefault(pnode.inverse_refs[0], value)
            return
        if len(pnode.inverse_refs) == len(vnode.inverse_refs):
            for p, v in zip(pnode.inverse_refs, vnode.inverse_refs):
                self._collect_bindings(p, v, out)

    # ----------------------------------------------------------- file search

    def resolve_file(self, a2: int, table: VarTable
                     ) -> tuple[bool, int, Optional[int]]:
        """A2 designates a file: returns (iterate_all, scheme, paradigm)."""
        a = self.arena
        node = a.node(a2)
        braced = node.level == 2 and node.code == store.LIST
        scheme = node.inverse_refs[0] if braced else a2
        sview = sentence_view(a, scheme)
        if sview.is_exec:
            raise FileSearchError("A2 must name a file, not a call")
        return braced, scheme, a.paradigm_for(scheme)

    def search_file(self, file_pid: Optional[int], scheme: int,
                    table: VarTable) -> Iterator[dict[int, int]]:
        """Stored instances matching the scheme, in paradigm order.

        Variables bound by one match are re-stated for the next one;
        variables bound before the search act as constraints.  Bindings of
        each yielded match are committed into the table.
        """
        if file_pid is None:
            return
        saved: dict[int, tuple[bool, Optional[int]]] = {}

        def restore() -> None:
            for var, (had, val) in saved.items():
                if had:
                    table.bind(var, val)
                else:
                    table.unbind(var)
            saved.clear()

        for inst in self.arena.paradigm_values(file_pid):
            restore()
            scratch: dict[int, int] = {}
            if self.match(scheme, inst, table, scratch):
                for var, val in scratch.items():
                    saved[var] = table.raw_state(var)
                    table.bind(var, val)
                yield scratch

    def search_left(self, a2: int, a3: Optional[int],
                    table: VarTable) -> Iterator[dict[int, int]]:
        """Spec-level left-part search: file matches filtered by A3."""
        braced, scheme, pid = self.resolve_file(a2, table)
        for bindings in self.search_file(pid, scheme, table):
            if a3 is not None and self.eval_condition(a3, table) != 1:
                continue
            yield bindings

    def file_sort_key(self, scheme: int) -> Optional[Callable[[int], object]]:
        """Instances order by the value bound to the scheme's first
        variable, honoring that variable's ordering sign."""
        path = self._first_var_path(scheme)
        if path is None:
            return None

        def key(inst: int):
            node = inst
            for idx in path:
                refs = self.arena.node(node).inverse_refs
                if idx >= len(refs):
                    return (2,)
                node = refs[idx]
            return self.arena.order_key(node)
        return key

    def _first_var_path(self, rid: int,
                        path: tuple = ()) -> Optional[tuple]:
        a = self.arena
        if a.is_variable(rid):
            return path
        node = a.node(rid)
        if node.is_elementary:
            return None
        for i, c in enumerate(node.inverse_refs):
            found = self._first_var_path(c, path + (i,))
            if found is not None:
                return found
        return None

    def first_var_of(self, scheme: int) -> Optional[int]:
        path = self._first_var_path(scheme)
        if path is None:
            return None
        node = scheme
        for idx in path:
            node = self.arena.node(node).inverse_refs[idx]
        return node

    # --------------------------------------------------------- rule decoding

    @staticmethod
    def _left_slots(parts: rulelang.RuleParts) -> tuple[int, Optional[int],
                                                        Optional[int]]:
        a1 = parts.left[0]
        a2 = parts.left[1] if len(parts.left) > 1 else None
        a3 = parts.left[2] if len(parts.left) > 2 else None
        return a1, a2, a3

    # ------------------------------------------------------------- execution

    def fire_entry_rules(self, key_code: int) -> int:
        """Dispatch every left-part-absent rule for the given key code."""
        self.key = key_code
        fired = False
        try:
            for rule_id in self.all_rules():
                parts = rulelang.rule_parts(self.arena, rule_id)
                if parts.left:
                    continue
                table = VarTable(self)
                if parts.cond is not None:
                    c = self.eval_condition(parts.cond, table)
                    if c == -1:
                        return -1
                    if c != 1:
                        continue
                code = self.run_body(parts.right, table)
                if code == -1:
                    return -1
                if code == 1:
                    fired = True
        except ExitUnwind:
            return 0
        return 1 if fired else 0

    def execute_rule(self, rule_id: int,
                     table: Optional[VarTable] = None) -> int:
        """Left search (if any), condition, then the body sequence."""
        table = table or VarTable(self)
        gen = self._fire_rule(rulelang.rule_parts(self.arena, rule_id), table)
        return self._consume_bare(gen)

    def run_body(self, sentences: list[int], table: VarTable) -> int:
        for s in sentences:
            code = self.exec_bi(s, table)
            if code in (0, -1):
                return code
        return 1

    def exec_bi(self, rid: int, table: VarTable) -> int:
        return self.exec_sentence(rid, table.derive_bi())

    def exec_sentence(self, rid: int, table: VarTable) -> int:
        a = self.arena
        view = sentence_view(a, rid)
        if view.is_exec:
            return self.exec_call(rid, view, table)
        node = a.node(rid)
        if node.level == 2 and node.code == store.LIST:
            return self.exec_list(node, table)
        if node.level == 2 and node.code == store.SEQ and \
                all(a.node(c).level == 2 for c in node.inverse_refs):
            return self.run_body(list(node.inverse_refs), table)
        inst = self.instantiate(rid, table)
        return self._consume_bare(self.derive(inst, table))

    def exec_list(self, node, table: VarTable) -> int:
        """A {} list in body position: exhaustive/repeated execution."""
        a = self.arena
        success = False
        for alt in node.inverse_refs:
            view = sentence_view(a, alt)
            if view.is_exec:
                while True:   # recurrence of the operation
                    code = self.exec_call(alt, view, table.derive_bi())
                    if code == -1:
                        return -1
                    if code != 1:
                        break
                    success = True
            else:
                altnode = a.node(alt)
                if altnode.level == 2 and altnode.code == store.SEQ and \
                        all(a.node(c).level == 2
                            for c in altnode.inverse_refs):
                    code = self.run_body(list(altnode.inverse_refs),
                                         table.derive_bi())
                    if code == -1:
                        return -1
                    success |= code == 1
                    continue
                inst = self.instantiate(alt, table)
                gen = self.derive(inst, table)
                try:
                    for code in gen:
                        if code == -1:
                            return -1   # leave the list with the same code
                        if code == 1:
                            success = True
                finally:
                    gen.close()
        return 1 if success else 0

    def exec_call(self, rid: int, view: SentenceView,
                  table: VarTable) -> int:
        code = self._invoke(rid, view, table)
        if code == -1:
            return -1
        if code >= KEY_FLOOR:
            if code > KEY_FLOOR:
                self.key = code
            inst = self.instantiate(rid, table)
            gen = self.derive(inst, table)
            try:
                for c in gen:
                    if c == -1:
                        return -1
            finally:
                gen.close()
            return 1
        return code

    def _invoke(self, rid: int, view: SentenceView, table: VarTable) -> int:
        resolved = self._linkage.get(rid)
        if resolved is None:
            name = view.call_name
            bare = name[1:]
            desc = builtins_mod.REGISTRY.get(bare)
            if desc is not None:
                resolved = ("b", desc)
            elif bare in self.hosts:
                resolved = ("h", self.hosts[bare])
            else:
                raise LinkError(f"unresolved function {name!r}")
            self._linkage[rid] = resolved
        tag, fn = resolved
        if tag == "h":
            return int(fn(self, list(view.args), table))
        desc = fn
        if desc.second_level:
            if view.target is None:
                raise ArityError(f"#{desc.name} applies to a following "
                                 "sentence")
            return int(desc.fn(self, view.target, table, rid))
        if len(view.args) != desc.arity:
            raise ArityError(f"#{desc.name} takes {desc.arity} argument(s), "
                             f"got {len(view.args)}")
        return int(desc.fn(self, list(view.args), table, rid))

    def call(self, name: str, args: list[int],
             table: Optional[VarTable] = None) -> int:
        """Programmatic invocation of a builtin or host callback."""
        table = table or VarTable(self)
        bare = name.lstrip("#")
        desc = builtins_mod.REGISTRY.get(bare)
        if desc is not None:
            if desc.second_level:
                if len(args) != 1:
                    raise ArityError(f"#{bare} applies to one sentence")
                return int(desc.fn(self, args[0], table, 0))
            if len(args) != desc.arity:
                raise ArityError(f"#{bare} takes {desc.arity} argument(s), "
                                 f"got {len(args)}")
            return int(desc.fn(self, args, table, 0))
        if bare in self.hosts:
            return int(self.hosts[bare](self, args, table))
        raise LinkError(f"unresolved function {name!r}")

    # ------------------------------------------------------------ conditions

    def eval_condition(self, rid: int, table: VarTable) -> int:
        """Condition tree: ()/<> are AND, []/{} are OR; () and {} evaluate
        in record order; Ci share the caller's table."""
        a = self.arena
        view = sentence_view(a, rid)
        if view.is_exec:
            try:
                return self.exec_call(rid, view, table.derive_ci())
            except BindingError:
                return 0
        node = a.node(rid)
        if node.level == 2 and node.inverse_refs and \
                all(a.node(c).level == 2 for c in node.inverse_refs) and \
                view.named is None:
            if node.code in (store.SEQ, store.UNORDERED):
                for c in node.inverse_refs:
                    r = self.eval_condition(c, table)
                    if r != 1:
                        return r
                return 1
            for c in node.inverse_refs:
                r = self.eval_condition(c, table)
                if r == 1:
                    return 1
                if r == -1:
                    return -1
            return 0
        inst = self.instantiate(rid, table)
        return self._consume_bare(self.derive(inst, table))

    # ------------------------------------------------------------ derivation

    def derive(self, sentence: int, caller_table: VarTable
               ) -> Iterator[int]:
        """Fire every rule whose A1 matches the sentence; yields one return
        code per firing, in rule-store order."""
        a = self.arena
        for rule_id in self.all_rules():
            parts = rulelang.rule_parts(a, rule_id)
            if not parts.left:
                continue
            table = VarTable(self)
            scratch: dict[int, int] = {}
            if not self.match(parts.left[0], sentence, table, scratch):
                continue
            fingerprint = (rule_id,
                           tuple(sorted(scratch.items())))
            if fingerprint in self._stack_set:
                continue
            if len(self._stack) >= self.depth_cap:
                log.warning("derivation depth cap %d reached at rule %d",
                            self.depth_cap, rule_id)
                yield -1
                return
            self._stack.append(fingerprint)
            self._stack_set.add(fingerprint)
            try:
                for k, v in scratch.items():
                    table.bind(k, v)
                yield from self._fire_rule(parts, table)
            finally:
                self._stack.pop()
                self._stack_set.discard(fingerprint)

    def _fire_rule(self, parts: rulelang.RuleParts,
                   table: VarTable) -> Iterator[int]:
        a1, a2, a3 = (self._left_slots(parts) if parts.left
                      else (None, None, None))
        if a2 is None:
            if parts.cond is not None:
                c = self.eval_condition(parts.cond, table)
                if c == -1:
                    yield -1
                    return
                if c != 1:
                    return
            if not parts.right:
                yield 1   # data-definition rule: pure existence
                return
            yield self.run_body(parts.right, table)
            return
        braced, scheme, pid = self.resolve_file(a2, table)
        any_success = False
        matched = False
        for bindings in self.search_file(pid, scheme, table):
            if a3 is not None:
                c3 = self.eval_condition(a3, table)
                if c3 == -1:
                    yield -1
                    return
                if c3 != 1:
                    continue
            if parts.cond is not None:
                c = self.eval_condition(parts.cond, table)
                if c == -1:
                    yield -1
                    return
                if c != 1:
                    continue
            matched = True
            code = self.run_body(parts.right, table) if parts.right else 1
            if code == -1:
                yield -1
                return
            if braced:
                any_success |= code == 1
            else:
                yield code
        if braced and matched:
            yield 1 if any_success else 0

    # --------------------------------------------------------- consumption

    def _consume_bare(self, gen: Iterator[int]) -> int:
        try:
            for code in gen:
                if code == 1:
                    return 1
                if code == -1:
                    return -1
            return 0
        finally:
            if hasattr(gen, "close"):
                gen.close()

    # -------------------------------------------------------------- helpers

    def value_of(self, rid: int, table: VarTable) -> Optional[int]:
        """Resolve an argument item to its value (None when unbound)."""
        if self.arena.is_variable(rid) or rid == self.key_var:
            return table.lookup(rid)
        if self.arena.node(rid).has_vars:
            try:
                return self.instantiate(rid, table, partial=False)
            except BindingError:
                return None
        return rid

    def bind_by_name(self, name: str, value: int, table: VarTable) -> None:
        table.bind(self.arena.variable(name), value)
