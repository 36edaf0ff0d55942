"""Arena-backed relation graph.

Four levels of relations (characters/numbers, words, sentences, rules) live
in one byte arena backed by an anonymous memory map.  Every relation is
identified by its region-relative byte offset, which never changes for the
lifetime of the arena.  Offset 0 is the reserved null reference.

The on-disk snapshot format and the node record layout are documented in
docs/arena-format.md; the layout is stable across snapshot/load.
"""

from __future__ import annotations

import mmap
import os
import struct
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional

from .errors import (
    CapacityError,
    CorruptError,
    DomainError,
    FormatError,
    StructureError,
)

MAGIC = b"SHMKB\x00\x01\x00"
FORMAT_VERSION = 1

NULL = 0

# relation codes (aggregation semantics)
SEQ = 0          # ordered conjunction
UNORDERED = 1    # order-indifferent conjunction
DISJUNCTION = 2  # disjunction (paradigms live here)
LIST = 3         # list of sequences

# node kinds at levels 0-1
CONSTANT = 0
CURRENT_VAR = 1
GLOBAL_VAR = 2
WITH_VARS = 3
# node kinds at level 2
NON_EXECUTABLE = 1
EXECUTABLE = 2
# node kinds at level 3
INVERSE_RULE = 1
DIRECT_RULE = 2

# paradigm ordering policies
CHRONOLOGICAL = 0
ASCENDING = 1
DESCENDING = 2
REVERSE_CHRONOLOGICAL = 3

_POLICY_SUFFIX = {"+": ASCENDING, "-": DESCENDING, "`": REVERSE_CHRONOLOGICAL}

# node flags
F_PAYLOAD = 1    # payload field holds a scalar
F_CHAR = 2       # ... and the scalar is a character codepoint
F_VARMARK = 4    # the special variable-name marker relation
F_EMPTY = 8      # the empty level-1 relation
F_NUMBER = 16    # aggregate represents a number
F_FLOAT = 32     # ... a 64-bit real (else integer)
F_NEGATIVE = 64  # ... negated magnitude
F_MUTABLE = 128  # children may change after creation; never interned

_NODE = struct.Struct("<BBBBB3xQQQQ")   # level code kind policy flags usage payload inv dir
NODE_BYTES = _NODE.size                 # 40
_CHUNK = struct.Struct("<BxHH2xQ")      # tag capacity count next
CHUNK_HEADER = _CHUNK.size              # 16
CHUNK_TAG = 0xCC
_MAX_CHUNK = 64

INT64_MIN = -(1 << 63)
INT64_MAX = (1 << 63) - 1

DEFAULT_CAP_BYTES = 1 << 29   # 512 MiB
INITIAL_BYTES = 1 << 20


@dataclass
class Node:
    """Decoded view of one relation record (write-through to the arena)."""

    offset: int
    level: int
    code: int
    kind: int
    policy: int
    flags: int
    usage: int
    payload: int
    inverse_refs: list[int] = field(default_factory=list)  # constituents
    direct_refs: list[int] = field(default_factory=list)   # containers
    has_vars: bool = False
    # chunk bookkeeping: list of (chunk_offset, capacity) in fill order
    _inv_chunks: list[tuple[int, int]] = field(default_factory=list, repr=False)
    _dir_chunks: list[tuple[int, int]] = field(default_factory=list, repr=False)

    @property
    def is_elementary(self) -> bool:
        return bool(self.flags & F_PAYLOAD)

    @property
    def is_char(self) -> bool:
        return bool(self.flags & F_CHAR)

    @property
    def is_number(self) -> bool:
        return bool(self.flags & F_NUMBER) or (
            self.is_elementary and not self.is_char and not self.flags & F_VARMARK
        )

    @property
    def is_mutable(self) -> bool:
        return bool(self.flags & F_MUTABLE)


@dataclass
class ArenaStats:
    nodes_by_level: list[int]
    total_nodes: int
    arena_bytes: int
    mapped_bytes: int
    usage_total: int
    lookups: int


def _align8(n: int) -> int:
    return (n + 7) & ~7


class Arena:
    """The store: allocation, interning, paradigms and persistence."""

    def __init__(self, cap_bytes: int = DEFAULT_CAP_BYTES,
                 initial_bytes: int = INITIAL_BYTES):
        if cap_bytes < initial_bytes:
            raise DomainError("arena cap smaller than initial size")
        self.cap_bytes = cap_bytes
        self._mm = mmap.mmap(-1, initial_bytes)
        self._mapped = initial_bytes
        self.next_free = 8  # offset 0 is the null reference
        self.nodes: dict[int, Node] = {}
        self.named_roots: dict[str, int] = {}
        self.lookups = 0
        self._counts = [0, 0, 0, 0]
        # interning indexes (rebuilt on load)
        self._chars: dict[int, int] = {}
        self._elems: dict[int, int] = {}
        self._numbers: dict[tuple, int] = {}
        self._shapes: dict[tuple, int] = {}
        self._words: dict[str, int] = {}
        self._var_words: dict[str, int] = {}
        self._combo_text: dict[str, int] = {}
        self._paradigms: dict[int, int] = {}
        self._varmark_id = 0
        self._empty_id = 0
        self._max_combo_len = 0

    # ------------------------------------------------------------------ raw

    def _grow(self, need: int) -> None:
        size = self._mapped
        while size < need:
            size *= 2
        if size > self.cap_bytes:
            raise CapacityError(
                f"arena needs {need} bytes, cap is {self.cap_bytes}")
        new = mmap.mmap(-1, size)
        new[: self._mapped] = self._mm[: self._mapped]
        self._mm.close()
        self._mm = new
        self._mapped = size

    def _alloc(self, nbytes: int) -> int:
        nbytes = _align8(nbytes)
        off = self.next_free
        if off + nbytes > self._mapped:
            self._grow(off + nbytes)
        self.next_free = off + nbytes
        return off

    def _write_node(self, n: Node) -> None:
        _NODE.pack_into(self._mm, n.offset, n.level, n.code, n.kind,
                        n.policy, n.flags, n.usage, n.payload,
                        n._inv_chunks[0][0] if n._inv_chunks else 0,
                        n._dir_chunks[0][0] if n._dir_chunks else 0)

    def _bump_usage(self, rid: int) -> int:
        node = self.nodes[rid]
        node.usage += 1
        self.lookups += 1
        struct.pack_into("<Q", self._mm, node.offset + 8, node.usage)
        return rid

    # ------------------------------------------------------- reference lists

    def _new_chunk(self, capacity: int) -> int:
        off = self._alloc(CHUNK_HEADER + 8 * capacity)
        _CHUNK.pack_into(self._mm, off, CHUNK_TAG, capacity, 0, 0)
        return off

    def _chunks_for(self, node: Node, which: str) -> list[tuple[int, int]]:
        return node._inv_chunks if which == "inv" else node._dir_chunks

    def _write_refs(self, node: Node, which: str, refs: list[int]) -> None:
        """Rewrite a whole reference list, allocating chunks as needed."""
        chunks = self._chunks_for(node, which)
        total = sum(cap for _, cap in chunks)
        while total < len(refs):
            cap = min(_MAX_CHUNK, max(4, total if total else len(refs)))
            cap = min(cap, max(4, len(refs) - total))
            new_off = self._new_chunk(cap)
            if chunks:
                prev_off, _ = chunks[-1]
                struct.pack_into("<Q", self._mm, prev_off + 8, new_off)
            chunks.append((new_off, cap))
            total += cap
        i = 0
        for off, cap in chunks:
            n_here = min(cap, max(0, len(refs) - i))
            struct.pack_into("<H", self._mm, off + 4, n_here)
            for j in range(n_here):
                struct.pack_into("<Q", self._mm, off + CHUNK_HEADER + 8 * j,
                                 refs[i + j])
            i += n_here
        if which == "inv":
            node.inverse_refs = list(refs)
        else:
            node.direct_refs = list(refs)
        self._write_node(node)

    def _append_ref(self, node: Node, which: str, rid: int) -> None:
        refs = node.inverse_refs if which == "inv" else node.direct_refs
        chunks = self._chunks_for(node, which)
        pos = len(refs)
        total = sum(cap for _, cap in chunks)
        if pos >= total:
            cap = min(_MAX_CHUNK, max(4, total))
            new_off = self._new_chunk(cap)
            if chunks:
                struct.pack_into("<Q", self._mm, chunks[-1][0] + 8, new_off)
            chunks.append((new_off, cap))
            self._write_node(node)
        # locate the chunk that holds slot `pos`
        base = 0
        for off, cap in chunks:
            if pos < base + cap:
                local = pos - base
                struct.pack_into("<Q", self._mm, off + CHUNK_HEADER + 8 * local, rid)
                struct.pack_into("<H", self._mm, off + 4, local + 1)
                break
            base += cap
        refs.append(rid)

    # ---------------------------------------------------------- node creation

    def _new_node(self, level: int, code: int, kind: int, policy: int,
                  flags: int, payload: int, children: list[int]) -> Node:
        off = self._alloc(NODE_BYTES)
        node = Node(off, level, code, kind, policy, flags, 0, payload)
        self.nodes[off] = node
        self._counts[level] += 1
        self._write_node(node)
        if children:
            self._write_refs(node, "inv", list(children))
            for c in children:
                self._append_ref(self.nodes[c], "dir", off)
        node.has_vars = self._compute_has_vars(node)
        return node

    def _compute_has_vars(self, node: Node) -> bool:
        if node.level <= 1 and node.kind in (CURRENT_VAR, GLOBAL_VAR, WITH_VARS):
            return True
        return any(self.nodes[c].has_vars for c in node.inverse_refs)

    def node(self, rid: int) -> Node:
        try:
            return self.nodes[rid]
        except KeyError:
            raise DomainError(f"unknown relation id {rid}") from None

    # ------------------------------------------------------------- level 0/1

    def varmark(self) -> int:
        """The special elementary relation that marks variable names."""
        if not self._varmark_id:
            self._varmark_id = self._new_node(
                0, SEQ, CURRENT_VAR, 0, F_VARMARK, 0, []).offset
        return self._varmark_id

    def empty_relation(self) -> int:
        """The unique empty relation of the 1st level."""
        if not self._empty_id:
            self._empty_id = self._new_node(
                1, SEQ, CONSTANT, 0, F_EMPTY, 0, []).offset
        return self._empty_id

    def intern_char(self, ch: str | int) -> int:
        cp = ord(ch) if isinstance(ch, str) else ch
        if not 0 <= cp <= 0x10FFFF:
            raise DomainError(f"not a Unicode scalar: {cp!r}")
        hit = self._chars.get(cp)
        if hit is not None:
            return self._bump_usage(hit)
        node = self._new_node(0, SEQ, CONSTANT, 0, F_PAYLOAD | F_CHAR, cp, [])
        self._chars[cp] = node.offset
        return node.offset

    def _intern_elem(self, v: int) -> int:
        hit = self._elems.get(v)
        if hit is not None:
            return self._bump_usage(hit)
        node = self._new_node(0, SEQ, CONSTANT, 0, F_PAYLOAD, v, [])
        self._elems[v] = node.offset
        return node.offset

    def intern_number(self, value: int | float) -> int:
        """Unique relation for a 64-bit integer or real.

        Numbers are digit sequences over elementary numbers 0x00-0xFF,
        created rightmost digit first, non-significant zeros suppressed.
        Reals with an integral value in signed-64 range collapse to the
        integer relation.
        """
        if isinstance(value, bool):
            value = int(value)
        if isinstance(value, float):
            if value != value or value in (float("inf"), float("-inf")):
                raise DomainError(f"non-finite real: {value!r}")
            if value.is_integer() and INT64_MIN <= value <= INT64_MAX:
                value = int(value)
            else:
                return self._intern_float(value)
        if isinstance(value, int):
            if not INT64_MIN <= value <= INT64_MAX:
                raise DomainError(f"integer out of 64-bit range: {value}")
            key = ("i", value)
            hit = self._numbers.get(key)
            if hit is not None:
                return self._bump_usage(hit)
            neg = value < 0
            mag = -value if neg else value
            digits = []
            while True:  # rightmost digit first
                digits.append(mag & 0xFF)
                mag >>= 8
                if not mag:
                    break
            if not neg and len(digits) == 1:
                rid = self._intern_elem(digits[0])
                self._numbers[key] = rid
                return rid
            children = [self._intern_elem(d) for d in digits]
            flags = F_NUMBER | (F_NEGATIVE if neg else 0)
            node = self._new_node(0, SEQ, CONSTANT, 0, flags, 0, children)
            self._numbers[key] = node.offset
            return node.offset
        raise DomainError(f"unsupported number type: {type(value).__name__}")

    def _intern_float(self, value: float) -> int:
        key = ("f", struct.pack("<d", value))
        hit = self._numbers.get(key)
        if hit is not None:
            return self._bump_usage(hit)
        raw = struct.pack("<d", value)
        digits = list(raw)
        while len(digits) > 1 and digits[-1] == 0:  # suppress high-order zeros
            digits.pop()
        children = [self._intern_elem(d) for d in digits]
        node = self._new_node(0, SEQ, CONSTANT, 0, F_NUMBER | F_FLOAT, 0, children)
        self._numbers[key] = node.offset
        return node.offset

    def intern_real(self, value: float) -> int:
        if value != value or value in (float("inf"), float("-inf")):
            raise DomainError(f"non-finite real: {value!r}")
        if float(value).is_integer() and INT64_MIN <= value <= INT64_MAX:
            return self.intern_number(int(value))
        return self._intern_float(float(value))

    def number_value(self, rid: int) -> int | float:
        node = self.node(rid)
        if node.is_elementary and not node.is_char:
            return node.payload
        if not node.flags & F_NUMBER:
            raise DomainError(f"relation {rid} is not a number")
        digits = [self.nodes[c].payload for c in node.inverse_refs]
        if node.flags & F_FLOAT:
            raw = bytes(digits) + b"\x00" * (8 - len(digits))
            return struct.unpack("<d", raw)[0]
        mag = 0
        for i, d in enumerate(digits):
            mag |= d << (8 * i)
        return -mag if node.flags & F_NEGATIVE else mag

    def is_number(self, rid: int) -> bool:
        return self.node(rid).is_number

    # words ----------------------------------------------------------------

    @staticmethod
    def _normalize_word(text: str) -> str:
        stripped = text.rstrip(" ")
        return stripped or text  # keep all-blank words (§9 uses ' ')

    def intern_word(self, text: str) -> int:
        """Unique level-1 word over a level-0 character structure.

        Greedy left-to-right convolution: at each position the longest
        already-interned character combination is reused.
        """
        if not text:
            raise DomainError("empty word")
        text = self._normalize_word(text)
        hit = self._words.get(text)
        if hit is not None:
            return self._bump_usage(hit)
        units: list[int] = []
        i = 0
        n = len(text)
        while i < n:
            best = None
            limit = min(self._max_combo_len, n - i)
            for length in range(limit, 1, -1):
                cand = self._combo_text.get(text[i:i + length])
                if cand is not None:
                    best = (cand, length)
                    break
            if best is None:
                units.append(self.intern_char(text[i]))
                i += 1
            else:
                units.append(best[0])
                i += best[1]
        if len(units) == 1:
            structure = units[0]
        else:
            structure = self.make_relation(SEQ, units, level=0)
        word = self._new_node(1, SEQ, CONSTANT, 0, 0, 0, [structure])
        self._words[text] = word.offset
        self._shapes[self._shape_key(1, SEQ, CONSTANT, 0, [structure])] = \
            word.offset
        return word.offset

    def word_text(self, rid: int) -> str:
        node = self.node(rid)
        if node.flags & F_EMPTY:
            return ""
        if node.level != 1 or not node.inverse_refs:
            raise DomainError(f"relation {rid} is not a word")
        return self._flatten_text(node.inverse_refs[0])

    def _flatten_text(self, rid: int) -> str:
        node = self.nodes[rid]
        if node.flags & F_VARMARK:
            return ""
        if node.is_elementary:
            return chr(node.payload) if node.is_char else str(node.payload)
        return "".join(self._flatten_text(c) for c in node.inverse_refs)

    def is_word(self, rid: int) -> bool:
        node = self.node(rid)
        if node.flags & F_EMPTY:
            return True
        return (node.level == 1 and node.code == SEQ
                and len(node.inverse_refs) == 1
                and self.nodes[node.inverse_refs[0]].level == 0)

    # variable words and paradigms -----------------------------------------

    def intern_var_word(self, name: str) -> int:
        """Level-1 word marked as a variable name (distinct from constants)."""
        if not name:
            raise DomainError("empty variable name")
        hit = self._var_words.get(name)
        if hit is not None:
            return self._bump_usage(hit)
        children = [self.varmark()] + [self.intern_char(c) for c in name]
        combo = self._new_node(0, SEQ, WITH_VARS, 0, 0, 0, children)
        self._shapes[self._shape_key(0, SEQ, WITH_VARS, 0, children)] = \
            combo.offset
        word = self._new_node(1, SEQ, WITH_VARS, 0, 0, 0, [combo.offset])
        self._shapes[self._shape_key(1, SEQ, WITH_VARS, 0, [combo.offset])] = \
            word.offset
        self._var_words[name] = word.offset
        return word.offset

    def var_word_name(self, rid: int) -> str:
        node = self.node(rid)
        combo = self.nodes[node.inverse_refs[0]]
        return "".join(chr(self.nodes[c].payload)
                       for c in combo.inverse_refs
                       if not self.nodes[c].flags & F_VARMARK)

    @staticmethod
    def policy_for_name(name: str) -> int:
        return _POLICY_SUFFIX.get(name[-1], CHRONOLOGICAL) if name else CHRONOLOGICAL

    def variable(self, name: str) -> int:
        """The paradigm relation for a named variable (created on demand)."""
        word = self.intern_var_word(name)
        kind = GLOBAL_VAR if name[0].isupper() else CURRENT_VAR
        return self.make_paradigm(word, policy=self.policy_for_name(name),
                                  kind=kind)

    def is_variable(self, rid: int) -> bool:
        node = self.node(rid)
        return (node.level == 1 and node.code == DISJUNCTION
                and node.kind in (CURRENT_VAR, GLOBAL_VAR))

    def variable_name(self, pid: int) -> str:
        return self.var_word_name(self.paradigm_defining(pid))

    # paradigms --------------------------------------------------------------

    def make_paradigm(self, defining: int, policy: int = CHRONOLOGICAL,
                      kind: Optional[int] = None) -> int:
        hit = self._paradigms.get(defining)
        if hit is not None:
            return self._bump_usage(hit)
        dnode = self.node(defining)
        if kind is None:
            kind = NON_EXECUTABLE if dnode.level == 2 else CURRENT_VAR
        level = dnode.level if dnode.level >= 1 else 1
        node = self._new_node(level, DISJUNCTION, kind, policy,
                              F_MUTABLE, 0, [defining])
        self._paradigms[defining] = node.offset
        return node.offset

    def paradigm_for(self, defining: int) -> Optional[int]:
        return self._paradigms.get(defining)

    def is_paradigm(self, rid: int) -> bool:
        node = self.node(rid)
        return (node.code == DISJUNCTION and node.is_mutable
                and bool(node.inverse_refs))

    def paradigm_defining(self, pid: int) -> int:
        node = self.node(pid)
        if not self.is_paradigm(pid):
            raise StructureError(f"relation {pid} is not a paradigm")
        return node.inverse_refs[0]

    def paradigm_values(self, pid: int) -> list[int]:
        node = self.node(pid)
        if not self.is_paradigm(pid):
            raise StructureError(f"relation {pid} is not a paradigm")
        return node.inverse_refs[1:]

    def order_key(self, rid: int):
        node = self.node(rid)
        if node.is_number:
            return (0, self.number_value(rid))
        return (1, self.text_of(rid))

    def paradigm_insert(self, pid: int, value: int,
                        sort_key: Optional[Callable[[int], object]] = None) -> None:
        node = self.node(pid)
        if node.code != DISJUNCTION or not node.inverse_refs:
            raise StructureError(f"relation {pid} is not a paradigm")
        self.node(value)
        values = node.inverse_refs[1:]
        if value in values:
            return
        policy = node.policy
        if policy == CHRONOLOGICAL:
            values.append(value)
        elif policy == REVERSE_CHRONOLOGICAL:
            values.insert(0, value)
        else:
            keyf = sort_key or self.order_key
            k = keyf(value)
            idx = len(values)
            for i, v in enumerate(values):
                kv = keyf(v)
                if (policy == ASCENDING and kv > k) or \
                   (policy == DESCENDING and kv < k):
                    idx = i
                    break
            values.insert(idx, value)
        self._write_refs(node, "inv", [node.inverse_refs[0]] + values)
        self._append_ref(self.nodes[value], "dir", pid)

    def paradigm_remove(self, pid: int, value: int) -> bool:
        node = self.node(pid)
        values = node.inverse_refs[1:]
        if value not in values:
            return False
        values.remove(value)
        self._write_refs(node, "inv", [node.inverse_refs[0]] + values)
        vnode = self.nodes[value]
        refs = list(vnode.direct_refs)
        refs.remove(pid)
        self._write_refs(vnode, "dir", refs)
        return True

    # general aggregates ------------------------------------------------------

    def _shape_key(self, level: int, code: int, kind: int, policy: int,
                   children: Iterable[int]) -> tuple:
        canon = tuple(sorted(children)) if code in (UNORDERED, DISJUNCTION) \
            else tuple(children)
        return (level, code, kind, policy, canon)

    def _validate_children(self, code: int, children: list[int],
                           level: Optional[int]) -> int:
        if not children:
            raise StructureError("a relation needs at least one constituent")
        if code not in (SEQ, UNORDERED, DISJUNCTION, LIST):
            raise StructureError(f"bad relation code {code}")
        clevels = [self.node(c).level for c in children]
        lvl = level if level is not None else max(clevels)
        if lvl > 3:
            raise StructureError("no levels above 3")
        for cl in clevels:
            if cl not in (lvl, lvl - 1):
                raise StructureError(
                    f"constituent level {cl} illegal inside level {lvl}")
        return lvl

    def _default_kind(self, level: int, children: list[int]) -> int:
        if level <= 1:
            for c in children:
                if self.nodes[c].has_vars:
                    return WITH_VARS
            return CONSTANT
        if level == 2:
            return NON_EXECUTABLE
        return 0

    def make_relation(self, code: int, children: list[int], *,
                      level: Optional[int] = None,
                      kind: Optional[int] = None,
                      policy: int = 0) -> int:
        """Create (or return the existing) aggregate with the given code.

        Codes 1 and 2 have order-insensitive identity.  Paradigms are not
        created here; see make_paradigm.
        """
        lvl = self._validate_children(code, children, level)
        knd = kind if kind is not None else self._default_kind(lvl, children)
        key = self._shape_key(lvl, code, knd, policy, children)
        hit = self._shapes.get(key)
        if hit is not None:
            return self._bump_usage(hit)
        node = self._new_node(lvl, code, knd, policy, 0, 0, list(children))
        self._shapes[key] = node.offset
        self._register_combo(node)
        return node.offset

    def find_relation(self, code: int, children: list[int], *,
                      level: Optional[int] = None,
                      kind: Optional[int] = None,
                      policy: int = 0) -> Optional[int]:
        """Pure lookup of an aggregate: the existing id or None, never
        creating anything (read-only paths use this)."""
        try:
            lvl = self._validate_children(code, children, level)
        except StructureError:
            return None
        knd = kind if kind is not None else self._default_kind(lvl, children)
        return self._shapes.get(self._shape_key(lvl, code, knd, policy,
                                                children))

    def make_mutable(self, code: int, children: list[int], *,
                     level: Optional[int] = None, kind: int = 0,
                     policy: int = 0) -> int:
        """Aggregate whose children may be rewritten later (never interned).

        Unlike interned aggregates these may be empty (rule files and the
        semantic-mode files start out empty), in which case the level must
        be given explicitly.
        """
        if children:
            lvl = self._validate_children(code, children, level)
        else:
            if level is None:
                raise StructureError("empty relation needs an explicit level")
            lvl = level
        node = self._new_node(lvl, code, kind, policy, F_MUTABLE, 0,
                              list(children))
        return node.offset

    def set_children(self, rid: int, children: list[int]) -> None:
        node = self.node(rid)
        if not node.is_mutable:
            raise StructureError("cannot rewrite an interned relation")
        if children:
            self._validate_children(node.code, children, node.level)
        for old in node.inverse_refs:
            if old not in children:
                onode = self.nodes[old]
                refs = list(onode.direct_refs)
                if rid in refs:
                    refs.remove(rid)
                    self._write_refs(onode, "dir", refs)
        old_set = set(node.inverse_refs)
        self._write_refs(node, "inv", list(children))
        for c in children:
            if c not in old_set:
                self._append_ref(self.nodes[c], "dir", rid)
        node.has_vars = self._compute_has_vars(node)

    def set_policy_byte(self, rid: int, value: int) -> None:
        node = self.node(rid)
        node.policy = value
        self._write_node(node)

    def _register_combo(self, node: Node) -> None:
        if node.level != 0 or node.code != SEQ or node.is_elementary:
            return
        leaves: list[int] = []
        stack = list(node.inverse_refs)
        while stack:
            c = self.nodes[stack.pop(0)]
            if c.flags & F_VARMARK:
                return
            if c.is_elementary:
                if not c.is_char:
                    return  # digit combos are numbers, not text
                leaves.append(c.payload)
            else:
                stack = list(c.inverse_refs) + stack
        text = "".join(chr(p) for p in leaves)
        self._combo_text.setdefault(text, node.offset)
        if len(text) > self._max_combo_len:
            self._max_combo_len = len(text)

    # ------------------------------------------------------------- rendering

    def text_of(self, rid: int) -> str:
        """Human-readable rendering of a relation's value."""
        node = self.node(rid)
        if node.flags & F_EMPTY:
            return ""
        if node.is_number:
            v = self.number_value(rid)
            return repr(v) if isinstance(v, float) else str(v)
        if node.is_char:
            return chr(node.payload)
        if self.is_variable(rid):
            return self.variable_name(rid)
        if self.is_word(rid):
            return self.word_text(rid)
        if node.level == 0:
            return self._flatten_text(rid)
        opener, closer = {SEQ: ("(", ")"), UNORDERED: ("<", ">"),
                          DISJUNCTION: ("[", "]"), LIST: ("{", "}")}[node.code]
        inner = " ".join(self.text_of(c) for c in node.inverse_refs)
        return f"{opener} {inner} {closer}" if inner else f"{opener}{closer}"

    def sentence_text(self, rid: int) -> str:
        """Render a word combination as plain text (collocations in parens)."""
        node = self.node(rid)
        if self.is_word(rid):
            return self.word_text(rid)
        if node.flags & F_EMPTY:
            return ""
        parts = []
        for c in node.inverse_refs:
            cnode = self.nodes[c]
            if self.is_word(c) or cnode.is_number or self.is_variable(c):
                parts.append(self.text_of(c))
            elif cnode.code == LIST:
                parts.append("{ " + " ".join(
                    self.sentence_text(x) for x in cnode.inverse_refs) + " }")
            else:
                parts.append("( " + self.sentence_text(c) + " )")
        return " ".join(parts)

    # ----------------------------------------------------------- named roots

    def set_root(self, name: str, rid: int) -> None:
        if rid:
            self.node(rid)
        self.named_roots[name] = rid

    def get_root(self, name: str) -> Optional[int]:
        return self.named_roots.get(name)

    # ------------------------------------------------------------ persistence

    def snapshot(self, path: str | os.PathLike) -> None:
        """Write the arena to a file; load() restores identical ids."""
        path = os.fspath(path)
        tmp = path + ".tmp"
        with open(tmp, "wb") as f:
            f.write(MAGIC)
            f.write(struct.pack("<I", FORMAT_VERSION))
            f.write(struct.pack("<Q", self.next_free))
            roots = sorted(self.named_roots.items())
            f.write(struct.pack("<I", len(roots)))
            for name, rid in roots:
                raw = name.encode("utf-8")
                f.write(struct.pack("<H", len(raw)))
                f.write(raw)
                f.write(struct.pack("<Q", rid))
            f.write(self._mm[: self.next_free])
        os.replace(tmp, path)

    @classmethod
    def load(cls, path: str | os.PathLike,
             cap_bytes: int = DEFAULT_CAP_BYTES) -> "Arena":
        path = os.fspath(path)
        with open(path, "rb") as f:
            data = f.read()
        if len(data) < len(MAGIC) + 12 or data[: len(MAGIC)] != MAGIC:
            raise FormatError(f"{path}: bad magic")
        pos = len(MAGIC)
        (version,) = struct.unpack_from("<I", data, pos)
        pos += 4
        if version != FORMAT_VERSION:
            raise FormatError(f"{path}: unsupported format version {version}")
        (next_free,) = struct.unpack_from("<Q", data, pos)
        pos += 8
        (nroots,) = struct.unpack_from("<I", data, pos)
        pos += 4
        roots: dict[str, int] = {}
        for _ in range(nroots):
            if pos + 2 > len(data):
                raise CorruptError(f"{path}: truncated root table")
            (nlen,) = struct.unpack_from("<H", data, pos)
            pos += 2
            name = data[pos: pos + nlen].decode("utf-8")
            pos += nlen
            (rid,) = struct.unpack_from("<Q", data, pos)
            pos += 8
            roots[name] = rid
        region = data[pos:]
        if len(region) < next_free:
            raise CorruptError(f"{path}: region truncated "
                               f"({len(region)} < {next_free})")
        size = INITIAL_BYTES
        while size < next_free:
            size *= 2
        if size > cap_bytes:
            raise CapacityError(f"{path}: arena larger than cap")
        arena = cls(cap_bytes=cap_bytes, initial_bytes=size)
        arena._mm[:next_free] = region[:next_free]
        arena.next_free = next_free
        arena.named_roots = roots
        arena._rebuild()
        return arena

    def _rebuild(self) -> None:
        """Rescan the region: decode records, rebuild every index."""
        chunks: dict[int, tuple[int, int, int, list[int]]] = {}
        order: list[int] = []
        off = 8
        while off < self.next_free:
            tag = self._mm[off]
            if tag == CHUNK_TAG:
                _, cap, count, nxt = _CHUNK.unpack_from(self._mm, off)
                slots = [struct.unpack_from("<Q", self._mm,
                                            off + CHUNK_HEADER + 8 * i)[0]
                         for i in range(count)]
                chunks[off] = (cap, count, nxt, slots)
                off += CHUNK_HEADER + 8 * cap
            elif tag <= 3:
                level, code, kind, policy, flags, usage, payload, inv, dr = \
                    _NODE.unpack_from(self._mm, off)
                node = Node(off, level, code, kind, policy, flags, usage,
                            payload)
                node._inv_head = inv  # type: ignore[attr-defined]
                node._dir_head = dr   # type: ignore[attr-defined]
                self.nodes[off] = node
                order.append(off)
                self._counts[level] += 1
                off += NODE_BYTES
            else:
                raise CorruptError(f"unrecognized record tag {tag} at {off}")
        for rid in order:
            node = self.nodes[rid]
            for which, head in (("inv", node._inv_head),   # type: ignore
                                ("dir", node._dir_head)):  # type: ignore
                refs: list[int] = []
                clist: list[tuple[int, int]] = []
                cur = head
                while cur:
                    if cur not in chunks:
                        raise CorruptError(f"dangling chunk pointer {cur}")
                    cap, _count, nxt, slots = chunks[cur]
                    refs.extend(slots)
                    clist.append((cur, cap))
                    cur = nxt
                if which == "inv":
                    node.inverse_refs = refs
                    node._inv_chunks = clist
                else:
                    node.direct_refs = refs
                    node._dir_chunks = clist
        memo: dict[int, bool] = {}

        def hv(rid: int) -> bool:
            if rid in memo:
                return memo[rid]
            memo[rid] = False  # cycle guard
            n = self.nodes[rid]
            if n.level <= 1 and n.kind in (CURRENT_VAR, GLOBAL_VAR, WITH_VARS):
                memo[rid] = True
            else:
                memo[rid] = any(hv(c) for c in n.inverse_refs)
            return memo[rid]

        for rid in order:
            node = self.nodes[rid]
            node.has_vars = hv(rid)
            if node.flags & F_VARMARK:
                self._varmark_id = rid
            elif node.flags & F_EMPTY:
                self._empty_id = rid
            elif node.is_elementary:
                if node.is_char:
                    self._chars[node.payload] = rid
                else:
                    self._elems[node.payload] = rid
                    self._numbers[("i", node.payload)] = rid
            elif node.is_mutable:
                if node.code == DISJUNCTION and node.inverse_refs:
                    d = self.nodes[node.inverse_refs[0]]
                    is_var_def = d.level == 1 and d.kind == WITH_VARS
                    if is_var_def or d.level == 2:
                        self._paradigms[node.inverse_refs[0]] = rid
                        if is_var_def:
                            self._var_words.setdefault(
                                self.var_word_name(node.inverse_refs[0]),
                                node.inverse_refs[0])
            else:
                key = self._shape_key(node.level, node.code, node.kind,
                                      node.policy, node.inverse_refs)
                self._shapes.setdefault(key, rid)
                if node.flags & F_NUMBER:
                    v = self.number_value(rid)
                    k = ("f", struct.pack("<d", v)) if node.flags & F_FLOAT \
                        else ("i", v)
                    self._numbers.setdefault(k, rid)
                elif node.level == 0:
                    self._register_combo(node)
                elif (node.level == 1 and node.code == SEQ
                        and len(node.inverse_refs) == 1
                        and self.nodes[node.inverse_refs[0]].level == 0):
                    child = self.nodes[node.inverse_refs[0]]
                    if node.kind == WITH_VARS:
                        self._var_words.setdefault(self.var_word_name(rid), rid)
                    elif not (child.flags & F_VARMARK):
                        self._words.setdefault(
                            self._flatten_text(child.offset), rid)

    # ---------------------------------------------------------------- stats

    def stats(self) -> ArenaStats:
        usage_total = sum(n.usage for n in self.nodes.values())
        return ArenaStats(
            nodes_by_level=list(self._counts),
            total_nodes=len(self.nodes),
            arena_bytes=self.next_free,
            mapped_bytes=self._mapped,
            usage_total=usage_total,
            lookups=self.lookups,
        )

    def check_duality(self) -> None:
        """Full-traversal check of the reference duality invariant."""
        for rid, node in self.nodes.items():
            for c in node.inverse_refs:
                if rid not in self.nodes[c].direct_refs:
                    raise StructureError(
                        f"duality broken: {rid} -> {c} has no back edge")
            for p in node.direct_refs:
                if rid not in self.nodes[p].inverse_refs:
                    raise StructureError(
                        f"duality broken: {rid} <- {p} has no forward edge")
