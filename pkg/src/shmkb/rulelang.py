"""The rule-record language: tokenizer, parser and translator.

A rule file is UTF-8 text of `A -> B | C ;` rules plus `NAME = tokens ;`
substitutions.  Translation maps each rule onto interned level-3 relations
in the arena; a RuleFile relation aggregates the rules together with the
source path and its modification time, so unchanged files are never
re-translated.
"""

from __future__ import annotations

import os
import re
from dataclasses import dataclass, field
from typing import Optional, Union

from . import store
from .errors import DomainError, LexError, ParseError, StaleSourceError
from .store import Arena

# token kinds
WORD = "word"
QWORD = "qword"          # '...' one constant word
QSEQ = "qseq"            # "..." constant word sequence
FUNC = "func"            # #name
NONEXEC = "nonexec"      # $name
SEP = "sep"
OP = "op"
OPEN = "open"
CLOSE = "close"
RULE_END = "end"
ARROW = "arrow"
BAR = "bar"

SEPARATOR_CHARS = set('!"(),/;=<>?\\[]{|}')
TWO_CHAR = {"==", "!=", ":=", "+=", "-=", ">=", "<=", "->"}
BRACKET_OPEN = {"(": 0, "<": 1, "[": 2, "{": 3}
BRACKET_CLOSE = {")": 0, ">": 1, "]": 2, "}": 3}

OP_BUILTIN = {"==": "#Eq", "!=": "#Ne", ":=": "#Fix", "+=": "#Inc",
              "-=": "#Dec", ">=": "#Ge", "<=": "#Le"}

# rule part-presence mask, stored in the node's policy byte
M_LEFT = 1
M_RIGHT = 2
M_COND = 4

_INT_RE = re.compile(r"[+-]?[0-9]+\Z")
_HEX_RE = re.compile(r"[+-]?0[xX][0-9a-fA-F]+\Z")
_FLOAT_RE = re.compile(
    r"[+-]?([0-9]+\.[0-9]*|\.[0-9]+|[0-9]+)([eE][+-]?[0-9]+)?\Z")


def parse_number_text(text: str) -> Optional[int | float]:
    """C-style external number formats; octal for 0-leading digit runs."""
    if _HEX_RE.fullmatch(text):
        return int(text, 16)
    if _INT_RE.fullmatch(text):
        body = text.lstrip("+-")
        if len(body) > 1 and body[0] == "0" and all(c in "01234567"
                                                    for c in body):
            sign = -1 if text[0] == "-" else 1
            return sign * int(body, 8)
        return int(text, 10)
    if ("." in text or "e" in text or "E" in text) and \
            _FLOAT_RE.fullmatch(text):
        try:
            return float(text)
        except ValueError:
            return None
    return None


@dataclass
class Token:
    kind: str
    text: str
    line: int
    col: int
    start: int
    end: int
    code: int = -1  # bracket code for open/close


def tokenize(text: str) -> list[Token]:
    """Split rule text into tokens; every byte lands in exactly one token
    or is skipped as whitespace/comment."""
    tokens: list[Token] = []
    i, n = 0, len(text)
    line, col = 1, 1

    def advance(upto: int) -> None:
        nonlocal i, line, col
        while i < upto:
            if text[i] == "\n":
                line += 1
                col = 1
            else:
                col += 1
            i += 1

    def emit(kind: str, start: int, end: int, sline: int, scol: int,
             tok_text: Optional[str] = None, code: int = -1) -> None:
        tokens.append(Token(kind, text[start:end] if tok_text is None
                            else tok_text, sline, scol, start, end, code))

    while i < n:
        c = text[i]
        if c.isspace():
            advance(i + 1)
            continue
        sline, scol, start = line, col, i
        if c == "/" and text[i + 1:i + 2] == "*":
            close = text.find("*/", i + 2)
            if close < 0:
                raise LexError("unterminated comment", sline, scol)
            advance(close + 2)
            continue
        pair = text[i:i + 2]
        if pair in TWO_CHAR:
            advance(i + 2)
            emit(ARROW if pair == "->" else OP, start, i, sline, scol)
            continue
        if c == "'":
            close = text.find("'", i + 1)
            if close < 0:
                raise LexError("unterminated quote", sline, scol)
            advance(close + 1)
            emit(QWORD, start, i, sline, scol, tok_text=text[start + 1:i - 1])
            continue
        if c == '"':
            close = text.find('"', i + 1)
            if close < 0:
                raise LexError("unterminated quote", sline, scol)
            advance(close + 1)
            emit(QSEQ, start, i, sline, scol, tok_text=text[start + 1:i - 1])
            continue
        if c in SEPARATOR_CHARS:
            advance(i + 1)
            if c == ";":
                emit(RULE_END, start, i, sline, scol)
            elif c == "|":
                emit(BAR, start, i, sline, scol)
            elif c in BRACKET_OPEN:
                emit(OPEN, start, i, sline, scol, code=BRACKET_OPEN[c])
            elif c in BRACKET_CLOSE:
                emit(CLOSE, start, i, sline, scol, code=BRACKET_CLOSE[c])
            else:
                emit(SEP, start, i, sline, scol)
            continue
        # word: runs until whitespace, separator, quote or two-char operator
        j = i
        while j < n:
            cj = text[j]
            if cj.isspace() or cj in SEPARATOR_CHARS or cj in "'\"":
                break
            if text[j:j + 2] in TWO_CHAR:
                break
            if cj == "/" and text[j + 1:j + 2] == "*":
                break
            j += 1
        advance(j)
        word = text[start:j]
        kind = FUNC if word.startswith("#") else \
            NONEXEC if word.startswith("$") else WORD
        emit(kind, start, j, sline, scol)
    return tokens


# --------------------------------------------------------------------- AST


@dataclass
class ItemWord:
    text: str
    quoted: bool
    line: int = field(default=0, compare=False)
    col: int = field(default=0, compare=False)


@dataclass
class ItemNumber:
    value: Union[int, float]


@dataclass
class ItemQSeq:
    text: str


@dataclass
class ItemGroup:
    code: int
    items: list = field(default_factory=list)


Item = Union[ItemWord, ItemNumber, ItemQSeq, ItemGroup]


@dataclass
class CallSentence:
    name: str                     # includes the leading '#'
    args: list = field(default_factory=list)
    target: Optional["Sentence"] = None   # second-level form


@dataclass
class NamedSentence:
    name: str                     # includes the leading '$'
    args: list = field(default_factory=list)


@dataclass
class DataSentence:
    code: int
    items: list = field(default_factory=list)


@dataclass
class AggSentence:
    code: int
    members: list = field(default_factory=list)


Sentence = Union[CallSentence, NamedSentence, DataSentence, AggSentence]


@dataclass
class RuleAst:
    left: list = field(default_factory=list)
    right: list = field(default_factory=list)
    cond: Optional[Sentence] = None
    has_left: bool = False
    has_right: bool = False


class _Cursor:
    def __init__(self, tokens: list[Token]):
        self.tokens = tokens
        self.pos = 0

    def peek(self) -> Optional[Token]:
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def next(self) -> Token:
        tok = self.peek()
        if tok is None:
            last = self.tokens[-1] if self.tokens else Token(
                RULE_END, ";", 1, 1, 0, 0)
            raise ParseError("unexpected end of rule", last.line, last.col)
        self.pos += 1
        return tok

    def done(self) -> bool:
        return self.pos >= len(self.tokens)


def _where(tok: Optional[Token]) -> tuple[int, int]:
    return (tok.line, tok.col) if tok else (0, 0)


def _split_top(tokens: list[Token], kinds: tuple[str, ...]) -> list[list[Token]]:
    """Split a token list at depth-0 tokens of the given kinds (commas etc.)."""
    parts: list[list[Token]] = [[]]
    depth = 0
    for tok in tokens:
        if tok.kind == OPEN:
            depth += 1
        elif tok.kind == CLOSE:
            depth -= 1
        if depth == 0 and tok.kind in kinds:
            parts.append([])
        else:
            parts[-1].append(tok)
    return parts


def _atom_item(tok: Token) -> Item:
    if tok.kind == QWORD:
        num = parse_number_text(tok.text)
        if num is not None:
            return ItemNumber(num)
        return ItemWord(tok.text, quoted=True, line=tok.line, col=tok.col)
    if tok.kind == QSEQ:
        return ItemQSeq(tok.text)
    if tok.kind == WORD:
        num = parse_number_text(tok.text)
        if num is not None:
            return ItemNumber(num)
        return ItemWord(tok.text, quoted=False, line=tok.line, col=tok.col)
    raise ParseError(f"unexpected token {tok.text!r}", tok.line, tok.col)


def _parse_item(cur: _Cursor) -> Item:
    tok = cur.next()
    if tok.kind == OPEN:
        items: list[Item] = []
        while True:
            nxt = cur.peek()
            if nxt is None:
                raise ParseError("unbalanced brackets", tok.line, tok.col)
            if nxt.kind == CLOSE:
                cur.next()
                if nxt.code != tok.code:
                    raise ParseError("mismatched brackets", nxt.line, nxt.col)
                return ItemGroup(tok.code, items)
            if nxt.kind == SEP and nxt.text == ",":
                cur.next()
                continue
            items.append(_parse_item(cur))
    return _atom_item(tok)


def _parse_args(cur: _Cursor, name_tok: Token) -> list[Item]:
    tok = cur.peek()
    if tok is None or tok.kind != OPEN or tok.code != 0:
        raise ParseError(f"{name_tok.text} needs a parenthesized "
                         "argument list", *_where(tok or name_tok))
    cur.next()
    items: list[Item] = []
    while True:
        nxt = cur.peek()
        if nxt is None:
            raise ParseError("unbalanced brackets", tok.line, tok.col)
        if nxt.kind == CLOSE:
            cur.next()
            if nxt.code != 0:
                raise ParseError("mismatched brackets", nxt.line, nxt.col)
            return items
        if nxt.kind == SEP and nxt.text == ",":
            cur.next()
            continue
        items.append(_parse_item(cur))


def _is_item(x) -> bool:
    return isinstance(x, (ItemWord, ItemNumber, ItemQSeq, ItemGroup))


def _coerce_sentence(x) -> Sentence:
    if _is_item(x):
        return DataSentence(store.SEQ, [x])
    return x


def _parse_group_sentence(cur: _Cursor, open_tok: Token) -> Sentence:
    """A bracketed group at sentence position."""
    if open_tok.code == 3:
        # braces at sentence position: a list of sentence alternatives
        members: list[Sentence] = []
        segment: list[Sentence] = []

        def flush():
            if len(segment) == 1:
                members.append(segment[0])
            elif segment:
                members.append(AggSentence(store.SEQ, list(segment)))
            segment.clear()

        while True:
            nxt = cur.peek()
            if nxt is None:
                raise ParseError("unbalanced braces", open_tok.line,
                                 open_tok.col)
            if nxt.kind == CLOSE:
                cur.next()
                if nxt.code != 3:
                    raise ParseError("mismatched brackets", nxt.line, nxt.col)
                flush()
                return AggSentence(store.LIST, members)
            if nxt.kind == SEP and nxt.text == ",":
                cur.next()
                flush()
                continue
            segment.append(parse_sentence(cur))
        # unreachable

    elements: list = []
    while True:
        nxt = cur.peek()
        if nxt is None:
            raise ParseError("unbalanced brackets", open_tok.line,
                             open_tok.col)
        if nxt.kind == CLOSE:
            cur.next()
            if nxt.code != open_tok.code:
                raise ParseError("mismatched brackets", nxt.line, nxt.col)
            break
        if nxt.kind == SEP and nxt.text == ",":
            cur.next()
            continue
        if nxt.kind == OP:
            elements.append(cur.next())
            continue
        if nxt.kind in (FUNC, NONEXEC) or (nxt.kind == SEP and
                                           nxt.text == "!"):
            elements.append(parse_sentence(cur))
        elif nxt.kind == OPEN:
            saved = cur.pos
            inner_open = cur.next()
            inner = _try_parse_inner_group(cur, inner_open)
            if inner is None:
                cur.pos = saved
                elements.append(parse_sentence(cur))
            else:
                elements.append(inner)
        else:
            elements.append(_atom_item(cur.next()))

    # operator sugar: (z1 == z2) and friends
    if len(elements) == 3 and isinstance(elements[1], Token):
        op = elements[1]
        if not (_is_item(elements[0]) and _is_item(elements[2])):
            raise ParseError("operator needs two plain operands",
                             op.line, op.col)
        return CallSentence(OP_BUILTIN[op.text], [elements[0], elements[2]])
    for el in elements:
        if isinstance(el, Token):
            raise ParseError(f"misplaced operator {el.text!r}",
                             el.line, el.col)

    if any(not _is_item(el) for el in elements):
        return AggSentence(open_tok.code,
                           [_coerce_sentence(el) for el in elements])
    return DataSentence(open_tok.code, list(elements))


def _try_parse_inner_group(cur: _Cursor, open_tok: Token):
    """Inside another group, a nested bracket is an item group unless it
    holds sentence forms; returns None to signal "parse as sentence"."""
    items: list[Item] = []
    while True:
        nxt = cur.peek()
        if nxt is None:
            raise ParseError("unbalanced brackets", open_tok.line,
                             open_tok.col)
        if nxt.kind == CLOSE:
            cur.next()
            if nxt.code != open_tok.code:
                raise ParseError("mismatched brackets", nxt.line, nxt.col)
            return ItemGroup(open_tok.code, items)
        if nxt.kind == SEP and nxt.text == ",":
            cur.next()
            continue
        if nxt.kind in (FUNC, NONEXEC, OP) or (nxt.kind == SEP and
                                               nxt.text == "!"):
            return None
        if nxt.kind == OPEN:
            saved = cur.pos
            inner_open = cur.next()
            inner = _try_parse_inner_group(cur, inner_open)
            if inner is None:
                cur.pos = saved
                return None
            items.append(inner)
        else:
            items.append(_atom_item(cur.next()))


def parse_sentence(cur: _Cursor) -> Sentence:
    tok = cur.next()
    if tok.kind == FUNC:
        name = tok.text
        if name.endswith(":"):
            target = parse_sentence(cur)
            return CallSentence(name[:-1], [], target)
        args = _parse_args(cur, tok)
        nxt = cur.peek()
        if nxt is not None and nxt.kind == WORD and nxt.text == ":":
            cur.next()
            return CallSentence(name, args, parse_sentence(cur))
        return CallSentence(name, args)
    if tok.kind == SEP and tok.text == "!":
        return CallSentence("#Not", [], parse_sentence(cur))
    if tok.kind == NONEXEC:
        name = tok.text
        args = _parse_args(cur, tok)
        return NamedSentence(name, args)
    if tok.kind == OPEN:
        return _parse_group_sentence(cur, tok)
    return DataSentence(store.SEQ, [_atom_item(tok)])


def _parse_sentence_segment(tokens: list[Token]) -> Optional[Sentence]:
    if not tokens:
        return None
    cur = _Cursor(tokens)
    collected: list[Sentence] = []
    while not cur.done():
        nxt = cur.peek()
        if nxt.kind == SEP and nxt.text == ",":
            cur.next()
            continue
        collected.append(parse_sentence(cur))
    if not collected:
        return None
    if len(collected) == 1:
        return collected[0]
    # several adjacent forms in one segment: ordered aggregate
    if all(isinstance(s, DataSentence) and len(s.items) == 1
           for s in collected):
        return DataSentence(store.SEQ, [s.items[0] for s in collected])
    return AggSentence(store.SEQ, collected)


def parse_rule(tokens: list[Token]) -> RuleAst:
    """One rule's tokens (without the terminating ';') into an AST."""
    if not tokens:
        raise ParseError("empty rule", 1, 1)
    head_tail = _split_top(tokens, (ARROW,))
    if len(head_tail) > 2:
        raise ParseError("more than one '->' in a rule",
                         tokens[0].line, tokens[0].col)
    if len(head_tail) == 1:
        raise ParseError("a rule needs '->'", tokens[0].line, tokens[0].col)
    left_tokens, rest = head_tail
    rest_parts = _split_top(rest, (BAR,))
    if len(rest_parts) > 2:
        raise ParseError("more than one '|' in a rule",
                         tokens[0].line, tokens[0].col)
    right_tokens = rest_parts[0]
    cond_tokens = rest_parts[1] if len(rest_parts) == 2 else []

    ast = RuleAst()
    left_segments = [_parse_sentence_segment(seg)
                     for seg in _split_comma(left_tokens)]
    ast.left = [s for s in left_segments if s is not None]
    ast.has_left = bool(ast.left)
    right_segments = [_parse_sentence_segment(seg)
                      for seg in _split_comma(right_tokens)]
    ast.right = [s for s in right_segments if s is not None]
    ast.has_right = bool(ast.right)
    cond_segments = [_parse_sentence_segment(seg)
                     for seg in _split_comma(cond_tokens)]
    conds = [s for s in cond_segments if s is not None]
    if conds:
        ast.cond = conds[0] if len(conds) == 1 else \
            AggSentence(store.SEQ, conds)
    if not ast.has_left and not ast.has_right:
        raise ParseError("rule with neither left nor right part",
                         tokens[0].line, tokens[0].col)
    return ast


def _split_comma(tokens: list[Token]) -> list[list[Token]]:
    parts: list[list[Token]] = [[]]
    depth = 0
    for tok in tokens:
        if tok.kind == OPEN:
            depth += 1
        elif tok.kind == CLOSE:
            depth -= 1
        if depth == 0 and tok.kind == SEP and tok.text == ",":
            parts.append([])
        else:
            parts[-1].append(tok)
    return [p for p in parts]


# ----------------------------------------------------------- substitutions


@dataclass
class Substitution:
    name: str
    replacement: list[Token]


def split_program(tokens: list[Token]) -> tuple[list[Substitution],
                                                list[list[Token]]]:
    """Separate `NAME = tokens ;` substitutions from rule token slices and
    expand substitutions (each body expanded against earlier ones)."""
    subs: dict[str, list[Token]] = {}
    order: list[Substitution] = []
    rules: list[list[Token]] = []

    def expand(toks: list[Token]) -> list[Token]:
        out: list[Token] = []
        for tok in toks:
            if tok.kind == WORD and tok.text in subs:
                out.extend(subs[tok.text])
            else:
                out.append(tok)
        return out

    slices = _split_top(tokens, (RULE_END,))
    for sl in slices:
        if not sl:
            continue
        if (len(sl) >= 2 and sl[0].kind == WORD and sl[1].kind == SEP
                and sl[1].text == "="):
            body = expand(sl[2:])
            subs[sl[0].text] = body
            order.append(Substitution(sl[0].text, body))
            continue
        rules.append(expand(sl))
    return order, rules


def parse_program(text: str) -> list[RuleAst]:
    _, slices = split_program(tokenize(text))
    return [parse_rule(sl) for sl in slices]


# ------------------------------------------------------------- translation


def phrase_rid(arena: Arena, text: str, detach_terminators: bool = False) -> int:
    """Intern a plain word sequence (double-quote / natural-text form).

    Parentheses delimit collocation sub-combinations.  With
    detach_terminators a trailing . ? ! splits off its word (natural-text
    normalization used by the semantic layer).
    """
    units = _phrase_tokens(text, detach_terminators)
    if not units:
        return arena.empty_relation()
    stack: list[list[int]] = [[]]
    for u in units:
        if u == "(":
            stack.append([])
        elif u == ")":
            if len(stack) < 2:
                raise DomainError(f"unbalanced collocation parens in {text!r}")
            group = stack.pop()
            if not group:
                continue
            stack[-1].append(arena.make_relation(store.SEQ, group, level=1))
        else:
            num = parse_number_text(u)
            if num is not None:
                stack[-1].append(arena.intern_number(num))
            else:
                stack[-1].append(arena.intern_word(u))
    if len(stack) != 1:
        raise DomainError(f"unbalanced collocation parens in {text!r}")
    if not stack[0]:
        return arena.empty_relation()
    return arena.make_relation(store.SEQ, stack[0], level=1)


def _phrase_tokens(text: str, detach_terminators: bool) -> list[str]:
    out: list[str] = []
    word = ""
    for c in text:
        if c.isspace():
            if word:
                out.append(word)
                word = ""
        elif c in "()":
            if word:
                out.append(word)
                word = ""
            out.append(c)
        elif c in SEPARATOR_CHARS:
            if word:
                out.append(word)
                word = ""
            out.append(c)
        else:
            word += c
    if word:
        out.append(word)
    if detach_terminators:
        fixed: list[str] = []
        for w in out:
            if len(w) > 1 and w[-1] in ".?!":
                fixed.append(w[:-1])
                fixed.append(w[-1])
            else:
                fixed.append(w)
        out = fixed
    return out


class Translator:
    """Maps rule ASTs onto arena relations."""

    def __init__(self, arena: Arena):
        self.arena = arena

    # items (level 0-1)

    def item_rid(self, item: Item) -> int:
        a = self.arena
        if isinstance(item, ItemNumber):
            return a.intern_number(item.value)
        if isinstance(item, ItemWord):
            if item.quoted:
                if item.text == "":
                    return a.empty_relation()
                return a.intern_word(item.text)
            return a.variable(item.text)
        if isinstance(item, ItemQSeq):
            return phrase_rid(a, item.text)
        if isinstance(item, ItemGroup):
            children = [self.item_rid(i) for i in item.items]
            if not children:
                return a.empty_relation()
            return a.make_relation(item.code, children, level=1)
        raise DomainError(f"unknown item {item!r}")

    def _lift_item(self, rid: int) -> int:
        """Numbers are level 0; wrap them so they can sit in a sentence."""
        if self.arena.node(rid).level == 0:
            return self.arena.make_relation(store.SEQ, [rid], level=1)
        return rid

    # sentences (level 2)

    def sentence_rid(self, s: Sentence) -> int:
        a = self.arena
        if isinstance(s, CallSentence):
            name = a.intern_word(s.name)
            children = [name]
            if s.args:
                args = [self.item_rid(i) for i in s.args]
                children.append(a.make_relation(store.SEQ, args, level=1))
            if s.target is not None:
                children.append(self.sentence_rid(s.target))
            return a.make_relation(store.SEQ, children, level=2,
                                   kind=store.EXECUTABLE)
        if isinstance(s, NamedSentence):
            name = a.intern_word(s.name)
            children = [name]
            if s.args:
                args = [self.item_rid(i) for i in s.args]
                children.append(a.make_relation(store.SEQ, args, level=1))
            return a.make_relation(store.SEQ, children, level=2,
                                   kind=store.NON_EXECUTABLE)
        if isinstance(s, DataSentence):
            items = [self._lift_item(self.item_rid(i)) for i in s.items]
            return a.make_relation(s.code, items, level=2,
                                   kind=store.NON_EXECUTABLE)
        if isinstance(s, AggSentence):
            members = [self.sentence_rid(m) for m in s.members]
            return a.make_relation(s.code, members, level=2,
                                   kind=store.NON_EXECUTABLE)
        raise DomainError(f"unknown sentence {s!r}")

    # rules (level 3)

    def rule_rid(self, ast: RuleAst) -> int:
        a = self.arena
        mask = 0
        children: list[int] = []
        if ast.has_left:
            mask |= M_LEFT
            parts = [self.sentence_rid(s) for s in ast.left]
            children.append(a.make_relation(store.SEQ, parts, level=2,
                                            kind=store.NON_EXECUTABLE))
        if ast.has_right:
            mask |= M_RIGHT
            parts = [self.sentence_rid(s) for s in ast.right]
            children.append(a.make_relation(store.SEQ, parts, level=2,
                                            kind=store.NON_EXECUTABLE))
        if ast.cond is not None:
            mask |= M_COND
            children.append(self.sentence_rid(ast.cond))
        if not ast.has_left:
            kind = store.DIRECT_RULE       # entry rule
        elif not ast.has_right:
            kind = store.INVERSE_RULE      # data definition
        elif len(ast.left) >= 2:
            kind = store.INVERSE_RULE      # searches a file
        else:
            kind = store.DIRECT_RULE
        return a.make_relation(store.SEQ, children, level=3, kind=kind,
                               policy=mask)


@dataclass
class RuleParts:
    rule: int
    kind: int
    left: list[int]
    right: list[int]
    cond: Optional[int]


def rule_parts(arena: Arena, rid: int) -> RuleParts:
    """Decode a translated rule relation back into its parts."""
    node = arena.node(rid)
    mask = node.policy
    children = list(node.inverse_refs)
    left: list[int] = []
    right: list[int] = []
    cond: Optional[int] = None
    idx = 0
    if mask & M_LEFT:
        left = list(arena.node(children[idx]).inverse_refs)
        idx += 1
    if mask & M_RIGHT:
        right = list(arena.node(children[idx]).inverse_refs)
        idx += 1
    if mask & M_COND:
        cond = children[idx]
    return RuleParts(rid, node.kind, left, right, cond)


# ------------------------------------------------------------- rule files


def _meta_sentence(arena: Arena, path: str, mtime_ns: int) -> int:
    pathword = arena.intern_word(path)
    stamp = arena.make_relation(
        store.SEQ, [arena.intern_number(mtime_ns)], level=1)
    return arena.make_relation(store.SEQ, [pathword, stamp], level=2, kind=0)


def rule_file_meta(arena: Arena, rfid: int) -> tuple[str, int]:
    meta = arena.node(arena.node(rfid).inverse_refs[0])
    path = arena.word_text(meta.inverse_refs[0])
    stamp = arena.node(meta.inverse_refs[1])
    return path, arena.number_value(stamp.inverse_refs[0])


def rule_file_rules(arena: Arena, rfid: int) -> list[int]:
    return list(arena.node(rfid).inverse_refs[1:])


def translate_file(path: str | os.PathLike, arena: Arena) -> int:
    """Translate one rule file into the arena, reusing it if already known.

    Lex and parse run to completion before any relation is created, so a
    bad file leaves the arena untouched.
    """
    path = os.fspath(path)
    with open(path, "r", encoding="utf-8") as f:
        text = f.read()
    mtime_ns = os.stat(path).st_mtime_ns
    asts = parse_program(text)
    tr = Translator(arena)
    rule_ids: list[int] = []
    for ast in asts:
        rid = tr.rule_rid(ast)
        if rid not in rule_ids:
            rule_ids.append(rid)
    meta = _meta_sentence(arena, os.path.abspath(path), mtime_ns)
    root = f"rulefile:{os.path.abspath(path)}"
    existing = arena.get_root(root)
    if existing:
        arena.set_children(existing, [meta] + rule_ids)
        return existing
    rfid = arena.make_mutable(store.LIST, [meta] + rule_ids, level=3, kind=0)
    arena.set_root(root, rfid)
    return rfid


def retranslate_if_modified(rfid: int, arena: Arena) -> bool:
    """Re-translate when the source file's modification time changed."""
    path, stored_mtime = rule_file_meta(arena, rfid)
    try:
        current = os.stat(path).st_mtime_ns
    except FileNotFoundError:
        raise StaleSourceError(f"rule file source missing: {path}") from None
    if current == stored_mtime:
        return False
    translate_file(path, arena)
    return True


# ---------------------------------------------------------- pretty printer


def format_rule_file(arena: Arena, rfid: int) -> str:
    return "\n".join(format_rule(arena, r)
                     for r in rule_file_rules(arena, rfid)) + "\n"


def format_rule(arena: Arena, rid: int) -> str:
    parts = rule_parts(arena, rid)
    bits = []
    if parts.left:
        bits.append(", ".join(format_sentence(arena, s) for s in parts.left))
    bits.append("->")
    if parts.right:
        bits.append(", ".join(format_sentence(arena, s)
                              for s in parts.right))
    if parts.cond is not None:
        bits.append("| " + format_sentence(arena, parts.cond))
    return " ".join(bits) + " ;"


_BRACKETS = {store.SEQ: "()", store.UNORDERED: "<>",
             store.DISJUNCTION: "[]", store.LIST: "{}"}


def format_sentence(arena: Arena, rid: int) -> str:
    node = arena.node(rid)
    if node.kind in (store.EXECUTABLE, store.NON_EXECUTABLE) and \
            node.inverse_refs and arena.is_word(node.inverse_refs[0]):
        word = arena.word_text(node.inverse_refs[0])
        if word.startswith("#") or word.startswith("$"):
            rest = node.inverse_refs[1:]
            args = ""
            target = ""
            for r in rest:
                rn = arena.node(r)
                if rn.level == 2:
                    target = ": " + format_sentence(arena, r)
                else:
                    args = " ".join(format_item(arena, i)
                                    for i in rn.inverse_refs)
            if target:
                return f"{word}{target}"
            return f"{word} ({args})"
    op, cl = _BRACKETS[node.code]
    inner: list[str] = []
    for c in node.inverse_refs:
        cn = arena.node(c)
        if cn.level == 2:
            inner.append(format_sentence(arena, c))
        else:
            inner.append(format_item(arena, c))
    return f"{op}{' '.join(inner)}{cl}"


def format_item(arena: Arena, rid: int) -> str:
    node = arena.node(rid)
    if node.flags & store.F_EMPTY:
        return '""'
    if node.is_number:
        v = arena.number_value(rid)
        return repr(v) if isinstance(v, float) else str(v)
    if arena.is_variable(rid):
        return arena.variable_name(rid)
    if arena.is_word(rid):
        return "'" + arena.word_text(rid) + "'"
    op, cl = _BRACKETS[node.code]
    return f"{op}{' '.join(format_item(arena, c) for c in node.inverse_refs)}{cl}"
