"""Natural-language mode: teaching by example and recursive answering.

Samples are ground rules over word combinations (collocations kept as
sub-combinations).  Teaching searches RuleTrue for a similar rule and
either extends its paradigms or stores the sample as a new ground rule;
two rules merge only when each differing part differs in exactly one
aligned term.  Questions are answered in three stages: candidate articles,
per-article closure under the direct rules, then inverse-rule matching of
(question, sentence) pairs, with RuleFalse suppressing retracted samples.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product
from typing import Iterable, Iterator, Optional

from . import rulelang, store
from .errors import DomainError, ProposalError, StructureError
from .store import Arena

SHAPE_SQA = "sqa"
SHAPE_COND = "cond"
SHAPE_DOUBLE = "double"

_SHAPES = {SHAPE_SQA: 2, SHAPE_COND: 1, SHAPE_DOUBLE: 2}

ROOT_RULE_TRUE = "RuleTrue"
ROOT_RULE_FALSE = "RuleFalse"
ROOT_ARTICLES = "Text"
ROOT_BLOCKED = "BlockedPairs"
ROOT_SLOT_SEQ = "SlotSeq"


@dataclass
class TeachOutcome:
    status: str                 # "created" | "merged" | "rejected"
    rule: Optional[int] = None
    reason: str = ""


@dataclass
class Article:
    id_text: str
    key: int
    sentences: list[int]
    scheme_links: dict[int, set[int]]


@dataclass
class Proposal:
    id: str
    slots: tuple[int, int]
    shared: list[int]


@dataclass
class RuleView:
    rid: int
    shape: str
    left: list[int]            # scheme part combinations
    right: int
    conds: list[tuple[list[int], int]]   # (slot ids, combos node)
    samples: int               # list node of covered sample rules


class Semantics:
    """Semantic mode over one arena."""

    def __init__(self, arena: Arena, depth_cap: int = 64):
        self.arena = arena
        self.depth_cap = depth_cap
        self.rule_true = self._root_list(ROOT_RULE_TRUE, level=3)
        self.rule_false = self._root_list(ROOT_RULE_FALSE, level=3)
        self.articles = self._article_file()
        self.scheme_links: dict[int, set[int]] = {}
        self.recompute_links()

    # ------------------------------------------------------------ bootstrap

    def _root_list(self, name: str, level: int) -> int:
        rid = self.arena.get_root(name)
        if rid is None:
            rid = self.arena.make_mutable(store.LIST, [], level=level)
            self.arena.set_root(name, rid)
        return rid

    def article_scheme(self) -> int:
        a = self.arena
        slot_list = a.make_relation(
            store.LIST, [a.variable("s")], level=1)
        return a.make_relation(store.SEQ, [a.variable("art+"), slot_list],
                               level=2, kind=store.NON_EXECUTABLE)

    def _article_file(self) -> int:
        a = self.arena
        pid = a.get_root(ROOT_ARTICLES)
        if pid is None:
            scheme = self.article_scheme()
            pid = a.make_paradigm(scheme, policy=store.ASCENDING,
                                  kind=store.NON_EXECUTABLE)
            a.set_root(ROOT_ARTICLES, pid)
        return pid

    def _next_slot_name(self) -> str:
        a = self.arena
        seq = a.get_root(ROOT_SLOT_SEQ)
        n = a.number_value(seq) if seq else 0
        a.set_root(ROOT_SLOT_SEQ, a.intern_number(n + 1))
        return f"~{n + 1}"

    # --------------------------------------------------------------- phrases

    def phrase(self, text: str) -> int:
        return rulelang.phrase_rid(self.arena, text,
                                   detach_terminators=True)

    def render(self, rid: int) -> str:
        return self.arena.sentence_text(rid)

    def split_sentences(self, text: str) -> list[int]:
        units = rulelang._phrase_tokens(text, detach_terminators=True)
        out: list[int] = []
        chunk: list[str] = []
        depth = 0
        for u in units:
            chunk.append(u)
            if u == "(":
                depth += 1
            elif u == ")":
                depth -= 1
            elif u in ".?!" and depth == 0:
                out.append(self._units_combo(chunk))
                chunk = []
        if chunk:
            out.append(self._units_combo(chunk))
        return out

    def _units_combo(self, units: list[str]) -> int:
        a = self.arena
        stack: list[list[int]] = [[]]
        for u in units:
            if u == "(":
                stack.append([])
            elif u == ")":
                group = stack.pop()
                if group:
                    stack[-1].append(a.make_relation(store.SEQ, group,
                                                     level=1))
            else:
                num = rulelang.parse_number_text(u)
                stack[-1].append(a.intern_number(num) if num is not None
                                 else a.intern_word(u))
        return a.make_relation(store.SEQ, stack[0], level=1)

    # ----------------------------------------------------------- rule decode

    def _is_slot(self, rid: int) -> bool:
        return self.arena.is_variable(rid)

    def rule_view(self, rid: int) -> RuleView:
        a = self.arena
        children = a.node(rid).inverse_refs
        left = list(a.node(children[0]).inverse_refs)
        right = a.node(children[1]).inverse_refs[0]
        conds: list[tuple[list[int], int]] = []
        samples = children[-1]
        for extra in children[2:-1]:
            for tup in a.node(extra).inverse_refs:
                slots_seq, combos = a.node(tup).inverse_refs
                conds.append((list(a.node(slots_seq).inverse_refs), combos))
        kind = a.node(rid).kind
        shape = SHAPE_SQA if kind == store.INVERSE_RULE else (
            SHAPE_COND if len(left) == 1 else SHAPE_DOUBLE)
        return RuleView(rid, shape, left, right, conds, samples)

    def rules(self, shape: Optional[str] = None) -> list[RuleView]:
        out = []
        for rid in self.arena.node(self.rule_true).inverse_refs:
            view = self.rule_view(rid)
            if shape is None or view.shape == shape:
                out.append(view)
        return out

    def slots_of(self, view: RuleView) -> list[int]:
        seen: list[int] = []
        for part in view.left + [view.right]:
            for tok in self.arena.node(part).inverse_refs:
                if self._is_slot(tok) and tok not in seen:
                    seen.append(tok)
        return seen

    def _slot_position(self, view: RuleView, slot: int
                       ) -> Optional[tuple[int, int]]:
        parts = view.left + [view.right]
        for pi, part in enumerate(parts):
            for j, tok in enumerate(self.arena.node(part).inverse_refs):
                if tok == slot:
                    return pi, j
        return None

    # ------------------------------------------------------------- samples

    def sample_parts(self, shape: str, left_texts: list[str],
                     right_text: str) -> tuple[list[int], int]:
        if len(left_texts) != _SHAPES[shape]:
            raise DomainError(
                f"shape {shape} needs {_SHAPES[shape]} left part(s)")
        return [self.phrase(t) for t in left_texts], self.phrase(right_text)

    def sample_rid(self, shape: str, left: list[int], right: int) -> int:
        a = self.arena
        kind = store.INVERSE_RULE if shape == SHAPE_SQA else store.DIRECT_RULE
        left_agg = a.make_relation(store.SEQ, left, level=2,
                                   kind=store.NON_EXECUTABLE)
        right_agg = a.make_relation(store.SEQ, [right], level=2,
                                    kind=store.NON_EXECUTABLE)
        mask = rulelang.M_LEFT | rulelang.M_RIGHT
        return a.make_relation(store.SEQ, [left_agg, right_agg], level=3,
                               kind=kind, policy=mask)

    def find_sample(self, shape: str, left: list[int],
                    right: int) -> Optional[int]:
        """Lookup without creating (used on read-only paths)."""
        a = self.arena
        kind = store.INVERSE_RULE if shape == SHAPE_SQA else store.DIRECT_RULE
        left_agg = a.find_relation(store.SEQ, left, level=2,
                                   kind=store.NON_EXECUTABLE)
        if left_agg is None:
            return None
        right_agg = a.find_relation(store.SEQ, [right], level=2,
                                    kind=store.NON_EXECUTABLE)
        if right_agg is None:
            return None
        mask = rulelang.M_LEFT | rulelang.M_RIGHT
        return a.find_relation(store.SEQ, [left_agg, right_agg], level=3,
                               kind=kind, policy=mask)

    def sample_decode(self, sample: int) -> tuple[list[int], int]:
        a = self.arena
        children = a.node(sample).inverse_refs
        return (list(a.node(children[0]).inverse_refs),
                a.node(children[1]).inverse_refs[0])

    def false_samples(self) -> list[int]:
        return list(self.arena.node(self.rule_false).inverse_refs)

    def _suppressed(self, shape: str, left: list[int], right: int) -> bool:
        sample = self.find_sample(shape, left, right)
        return sample is not None and \
            sample in self.arena.node(self.rule_false).inverse_refs

    # ---------------------------------------------------------------- teach

    def teach_texts(self, shape: str, left_texts: list[str],
                    right_text: str) -> TeachOutcome:
        left, right = self.sample_parts(shape, left_texts, right_text)
        return self.teach(shape, left, right)

    def teach(self, shape: str, left: list[int], right: int) -> TeachOutcome:
        if shape not in _SHAPES:
            raise DomainError(f"unknown sample shape {shape!r}")
        sample = self.sample_rid(shape, left, right)
        if sample in self.arena.node(self.rule_false).inverse_refs:
            return TeachOutcome("rejected", reason="sample is in RuleFalse")
        for view in reversed(self.rules(shape)):
            if self._generalize(view, left + [right], sample):
                self._touch_rule(view.rid)
                self.recompute_links()
                return TeachOutcome("merged", view.rid)
        rid = self._create_rule(shape, left, right, sample)
        self.recompute_links()
        return TeachOutcome("created", rid)

    def _create_rule(self, shape: str, left: list[int], right: int,
                     sample: int) -> int:
        a = self.arena
        kind = store.INVERSE_RULE if shape == SHAPE_SQA else store.DIRECT_RULE
        left_agg = a.make_relation(store.SEQ, left, level=2,
                                   kind=store.NON_EXECUTABLE)
        right_agg = a.make_relation(store.SEQ, [right], level=2,
                                    kind=store.NON_EXECUTABLE)
        samples = a.make_mutable(store.LIST, [sample], level=3)
        rid = a.make_mutable(store.SEQ, [left_agg, right_agg, samples],
                             level=3, kind=kind,
                             policy=rulelang.M_LEFT | rulelang.M_RIGHT)
        a.set_children(self.rule_true,
                       a.node(self.rule_true).inverse_refs + [rid])
        return rid

    def _touch_rule(self, rid: int) -> None:
        rules = [r for r in self.arena.node(self.rule_true).inverse_refs
                 if r != rid] + [rid]
        self.arena.set_children(self.rule_true, rules)

    # generalization ----------------------------------------------------------

    def generalize(self, view: RuleView, shape: str, left: list[int],
                   right: int) -> Optional[int]:
        """Public probe: merged rule id, or None when the one-term
        criterion fails (the rule is mutated on success)."""
        if view.shape != shape:
            return None
        sample = self.sample_rid(shape, left, right)
        if self._generalize(view, left + [right], sample):
            self._touch_rule(view.rid)
            self.recompute_links()
            return view.rid
        return None

    def _generalize(self, view: RuleView, new_parts: list[int],
                    sample: int) -> bool:
        a = self.arena
        scheme_parts = view.left + [view.right]
        if len(scheme_parts) != len(new_parts):
            return False
        for sp, np in zip(scheme_parts, new_parts):
            if len(a.node(sp).inverse_refs) != len(a.node(np).inverse_refs):
                return False
        covered = list(a.node(view.samples).inverse_refs)
        if sample in covered:
            return True    # identical sample: merge is the identity
        for cov in reversed(covered):
            cleft, cright = self.sample_decode(cov)
            cov_parts = cleft + [cright]
            diffs = self._diffs(cov_parts, new_parts)
            if diffs is None:
                continue
            if not diffs:
                return True
            if self._apply_merge(view, cov_parts, new_parts, diffs, sample):
                return True
        return False

    def _diffs(self, cov_parts: list[int], new_parts: list[int]
               ) -> Optional[list[tuple[int, int, int, int]]]:
        """(part, position, old, new) per differing part; None when some
        part differs in more than one term."""
        a = self.arena
        diffs = []
        for pi, (cp, np) in enumerate(zip(cov_parts, new_parts)):
            cc, nc = a.node(cp).inverse_refs, a.node(np).inverse_refs
            if len(cc) != len(nc):
                return None
            here = [(j, o, n) for j, (o, n) in enumerate(zip(cc, nc))
                    if o != n]
            if len(here) > 1:
                return None
            if here:
                j, o, n = here[0]
                diffs.append((pi, j, o, n))
        return diffs

    def _apply_merge(self, view: RuleView, cov_parts: list[int],
                     new_parts: list[int],
                     diffs: list[tuple[int, int, int, int]],
                     sample: int) -> bool:
        a = self.arena
        scheme_parts = view.left + [view.right]
        groups: dict[tuple[int, int], list[tuple[int, int]]] = {}
        for pi, j, old, new in diffs:
            groups.setdefault((old, new), []).append((pi, j))
        # each group must be slotable: an existing shared slot or constants
        slot_for: dict[tuple[int, int], int] = {}
        for (old, new), positions in groups.items():
            toks = {a.node(scheme_parts[pi]).inverse_refs[j]
                    for pi, j in positions}
            slots = {t for t in toks if self._is_slot(t)}
            consts = toks - slots
            if len(slots) > 1:
                return False
            if consts and any(c != old for c in consts):
                return False
            if slots:
                slot_for[(old, new)] = next(iter(slots))
            else:
                slot = a.variable(self._next_slot_name())
                a.paradigm_insert(slot, old)
                slot_for[(old, new)] = slot
        # insert new values and substitute slots into the schemes
        substitutions: dict[tuple[int, int], int] = {}
        for (old, new), positions in groups.items():
            slot = slot_for[(old, new)]
            a.paradigm_insert(slot, old)
            a.paradigm_insert(slot, new)
            for pi, j in positions:
                substitutions[(pi, j)] = slot
        new_scheme_parts = []
        for pi, part in enumerate(scheme_parts):
            toks = list(a.node(part).inverse_refs)
            changed = False
            for j in range(len(toks)):
                if (pi, j) in substitutions:
                    toks[j] = substitutions[(pi, j)]
                    changed = True
            new_scheme_parts.append(
                a.make_relation(store.SEQ, toks, level=1) if changed
                else part)
        new_view = RuleView(view.rid, view.shape,
                            new_scheme_parts[:-1], new_scheme_parts[-1],
                            list(view.conds), view.samples)
        # conditions
        new_conds = list(view.conds)
        group_slots = []
        for key in groups:
            if slot_for[key] not in group_slots:
                group_slots.append(slot_for[key])
        covered = list(a.node(view.samples).inverse_refs)
        if len(group_slots) >= 2:
            existing = None
            for slots, combos in new_conds:
                if set(slots) == set(group_slots):
                    existing = (slots, combos)
                    break
            if existing is None:
                slots_seq = a.make_relation(store.SEQ, group_slots, level=1)
                combos_node = a.make_mutable(store.DISJUNCTION, [], level=1)
                a.make_mutable(store.UNORDERED, [slots_seq, combos_node],
                               level=1)   # the tuple _rebuild_rule reuses
                new_conds.append((group_slots, combos_node))
                slots = group_slots
                combos = combos_node
            else:
                slots, combos = existing
            for smp in covered + [sample]:
                sl, sr = self.sample_decode(smp)
                combo = self._project(new_view, sl + [sr], slots)
                if combo is not None:
                    self._add_combo(combos, combo)
        elif len(group_slots) == 1:
            slot = group_slots[0]
            new = next(n for (o, n), s in slot_for.items() if s == slot)
            for slots, combos in new_conds:
                if slot in slots:
                    base = self._project(new_view, cov_parts, slots)
                    if base is None:
                        continue
                    idx = slots.index(slot)
                    extended = list(base)
                    extended[idx] = new
                    self._add_combo(combos, extended)
        # persist the reshaped rule
        self._rebuild_rule(new_view, new_conds)
        a.set_children(view.samples,
                       a.node(view.samples).inverse_refs + [sample])
        self._assert_replay(self.rule_view(view.rid))
        return True

    def _project(self, view: RuleView, sample_parts: list[int],
                 slots: list[int]) -> Optional[list[int]]:
        a = self.arena
        out = []
        for slot in slots:
            pos = self._slot_position(view, slot)
            if pos is None:
                return None
            pi, j = pos
            refs = a.node(sample_parts[pi]).inverse_refs
            if j >= len(refs):
                return None
            out.append(refs[j])
        return out

    def _add_combo(self, combos_node: int, values: list[int]) -> None:
        a = self.arena
        combo = a.make_relation(store.SEQ, values, level=1)
        existing = a.node(combos_node).inverse_refs
        if combo not in existing:
            a.set_children(combos_node, existing + [combo])

    def _rebuild_rule(self, view: RuleView,
                      conds: list[tuple[list[int], int]]) -> None:
        a = self.arena
        left_agg = a.make_relation(store.SEQ, view.left, level=2,
                                   kind=store.NON_EXECUTABLE)
        right_agg = a.make_relation(store.SEQ, [view.right], level=2,
                                    kind=store.NON_EXECUTABLE)
        children = [left_agg, right_agg]
        if conds:
            tuples = []
            for slots, combos in conds:
                slots_seq = a.make_relation(store.SEQ, slots, level=1)
                existing = None
                for t in a.nodes[combos].direct_refs:
                    tn = a.node(t)
                    if tn.code == store.UNORDERED and \
                            combos in tn.inverse_refs and \
                            slots_seq in tn.inverse_refs:
                        existing = t
                        break
                if existing is None:
                    existing = a.make_mutable(store.UNORDERED,
                                              [slots_seq, combos], level=1)
                tuples.append(existing)
            children.append(a.make_relation(store.SEQ, tuples, level=2,
                                            kind=0))
        children.append(view.samples)
        a.set_children(view.rid, children)

    def _assert_replay(self, view: RuleView) -> None:
        """Every covered sample must instantiate the merged rule."""
        a = self.arena
        for smp in a.node(view.samples).inverse_refs:
            sl, sr = self.sample_decode(smp)
            binding: dict[int, int] = {}
            ok = all(self.match_scheme(p, g, binding)
                     for p, g in zip(view.left + [view.right], sl + [sr]))
            if not ok or not self.conditions_ok(view, binding, full=True):
                raise StructureError(
                    "merge soundness violated for a covered sample")

    # --------------------------------------------------------------- unteach

    def unteach_texts(self, shape: str, left_texts: list[str],
                      right_text: str) -> None:
        left, right = self.sample_parts(shape, left_texts, right_text)
        self.unteach(shape, left, right)

    def unteach(self, shape: str, left: list[int], right: int) -> None:
        a = self.arena
        sample = self.sample_rid(shape, left, right)
        for view in self.rules(shape):
            covered = a.node(view.samples).inverse_refs
            ground = not self.slots_of(view)
            if ground and covered == [sample] and \
                    view.left + [view.right] == left + [right]:
                rules = [r for r in a.node(self.rule_true).inverse_refs
                         if r != view.rid]
                a.set_children(self.rule_true, rules)
                self.recompute_links()
                return
        falses = a.node(self.rule_false).inverse_refs
        if sample not in falses:
            a.set_children(self.rule_false, falses + [sample])
        self.recompute_links()

    # -------------------------------------------------------------- matching

    def match_scheme(self, scheme: int, ground: int,
                     binding: dict[int, int]) -> bool:
        a = self.arena
        if scheme == ground:
            return True
        if self._is_slot(scheme):
            if scheme in binding:
                return binding[scheme] == ground
            if ground in a.paradigm_values(scheme):
                binding[scheme] = ground
                return True
            return False
        snode, gnode = a.node(scheme), a.node(ground)
        if snode.is_elementary or gnode.is_elementary:
            return False
        if snode.code != gnode.code or snode.level != gnode.level:
            return False
        sc, gc = snode.inverse_refs, gnode.inverse_refs
        if len(sc) != len(gc):
            return False
        saved = dict(binding)
        for s, g in zip(sc, gc):
            if not self.match_scheme(s, g, binding):
                binding.clear()
                binding.update(saved)
                return False
        return True

    def conditions_ok(self, view: RuleView, binding: dict[int, int],
                      full: bool) -> bool:
        a = self.arena
        for slots, combos_node in view.conds:
            combos = [tuple(a.node(c).inverse_refs)
                      for c in a.node(combos_node).inverse_refs]
            bound_idx = [(i, binding[s]) for i, s in enumerate(slots)
                         if s in binding]
            if full and len(bound_idx) != len(slots):
                return False
            if not any(all(c[i] == v for i, v in bound_idx)
                       for c in combos):
                return False
        return True

    def _completions(self, view: RuleView,
                     binding: dict[int, int]) -> Iterator[dict[int, int]]:
        """Bind any remaining right-part slots, honoring conditions."""
        a = self.arena
        unbound = [s for s in self.slots_of(view)
                   if s not in binding and
                   s in a.node(view.right).inverse_refs]
        if not unbound:
            yield binding
            return
        pools = [a.paradigm_values(s) for s in unbound]
        for combo in product(*pools):
            trial = dict(binding)
            trial.update(dict(zip(unbound, combo)))
            if self.conditions_ok(view, trial, full=False):
                yield trial

    def instantiate_part(self, part: int,
                         binding: dict[int, int]) -> Optional[int]:
        a = self.arena
        node = a.node(part)
        out = []
        for tok in node.inverse_refs:
            if self._is_slot(tok):
                if tok not in binding:
                    return None
                out.append(binding[tok])
            else:
                out.append(tok)
        if out == list(node.inverse_refs):
            return part
        return a.make_relation(store.SEQ, out, level=1)

    # ---------------------------------------------------------------- closure

    def closure(self, sentences: Iterable[int]) -> list[int]:
        """Sentences plus everything derivable via the direct rules."""
        known: dict[int, None] = dict.fromkeys(sentences)
        for _ in range(self.depth_cap):
            fresh: list[int] = []
            for view in self.rules():
                if view.shape == SHAPE_COND:
                    for s in list(known):
                        fresh.extend(self._derive_direct(view, [s], known))
                elif view.shape == SHAPE_DOUBLE:
                    snap = list(known)
                    for s1 in snap:
                        for s2 in snap:
                            fresh.extend(
                                self._derive_direct(view, [s1, s2], known))
            if not fresh:
                break
            for f in fresh:
                known.setdefault(f)
        return list(known)

    def _derive_direct(self, view: RuleView, args: list[int],
                       known: dict[int, None]) -> list[int]:
        binding: dict[int, int] = {}
        for scheme, ground in zip(view.left, args):
            if not self.match_scheme(scheme, ground, binding):
                return []
        out = []
        for full in self._completions(view, binding):
            if not self.conditions_ok(view, full, full=True):
                continue
            inst = self.instantiate_part(view.right, full)
            if inst is None or inst in known:
                continue
            if self._suppressed(view.shape, args, inst):
                continue
            out.append(inst)
        return out

    # ---------------------------------------------------------------- articles

    def ingest_article(self, id_text: str, text: str) -> Article:
        a = self.arena
        key = a.intern_word(id_text)
        sentences = self.split_sentences(text)
        sent_list = a.make_mutable(store.LIST, sentences, level=1) \
            if sentences else a.make_mutable(store.LIST, [], level=1)
        # upsert: replace any stored instance with the same key
        for inst in a.paradigm_values(self.articles):
            if a.node(inst).inverse_refs[0] == key:
                a.paradigm_remove(self.articles, inst)
                break
        scheme = self.article_scheme()
        instance = a.make_relation(store.SEQ, [key, sent_list], level=2,
                                   kind=store.NON_EXECUTABLE)
        a.paradigm_insert(self.articles, instance,
                          sort_key=lambda rid:
                          a.order_key(a.node(rid).inverse_refs[0]))
        a.paradigm_insert(a.variable("art+"), key)
        self.recompute_links()
        return self.article(id_text)

    def article(self, id_text: str) -> Optional[Article]:
        a = self.arena
        key = a.intern_word(id_text)
        for inst in a.paradigm_values(self.articles):
            refs = a.node(inst).inverse_refs
            if refs[0] == key:
                sentences = list(a.node(refs[1]).inverse_refs)
                links = {s: set(self.scheme_links.get(s, ()))
                         for s in sentences}
                return Article(id_text, key, sentences, links)
        return None

    def articles_list(self) -> list[tuple[str, list[int]]]:
        a = self.arena
        out = []
        for inst in a.paradigm_values(self.articles):
            refs = a.node(inst).inverse_refs
            out.append((a.word_text(refs[0]),
                        list(a.node(refs[1]).inverse_refs)))
        return out

    def recompute_links(self) -> None:
        """References of stored sentences to the schemes they instantiate."""
        links: dict[int, set[int]] = {}
        for _id, sentences in self.articles_list():
            for s in sentences:
                hit = links.setdefault(s, set())
                for view in self.rules():
                    for part in view.left + [view.right]:
                        binding: dict[int, int] = {}
                        if self.match_scheme(part, s, binding) and \
                                self.conditions_ok(view, binding,
                                                   full=False):
                            hit.add(part)
        self.scheme_links = links

    # ----------------------------------------------------------------- answer

    def answer(self, question: str | int) -> list[tuple[str, str]]:
        """(answer text, article id) pairs for a ground question."""
        q = self.phrase(question) if isinstance(question, str) else question
        results: list[tuple[str, str]] = []
        seen: set[tuple[int, str]] = set()
        inverse_rules = self.rules(SHAPE_SQA)
        for art_id, sentences in self.articles_list():
            if not sentences:
                continue
            closure = self.closure(sentences)
            for view in inverse_rules:
                s_part, q_part = view.left
                qb: dict[int, int] = {}
                if not self.match_scheme(q_part, q, qb):
                    continue
                for s1 in closure:
                    binding = dict(qb)
                    if not self.match_scheme(s_part, s1, binding):
                        continue
                    for full in self._completions(view, binding):
                        if not self.conditions_ok(view, full, full=True):
                            continue
                        ans = self.instantiate_part(view.right, full)
                        if ans is None:
                            continue
                        if self._suppressed(SHAPE_SQA, [s1, q], ans):
                            continue
                        if (ans, art_id) not in seen:
                            seen.add((ans, art_id))
                            results.append((self.render(ans), art_id))
        return results

    # --------------------------------------------------------------- proposals

    def _blocked_pairs(self) -> set[frozenset[int]]:
        rid = self.arena.get_root(ROOT_BLOCKED)
        if rid is None:
            return set()
        out = set()
        for pair in self.arena.node(rid).inverse_refs:
            out.add(frozenset(self.arena.node(pair).inverse_refs))
        return out

    def _candidate_pairs(self) -> dict[str, tuple[int, int, list[int]]]:
        a = self.arena
        slot_owner: list[tuple[int, int]] = []
        for view in self.rules():
            for slot in self.slots_of(view):
                slot_owner.append((view.rid, slot))
        out: dict[str, tuple[int, int, list[int]]] = {}
        for i, (r1, s1) in enumerate(slot_owner):
            for r2, s2 in slot_owner[i + 1:]:
                if r1 == r2 or s1 == s2:
                    continue
                shared = [v for v in a.paradigm_values(s1)
                          if v in a.paradigm_values(s2)]
                if len(shared) < 2:
                    continue
                lo, hi = sorted((s1, s2))
                out.setdefault(f"p{lo}-{hi}", (lo, hi, shared))
        return out

    def proposals(self) -> list[Proposal]:
        blocked = self._blocked_pairs()
        out = []
        for pid, (s1, s2, shared) in sorted(self._candidate_pairs().items()):
            if frozenset((s1, s2)) in blocked:
                continue
            v1 = set(self.arena.paradigm_values(s1))
            v2 = set(self.arena.paradigm_values(s2))
            if v1 == v2:
                continue   # union already applied
            out.append(Proposal(pid, (s1, s2), shared))
        return out

    def confirm_generalization(self, proposal_id: str, accept: bool) -> None:
        a = self.arena
        candidates = self._candidate_pairs()
        if proposal_id not in candidates:
            raise ProposalError(f"unknown proposal {proposal_id!r}")
        s1, s2, _shared = candidates[proposal_id]
        if accept:
            for v in a.paradigm_values(s1):
                a.paradigm_insert(s2, v)
            for v in a.paradigm_values(s2):
                a.paradigm_insert(s1, v)
            self.recompute_links()
            return
        blocked = self._root_list(ROOT_BLOCKED, level=1)
        pairs = a.node(blocked).inverse_refs
        pair = a.make_relation(store.UNORDERED, [s1, s2], level=1)
        if pair not in pairs:
            a.set_children(blocked, pairs + [pair])
