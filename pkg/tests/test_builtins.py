from __future__ import annotations

from datetime import date

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from shmkb import rulelang, store
from shmkb.engine import Session, VarTable
from shmkb.errors import (
    AssignmentError,
    BindingError,
    EngineTypeError,
    UnsupportedOperationError,
)
from shmkb.rulelang import Translator
from shmkb.store import Arena

from helpers import Script, build_value, session_from_text
from oracles import is_contiguous_subsequence


@pytest.fixture
def ctx():
    arena = Arena()
    return arena, Session(arena)


def bound(session, table, name, spec):
    var = session.arena.variable(name)
    table.bind(var, build_value(session.arena, spec))
    return var


# --- comparisons ----------------------------------------------------------

def test_eq_numbers(ctx):
    arena, s = ctx
    assert s.call("#Eq", [arena.intern_number(5), arena.intern_number(5)]) == 1
    assert s.call("#Eq", [arena.intern_number(5), arena.intern_number(6)]) == 0


def test_eq_int_float(ctx):
    arena, s = ctx
    assert s.call("#Eq", [arena.intern_number(1), arena.intern_number(1.0)]) == 1


def test_ge_lexicographic(ctx):
    arena, s = ctx
    assert s.call("#Ge", [arena.intern_word("b"), arena.intern_word("a")]) == 1
    assert s.call("#Le", [arena.intern_word("b"), arena.intern_word("a")]) == 0


def test_ne_quoted_number_coercion(tmp_path):
    # '5' is presented as a number at translation, so Ne(5, '5') fails
    arena, s = session_from_text(tmp_path, "-> ('5' != 5) | (key == 1);")
    assert s.fire_entry_rules(1) == 0


def test_eq_unbound_raises(ctx):
    arena, s = ctx
    with pytest.raises(BindingError):
        s.call("#Eq", [arena.variable("x"), arena.intern_number(1)])


# --- fix / move ---------------------------------------------------------------

def test_fix_binds_global_and_current(ctx):
    arena, s = ctx
    t = VarTable(s)
    flag = arena.variable("Flag")
    assert s.call("#Fix", [flag, arena.intern_number(0)], t) == 1
    assert t.lookup(flag) == arena.intern_number(0)
    x = arena.variable("x")
    assert s.call("#Fix", [x, arena.intern_word("ab")], t) == 1
    assert t.lookup(x) == arena.intern_word("ab")


def test_fix_self_assignment(ctx):
    arena, s = ctx
    t = VarTable(s)
    x = bound(s, t, "x", 3)
    assert s.call("#Fix", [x, x], t) == 1
    assert t.lookup(x) == arena.intern_number(3)


def test_fix_coerces_numeric_word_move_does_not(ctx):
    arena, s = ctx
    t = VarTable(s)
    y = bound(s, t, "y", "007")
    x = arena.variable("x")
    assert s.call("#Fix", [x, y], t) == 1
    assert arena.is_number(t.lookup(x))
    assert arena.number_value(t.lookup(x)) == 7   # octal per the 0-prefix rule
    z = arena.variable("z")
    assert s.call("#Move", [z, y], t) == 1
    assert arena.is_word(t.lookup(z))
    assert arena.word_text(t.lookup(z)) == "007"


def test_fix_destructures_pattern(ctx):
    arena, s = ctx
    t = VarTable(s)
    pattern = arena.make_relation(
        store.SEQ, [arena.variable("a"), arena.variable("b")], level=1)
    value = arena.make_relation(
        store.SEQ, [arena.intern_word("x"), arena.intern_word("y")], level=1)
    assert s.call("#Fix", [pattern, value], t) == 1
    assert t.lookup(arena.variable("a")) == arena.intern_word("x")
    assert t.lookup(arena.variable("b")) == arena.intern_word("y")


def test_fix_to_constant_rejected(ctx):
    arena, s = ctx
    with pytest.raises(AssignmentError):
        s.call("#Fix", [arena.intern_word("c"), arena.intern_word("v")])


def test_move_unbound_source(ctx):
    arena, s = ctx
    with pytest.raises(BindingError):
        s.call("#Move", [arena.variable("x"), arena.variable("y")])


# --- arithmetic ------------------------------------------------------------------

def test_inc_dec(ctx):
    arena, s = ctx
    t = VarTable(s)
    x = bound(s, t, "x", 2)
    assert s.call("#Inc", [x, arena.intern_number(3)], t) == 1
    assert arena.number_value(t.lookup(x)) == 5
    assert s.call("#Dec", [x, arena.intern_number(5)], t) == 1
    assert arena.number_value(t.lookup(x)) == 0
    assert s.call("#Dec", [x, arena.intern_number(1)], t) == 1
    assert arena.number_value(t.lookup(x)) == -1
    # negatives round-trip through the digit encoding
    assert arena.intern_number(-1) == t.lookup(x)


def test_inc_non_numeric(ctx):
    arena, s = ctx
    t = VarTable(s)
    x = bound(s, t, "x", "word")
    with pytest.raises(EngineTypeError):
        s.call("#Inc", [x, arena.intern_number(1)], t)


# --- structure ---------------------------------------------------------------------

def test_belong_direct_constituent(ctx):
    arena, s = ctx
    inner = arena.intern_word("in")
    word = arena.intern_word("input")
    structure = arena.node(word).inverse_refs[0]
    in_combo = arena.node(inner).inverse_refs[0]
    assert s.call("#Belong", [in_combo, structure]) == 1
    assert s.call("#Belong", [structure, structure]) == 0


def test_part_substring(ctx):
    arena, s = ctx
    arena.intern_word("in")
    w_input = arena.intern_word("input")
    w_put = arena.intern_word("put")
    w_npu = arena.intern_word("npu")
    w_xyz = arena.intern_word("xyz")
    assert s.call("#Part", [w_put, w_input]) == 1
    assert s.call("#Part", [w_npu, w_input]) == 1
    assert s.call("#Part", [w_xyz, w_input]) == 0
    # oracle: plain substring check
    assert is_contiguous_subsequence(list("put"), list("input"))
    assert not is_contiguous_subsequence(list("xyz"), list("input"))


# --- dates -------------------------------------------------------------------------

def test_tstdat_invalid_date(ctx):
    arena, s = ctx
    assert s.call("#Tstdat", [arena.intern_word("2024-02-30")]) == 0
    assert s.call("#Tstdat", [arena.intern_word("2024-02-29")]) == 1
    assert s.call("#Tstdat", [arena.intern_word("not-a-date")]) == 0


def test_grtdat_ltldat(ctx):
    arena, s = ctx
    d1 = arena.intern_word("2024-01-02")
    d2 = arena.intern_word("2024-01-01")
    assert s.call("#Grtdat", [d1, d2]) == 1
    assert s.call("#Ltldat", [d2, d1]) == 1
    assert s.call("#Grtdat", [d2, d1]) == 0
    assert s.call("#Grtdat", [arena.intern_word("junk"), d1]) == 0


def test_date_then_tstdat(ctx):
    arena, s = ctx
    t = VarTable(s)
    d = arena.variable("d")
    assert s.call("#Date", [d], t) == 1
    assert s.call("#Tstdat", [d], t) == 1
    assert arena.word_text(t.lookup(d)) == date.today().isoformat()


def test_time_format(ctx):
    arena, s = ctx
    t = VarTable(s)
    v = arena.variable("v")
    assert s.call("#Time", [v], t) == 1
    text = arena.word_text(t.lookup(v))
    assert len(text) == 8 and text[2] == ":" and text[5] == ":"


# --- list iteration -----------------------------------------------------------------

def test_list_iterates_in_order(ctx):
    arena, s = ctx
    t = VarTable(s)
    z = bound(s, t, "z", ("list", ["a", "b", "c"]))
    seen = []
    while s.call("#List", [z], t) == 1:
        seen.append(arena.word_text(t.lookup(z)))
    assert seen == ["a", "b", "c"]


def test_list_empty(ctx):
    arena, s = ctx
    t = VarTable(s)
    z = arena.variable("z")
    t.bind(z, arena.empty_relation())
    assert s.call("#List", [z], t) == 0


def test_list_singleton(ctx):
    arena, s = ctx
    t = VarTable(s)
    z = bound(s, t, "z", ("list", ["only"]))
    assert s.call("#List", [z], t) == 1
    assert s.call("#List", [z], t) == 0


def test_list_non_list(ctx):
    arena, s = ctx
    t = VarTable(s)
    z = bound(s, t, "z", "word")
    with pytest.raises(EngineTypeError):
        s.call("#List", [z], t)


# --- save / delete ----------------------------------------------------------------

def _scheme(arena):
    tr = Translator(arena)
    slices = rulelang.split_program(
        rulelang.tokenize("-> ((k+ {v})) ;"))[1]
    ast = rulelang.parse_rule(slices[0])
    return tr.sentence_rid(ast.right[0])


def test_save_then_search_then_delete(ctx):
    arena, s = ctx
    scheme = _scheme(arena)
    t = VarTable(s)
    bound(s, t, "k+", "a1")
    bound(s, t, "v", ("list", ["line"]))
    assert s.call("#Save", [scheme], t) == 1
    pid = arena.paradigm_for(scheme)
    assert len(arena.paradigm_values(pid)) == 1
    # stored values also land in the key variable's paradigm
    assert arena.intern_word("a1") in \
        arena.paradigm_values(arena.variable("k+"))
    t2 = VarTable(s)
    assert s.call("#Delete", [scheme], t2) == 1
    assert arena.paradigm_values(pid) == []
    assert s.call("#Delete", [scheme], t2) == 0   # nothing left
    arena.check_duality()


def test_save_unbound_variable(ctx):
    arena, s = ctx
    scheme = _scheme(arena)
    with pytest.raises(BindingError):
        s.call("#Save", [scheme], VarTable(s))


@given(st.lists(st.tuples(st.text(alphabet="abc", min_size=1, max_size=3),
                          st.integers(0, 9)),
                min_size=1, max_size=6, unique_by=lambda p: p[0]))
@settings(max_examples=30, deadline=None)
def test_save_delete_roundtrip_property(entries):
    arena = Arena()
    s = Session(arena)
    scheme = _scheme(arena)
    for key, num in entries:
        t = VarTable(s)
        t.bind(arena.variable("k+"), arena.intern_word(key))
        t.bind(arena.variable("v"),
               build_value(arena, ("list", [str(num)])))
        assert s.call("#Save", [scheme], t) == 1
    pid = arena.paradigm_for(scheme)
    assert len(arena.paradigm_values(pid)) == len(entries)
    # delete them one by one, constraining on the key
    for key, _num in entries:
        t = VarTable(s)
        t.bind(arena.variable("k+"), arena.intern_word(key))
        assert s.call("#Delete", [scheme], t) == 1
    assert arena.paradigm_values(pid) == []
    arena.check_duality()


# --- negation / control ---------------------------------------------------------

def test_not_involution(tmp_path):
    arena, s = session_from_text(
        tmp_path,
        "-> #probe() | (key == 1), !(1 == 2);\n"
        "-> #probe() | (key == 2), !(1 == 1);\n")
    probe = Script([({}, 1), ({}, 1)])
    s.register_host("probe", probe)
    assert s.fire_entry_rules(1) == 1
    assert s.fire_entry_rules(2) == 0
    assert len(probe.calls) == 1


def test_not_passes_interrupt_through(tmp_path):
    arena, s = session_from_text(tmp_path,
                                 "-> #Not: #Break() | (key == 1);")
    assert s.fire_entry_rules(1) == -1


def test_break_returns_interrupt(ctx):
    arena, s = ctx
    assert s.call("#Break", []) == -1


def test_exit_in_body_skips_rest(tmp_path):
    arena, s = session_from_text(
        tmp_path, "-> #b1(), #Exit(), #b3() | (key == 1);")
    b1, b3 = Script([({}, 1)]), Script([({}, 1)])
    s.register_host("b1", b1)
    s.register_host("b3", b3)
    assert s.fire_entry_rules(1) == 0
    assert b1.calls and not b3.calls


def test_break_in_list_leaves_with_interrupt(tmp_path):
    arena, s = session_from_text(tmp_path,
                                 "-> {#Break(),}, #after() | (key == 1);")
    after = Script([({}, 1)])
    s.register_host("after", after)
    assert s.fire_entry_rules(1) == -1
    assert not after.calls


# --- sandboxed functions ----------------------------------------------------------

def test_spawn_disabled(ctx):
    arena, s = ctx
    with pytest.raises(UnsupportedOperationError):
        s.call("#Spawn", [arena.intern_word("true"), arena.intern_word("x")])


def test_system_r_disabled(ctx):
    arena, s = ctx
    with pytest.raises(UnsupportedOperationError):
        s.call("#SystemR", [arena.intern_word("true")])


def test_system_r_enabled_runs():
    arena = Arena()
    s = Session(arena, enable_spawn=True)
    assert s.call("#SystemR", [arena.intern_word("true")]) == 1
    assert s.call("#SystemR", [arena.intern_word("false")]) == 0


# --- return-code protocol property -------------------------------------------------

_PURE_TWO_ARG = ["Eq", "Ne", "Ge", "Le", "Grtdat", "Ltldat", "Belong", "Part"]


@given(st.sampled_from(_PURE_TWO_ARG),
       st.sampled_from(["w1", "w2", "2024-01-01", "5"]),
       st.sampled_from(["w1", "w2", "2024-01-02", "7"]))
@settings(max_examples=80, deadline=None)
def test_builtins_return_codes(name, a, b):
    arena = Arena()
    s = Session(arena)
    va, vb = arena.intern_word(a), arena.intern_word(b)
    assert s.call(f"#{name}", [va, vb]) in (1, 0, -1)


@given(st.integers(-5, 5), st.integers(-5, 5))
@settings(max_examples=40, deadline=None)
def test_arith_return_codes(x, y):
    arena = Arena()
    s = Session(arena)
    t = VarTable(s)
    var = arena.variable("n")
    t.bind(var, arena.intern_number(x))
    assert s.call("#Inc", [var, arena.intern_number(y)], t) == 1
    assert arena.number_value(t.lookup(var)) == x + y
