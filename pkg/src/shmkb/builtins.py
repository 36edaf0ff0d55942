"""The standard function library.

Every builtin returns 1 (condition holds), 0 (failure) or -1 (interrupt).
#Save, #Delete and #Not are second-level: they apply to the sentence that
follows them rather than to an argument list.
"""

from __future__ import annotations

import re
import subprocess
from dataclasses import dataclass
from datetime import date, datetime
from typing import Callable

from . import rulelang, store
from .errors import (
    AssignmentError,
    BindingError,
    EngineTypeError,
    ExitUnwind,
    UnsupportedOperationError,
)

_DATE_RE = re.compile(r"\d{4}-\d{2}-\d{2}\Z")


@dataclass(frozen=True)
class Builtin:
    name: str
    arity: int
    second_level: bool
    fn: Callable


def _value(session, rid, table):
    v = session.value_of(rid, table)
    if v is None:
        raise BindingError(
            f"unbound argument {session.arena.text_of(rid)!r}")
    return v


def _as_number(session, rid):
    arena = session.arena
    if arena.is_number(rid):
        return arena.number_value(rid)
    if arena.is_word(rid):
        return rulelang.parse_number_text(arena.word_text(rid))
    return None


def _comparable(session, rid):
    n = _as_number(session, rid)
    if n is not None:
        return (0, n)
    return (1, session.arena.text_of(rid))


def _compare(session, z1, z2, table):
    v1, v2 = _value(session, z1, table), _value(session, z2, table)
    k1, k2 = _comparable(session, v1), _comparable(session, v2)
    if k1[0] != k2[0]:
        # mixed number/word: compare rendered text
        k1 = (1, session.arena.text_of(v1))
        k2 = (1, session.arena.text_of(v2))
    return (k1 > k2) - (k1 < k2), v1, v2


def bi_eq(session, args, table, _rid):
    z1, z2 = args
    v1, v2 = _value(session, z1, table), _value(session, z2, table)
    if v1 == v2:
        return 1
    n1, n2 = _as_number(session, v1), _as_number(session, v2)
    if n1 is not None and n2 is not None:
        return 1 if n1 == n2 else 0
    return 0


def bi_ne(session, args, table, rid):
    code = bi_eq(session, args, table, rid)
    return 1 - code if code in (0, 1) else code


def bi_ge(session, args, table, _rid):
    cmp, _, _ = _compare(session, args[0], args[1], table)
    return 1 if cmp >= 0 else 0


def bi_le(session, args, table, _rid):
    cmp, _, _ = _compare(session, args[0], args[1], table)
    return 1 if cmp <= 0 else 0


def bi_fix(session, args, table, _rid):
    """(z1 := z2): bind with numeric coercion; a left-side pattern with
    variables destructures the right value."""
    z1, z2 = args
    arena = session.arena
    value = _value(session, z2, table)
    if arena.is_word(value):
        num = rulelang.parse_number_text(arena.word_text(value))
        if num is not None:
            value = arena.intern_number(num)
    if arena.is_variable(z1) or z1 == session.key_var:
        table.bind(z1, value)
        return 1
    if arena.node(z1).has_vars:
        scratch: dict[int, int] = {}
        if session.match(z1, value, table, scratch):
            for k, v in scratch.items():
                table.bind(k, v)
            return 1
        return 0
    raise AssignmentError(
        f"cannot assign to constant {arena.text_of(z1)!r}")


def bi_move(session, args, table, _rid):
    """Copy a binding verbatim, no numeric coercion."""
    z1, z2 = args
    if not (session.arena.is_variable(z1) or z1 == session.key_var):
        raise AssignmentError(
            f"#Move target must be a variable, got "
            f"{session.arena.text_of(z1)!r}")
    table.bind(z1, _value(session, z2, table))
    return 1


def _arith(session, args, table, op):
    z1, z2 = args
    arena = session.arena
    if not (arena.is_variable(z1) or z1 == session.key_var):
        raise AssignmentError("#Inc/#Dec target must be a variable")
    v1 = table.lookup(z1)
    if v1 is None:
        raise BindingError(f"variable {arena.variable_name(z1)!r} is unbound")
    n1 = _as_number(session, v1)
    n2 = _as_number(session, _value(session, z2, table))
    if n1 is None or n2 is None:
        raise EngineTypeError("#Inc/#Dec need numeric values")
    table.bind(z1, arena.intern_number(op(n1, n2)))
    return 1


def bi_inc(session, args, table, _rid):
    return _arith(session, args, table, lambda a, b: a + b)


def bi_dec(session, args, table, _rid):
    return _arith(session, args, table, lambda a, b: a - b)


def bi_belong(session, args, table, _rid):
    v1, v2 = _value(session, args[0], table), _value(session, args[1], table)
    return 1 if v1 in session.arena.node(v2).inverse_refs else 0


def _leaves(arena, rid, out):
    node = arena.node(rid)
    if node.flags & store.F_VARMARK:
        out.append(("m", 0))
        return
    if node.is_elementary:
        out.append(("c" if node.is_char else "e", node.payload))
        return
    for c in node.inverse_refs:
        _leaves(arena, c, out)


def bi_part(session, args, table, _rid):
    """1 iff z1's leaf sequence is a contiguous subsequence of z2's."""
    v1, v2 = _value(session, args[0], table), _value(session, args[1], table)
    s1: list = []
    s2: list = []
    _leaves(session.arena, v1, s1)
    _leaves(session.arena, v2, s2)
    if not s1:
        return 0
    for i in range(len(s2) - len(s1) + 1):
        if s2[i:i + len(s1)] == s1:
            return 1
    return 0


def bi_date(session, args, table, _rid):
    z = args[0]
    if not session.arena.is_variable(z):
        raise AssignmentError("#Date needs a variable")
    table.bind(z, session.arena.intern_word(date.today().isoformat()))
    return 1


def bi_time(session, args, table, _rid):
    z = args[0]
    if not session.arena.is_variable(z):
        raise AssignmentError("#Time needs a variable")
    table.bind(z, session.arena.intern_word(
        datetime.now().strftime("%H:%M:%S")))
    return 1


def _parse_date(session, rid):
    arena = session.arena
    if not arena.is_word(rid):
        return None
    text = arena.word_text(rid)
    if not _DATE_RE.fullmatch(text):
        return None
    try:
        return date.fromisoformat(text)
    except ValueError:
        return None


def bi_tstdat(session, args, table, _rid):
    v = _value(session, args[0], table)
    return 1 if _parse_date(session, v) is not None else 0


def bi_grtdat(session, args, table, _rid):
    d1 = _parse_date(session, _value(session, args[0], table))
    d2 = _parse_date(session, _value(session, args[1], table))
    if d1 is None or d2 is None:
        return 0
    return 1 if d1 > d2 else 0


def bi_ltldat(session, args, table, _rid):
    d1 = _parse_date(session, _value(session, args[0], table))
    d2 = _parse_date(session, _value(session, args[1], table))
    if d1 is None or d2 is None:
        return 0
    return 1 if d1 < d2 else 0


def bi_list(session, args, table, call_rid):
    """Iteration source: succeeds once per element, rebinding the argument.

    The cursor lives on the session keyed by the call site, so the
    iteration survives the per-call rebinding of the argument.
    """
    z = args[0]
    arena = session.arena
    if not arena.is_variable(z):
        raise EngineTypeError("#List needs a variable")
    state = session.list_cursors.get(call_rid)
    if state is None:
        bound = table.lookup(z)
        if bound is None:
            raise BindingError(
                f"variable {arena.variable_name(z)!r} is unbound")
        node = arena.node(bound)
        if node.flags & store.F_EMPTY:
            return 0   # the empty relation is the empty list
        if node.code != store.LIST:
            raise EngineTypeError("#List needs a list value")
        state = (bound, 0)
    base, idx = state
    elements = arena.node(base).inverse_refs
    if idx >= len(elements):
        session.list_cursors.pop(call_rid, None)
        return 0
    session.list_cursors[call_rid] = (base, idx + 1)
    table.bind(z, elements[idx])
    return 1


def bi_break(session, args, table, _rid):
    return -1


def bi_exit(session, args, table, _rid):
    raise ExitUnwind()


def bi_not(session, target, table, _rid):
    code = session.eval_condition(target, table.derive_ci())
    if code == -1:
        return -1
    return 0 if code == 1 else 1


def _file_for_scheme(session, scheme, create):
    arena = session.arena
    pid = arena.paradigm_for(scheme)
    if pid is None and create:
        first_var = session.first_var_of(scheme)
        policy = store.CHRONOLOGICAL
        if first_var is not None:
            policy = arena.node(first_var).policy
        pid = arena.make_paradigm(scheme, policy=policy,
                                  kind=store.NON_EXECUTABLE)
    return pid


def _unwrap_scheme(session, target):
    node = session.arena.node(target)
    if node.level == 2 and node.code == store.LIST and node.inverse_refs:
        return node.inverse_refs[0]
    return target


def bi_save(session, target, table, _rid):
    """#Save: instantiate the following scheme and insert into its file."""
    arena = session.arena
    scheme = _unwrap_scheme(session, target)
    inst = session.instantiate(scheme, table, partial=False)
    pid = _file_for_scheme(session, scheme, create=True)
    arena.paradigm_insert(pid, inst, sort_key=session.file_sort_key(scheme))
    for var, value in session.pattern_bindings(scheme, inst).items():
        arena.paradigm_insert(var, value)
    return 1


def bi_delete(session, target, table, _rid):
    """#Delete: remove the first stored sentence matching the scheme."""
    arena = session.arena
    scheme = _unwrap_scheme(session, target)
    pid = _file_for_scheme(session, scheme, create=False)
    if pid is None:
        return 0
    for inst in arena.paradigm_values(pid):
        scratch: dict[int, int] = {}
        if not session.match(scheme, inst, table, scratch):
            continue
        arena.paradigm_remove(pid, inst)
        removed = session.pattern_bindings(scheme, inst)
        survivors = arena.paradigm_values(pid)
        for var, value in removed.items():
            still_used = any(
                session.pattern_bindings(scheme, other).get(var) == value
                for other in survivors)
            if not still_used:
                arena.paradigm_remove(var, value)
        return 1
    return 0


def _spawn_argv(session, args, table):
    argv = []
    for a in args:
        v = _value(session, a, table)
        argv.append(session.arena.text_of(v))
    return argv


def bi_spawn(session, args, table, _rid):
    if not session.enable_spawn:
        raise UnsupportedOperationError("#Spawn is disabled by configuration")
    subprocess.Popen(_spawn_argv(session, args, table))
    return 1


def bi_system_r(session, args, table, _rid):
    if not session.enable_spawn:
        raise UnsupportedOperationError(
            "#SystemR is disabled by configuration")
    argv = _spawn_argv(session, args, table)
    result = subprocess.run(argv[0], shell=True)
    return 1 if result.returncode == 0 else 0


REGISTRY: dict[str, Builtin] = {}


def _register(name, arity, second_level, fn):
    REGISTRY[name] = Builtin(name, arity, second_level, fn)


# two-argument functions
_register("Belong", 2, False, bi_belong)
_register("Dec", 2, False, bi_dec)
_register("Eq", 2, False, bi_eq)
_register("Fix", 2, False, bi_fix)
_register("Ge", 2, False, bi_ge)
_register("Grtdat", 2, False, bi_grtdat)
_register("Inc", 2, False, bi_inc)
_register("Le", 2, False, bi_le)
_register("Ltldat", 2, False, bi_ltldat)
_register("Move", 2, False, bi_move)
_register("Ne", 2, False, bi_ne)
_register("Part", 2, False, bi_part)
_register("Spawn", 2, False, bi_spawn)
# one-argument functions
_register("Date", 1, False, bi_date)
_register("List", 1, False, bi_list)
_register("SystemR", 1, False, bi_system_r)
_register("Time", 1, False, bi_time)
_register("Tstdat", 1, False, bi_tstdat)
# no arguments / second level
_register("Break", 0, False, bi_break)
_register("Delete", 0, True, bi_delete)
_register("Exit", 0, False, bi_exit)
_register("Not", 0, True, bi_not)
_register("Save", 0, True, bi_save)
