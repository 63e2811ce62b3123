"""
Built-in guard tests and body built-ins
"""

from __future__ import annotations

import itertools
import logging
from typing import List, Protocol, Sequence

from .errors import ProgramError
from .rules import ConstraintPattern, pattern_from_term
from .store import ConstraintStore
from .terms import (
    Atom,
    Compound,
    IntLiteral,
    Term,
    Variable,
    deref,
    identical,
    is_ground,
    list_items,
)

logger = logging.getLogger(__name__)

ORDER_TESTS = {
    "<": lambda a, b: a < b,
    "=<": lambda a, b: a <= b,
    ">": lambda a, b: a > b,
    ">=": lambda a, b: a >= b,
}


class BuiltinHost(Protocol):
    """What body built-ins need from the running search"""
    store: ConstraintStore

    def unify(self, a: Term, b: Term) -> bool: ...

    def post(self, pattern: ConstraintPattern) -> bool: ...


# ---------------------------------------------------------------------------
# Guards


def check_guard(guard: Sequence[ConstraintPattern], store: ConstraintStore) -> bool:
    """Entailment of every test; never binds anything"""
    return all(test_entailed(test, store) for test in guard)


def test_entailed(test: ConstraintPattern, store: ConstraintStore) -> bool:
    bindings = store.bindings
    name, args = test.functor, test.args
    if name == "true" and not args:
        return True
    if name == "fail" and not args:
        return False
    if name == "ground" and len(args) == 1:
        return is_ground(args[0], bindings)
    if name == "nonvar" and len(args) == 1:
        return not isinstance(deref(args[0], bindings), Variable)
    if name == "integer" and len(args) == 1:
        return isinstance(deref(args[0], bindings), IntLiteral)
    if name == "is_list" and len(args) == 1:
        return list_items(args[0], bindings) is not None
    if name == "not" and len(args) == 1:
        inner = deref(args[0], bindings)
        if isinstance(inner, Variable):
            return False
        return not test_entailed(pattern_from_term(inner), store)
    if name == "=" and len(args) == 2:
        return identical(args[0], args[1], bindings)
    if name == "!=" and len(args) == 2:
        return not identical(args[0], args[1], bindings)
    if name in ORDER_TESTS and len(args) == 2:
        left, right = deref(args[0], bindings), deref(args[1], bindings)
        if isinstance(left, IntLiteral) and isinstance(right, IntLiteral):
            return ORDER_TESTS[name](left.value, right.value)
        return False
    if name in ("member", "not_member") and len(args) == 2:
        items = list_items(args[1], bindings)
        if items is None:
            return False
        found = any(identical(args[0], item, bindings) for item in items)
        return found if name == "member" else not found
    raise ProgramError(f"unknown guard built-in {name}/{len(args)}")


# ---------------------------------------------------------------------------
# Body built-ins


def run_builtin(pattern: ConstraintPattern, host: BuiltinHost) -> bool:
    """Execute a body built-in; False means failure"""
    store = host.store
    bindings = store.bindings
    name, args = pattern.functor, pattern.args
    if name == "true":
        return True
    if name == "fail":
        return False
    if name == "=":
        return host.unify(args[0], args[1])
    if name == "member":
        return _member(args[0], args[1], host)
    if name == "not_member":
        return _not_member(args[0], args[1], host)
    if name == "length":
        items = list_items(args[0], bindings)
        if items is None:
            raise ProgramError("length/2 needs a proper list")
        return host.unify(args[1], IntLiteral(len(items)))
    if name == "cardinal":
        return _cardinal(args[0], args[1], store)
    if name == "apply":
        return host.post(_apply_closure(args[0], args[1:], store))
    raise ProgramError(f"unknown body built-in {name}/{len(args)}")


def _member(element: Term, collection: Term, host: BuiltinHost) -> bool:
    bindings = host.store.bindings
    items = list_items(collection, bindings)
    if items is None:
        return host.post(ConstraintPattern("known_member", (element, collection)))
    if is_ground(element, bindings):
        return any(identical(element, item, bindings) for item in items)
    return host.post(ConstraintPattern("in", (element, collection)))


def _not_member(element: Term, collection: Term, host: BuiltinHost) -> bool:
    bindings = host.store.bindings
    items = list_items(collection, bindings)
    if items is not None and is_ground(element, bindings):
        return not any(identical(element, item, bindings) for item in items)
    return host.post(ConstraintPattern("notin", (element, collection)))


def _apply_closure(closure: Term, extra: Sequence[Term], store: ConstraintStore) -> ConstraintPattern:
    closure = deref(closure, store.bindings)
    if isinstance(closure, Compound):
        return ConstraintPattern(closure.functor, closure.args + tuple(extra))
    if isinstance(closure, Atom):
        return ConstraintPattern(closure.symbol, tuple(extra))
    raise ProgramError(f"cannot apply {closure}")


def known_members(collection: Term, store: ConstraintStore) -> List[Term]:
    """Members of a set known from the list itself or from live membership constraints"""
    bindings = store.bindings
    items = list_items(collection, bindings)
    if items is not None:
        return items
    members: List[Term] = []
    for functor in ("known_member", "in"):
        for c in store.candidates(functor, 2, False):
            if identical(c.args[1], collection, bindings):
                members.append(c.args[0])
    unique: List[Term] = []
    for member in members:
        if not any(identical(member, seen, bindings) for seen in unique):
            unique.append(member)
    return unique


def provably_distinct(a: Term, b: Term, store: ConstraintStore) -> bool:
    bindings = store.bindings
    if is_ground(a, bindings) and is_ground(b, bindings):
        return not identical(a, b, bindings)
    for functor in ("!=", "<"):
        for c in store.candidates(functor, 2, False):
            x, y = c.args
            if ((identical(x, a, bindings) and identical(y, b, bindings))
                    or (identical(x, b, bindings) and identical(y, a, bindings))):
                return True
    return False


def _cardinal(collection: Term, bound: Term, store: ConstraintStore) -> bool:
    bound = deref(bound, store.bindings)
    if not isinstance(bound, IntLiteral):
        return True
    if bound.value < 0:
        return False
    members = known_members(collection, store)
    size = bound.value + 1
    if len(members) < size:
        return True
    for group in itertools.combinations(members, size):
        if all(provably_distinct(a, b, store) for a, b in itertools.combinations(group, 2)):
            logger.debug(f"cardinal: {size} distinct members exceed bound {bound.value}")
            return False
    return True
