"""
Constraint store: live constraints, bindings, propagation history and the trail
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass
from enum import Enum
from typing import Dict, Iterable, Iterator, List, Optional, Set, Tuple

from .errors import ProgramError
from .terms import (
    Compound,
    Term,
    Variable,
    deref,
    format_resolved,
    identical,
    occurs,
    resolve,
    variables,
)

logger = logging.getLogger(__name__)

_mark_serials = itertools.count(1)

# relations whose two arguments may be swapped without changing meaning
SYMMETRIC_FUNCTORS = frozenset({("=", 2), ("!=", 2)})


class ConstraintKind(Enum):
    USER = "user"
    BUILTIN = "builtin"


class StoreStatus(Enum):
    ACTIVE = "active"
    FAILED = "failed"


@dataclass
class Constraint:
    kind: ConstraintKind
    functor: str
    args: Tuple[Term, ...]
    time: Optional[Term]
    id: int
    alive: bool = True

    @property
    def key(self) -> Tuple[str, int, bool]:
        return (self.functor, len(self.args), self.time is not None)

    def as_term(self) -> Term:
        term: Term = Compound(self.functor, self.args)
        if self.time is not None:
            term = Compound("@", (term, self.time))
        return term


@dataclass(frozen=True)
class Mark:
    serial: int
    trail_length: int


class ConstraintStore:
    """Live constraints indexed by functor, arity and timedness

    Every change is trailed so a mark can restore the exact earlier state.
    """

    def __init__(self):
        self.live: Dict[int, Constraint] = {}
        self.index: Dict[Tuple[str, int, bool], Dict[int, Constraint]] = {}
        self.bindings: Dict[int, Term] = {}
        self.history: Set[tuple] = set()
        self.trail: List[tuple] = []
        self.status = StoreStatus.ACTIVE
        self._ids = itertools.count(1)
        self._marks: List[Mark] = []
        # var id -> constraint ids that may mention it; a superset, never trailed
        self._watchers: Dict[int, Set[int]] = {}

    # -- constraints --------------------------------------------------------

    def add(self, functor: str, args: Tuple[Term, ...], time: Optional[Term] = None,
            kind: ConstraintKind = ConstraintKind.USER) -> Constraint:
        constraint = Constraint(kind, functor, tuple(args), time, next(self._ids))
        self._insert(constraint)
        self.trail.append(("add", constraint))
        for var in self._mentioned(constraint):
            self._watchers.setdefault(var.id, set()).add(constraint.id)
        return constraint

    def kill(self, constraint: Constraint):
        if not constraint.alive:
            return
        constraint.alive = False
        self._remove(constraint)
        self.trail.append(("kill", constraint))

    def _insert(self, constraint: Constraint):
        constraint.alive = True
        self.live[constraint.id] = constraint
        self.index.setdefault(constraint.key, {})[constraint.id] = constraint

    def _remove(self, constraint: Constraint):
        self.live.pop(constraint.id, None)
        bucket = self.index.get(constraint.key)
        if bucket is not None:
            bucket.pop(constraint.id, None)

    def get(self, cid: int) -> Optional[Constraint]:
        return self.live.get(cid)

    def candidates(self, functor: str, arity: int, timed: bool) -> List[Constraint]:
        """Live constraints for a head pattern, oldest first"""
        bucket = self.index.get((functor, arity, timed))
        if not bucket:
            return []
        return [bucket[cid] for cid in sorted(bucket)]

    def same(self, a: Constraint, b: Constraint) -> bool:
        """Identical constraints, up to argument order for symmetric relations"""
        if a.key != b.key:
            return False
        if a.time is not None and not identical(a.time, b.time, self.bindings):
            return False
        if self._same_args(a.args, b.args):
            return True
        return (a.functor, len(a.args)) in SYMMETRIC_FUNCTORS and self._same_args(a.args, b.args[::-1])

    def _same_args(self, left: Tuple[Term, ...], right: Tuple[Term, ...]) -> bool:
        return all(identical(x, y, self.bindings) for x, y in zip(left, right))

    def find_identical(self, functor: str, args: Tuple[Term, ...], time: Optional[Term]
                       ) -> Optional[Constraint]:
        wanted = Constraint(ConstraintKind.USER, functor, tuple(args), time, 0)
        for other in self.candidates(functor, len(args), time is not None):
            if self.same(wanted, other):
                return other
        return None

    def dedupe(self, constraint: Constraint) -> bool:
        """Keep the oldest of identical live copies; True if constraint survives"""
        for other in self.candidates(*constraint.key):
            if other.id == constraint.id or not self.same(constraint, other):
                continue
            if other.id < constraint.id:
                self.kill(constraint)
                return False
            self.kill(other)
        return True

    def _mentioned(self, constraint: Constraint) -> Iterator[Variable]:
        for arg in constraint.args:
            yield from variables(arg, self.bindings)
        if constraint.time is not None:
            yield from variables(constraint.time, self.bindings)

    def watching(self, bound: Iterable[Variable]) -> List[Constraint]:
        """Live constraints that may mention any of the newly bound variables"""
        ids: Set[int] = set()
        for var in bound:
            watchers = self._watchers.get(var.id)
            if not watchers:
                continue
            ids |= watchers
            for inner in variables(var, self.bindings):
                self._watchers.setdefault(inner.id, set()).update(watchers)
        return [self.live[cid] for cid in sorted(ids) if cid in self.live]

    # -- bindings -----------------------------------------------------------

    def bind(self, var: Variable, term: Term):
        self.bindings[var.id] = term
        self.trail.append(("bind", var.id))

    def unify(self, a: Term, b: Term) -> Optional[List[Variable]]:
        """Unify with occurs check; returns the newly bound variables or None on clash"""
        start = len(self.trail)
        bound: List[Variable] = []
        if self._unify(a, b, bound):
            return bound
        self._undo(start)
        return None

    def _unify(self, a: Term, b: Term, bound: List[Variable]) -> bool:
        a = deref(a, self.bindings)
        b = deref(b, self.bindings)
        if isinstance(a, Variable) and isinstance(b, Variable) and a.id == b.id:
            return True
        if isinstance(a, Variable):
            return self._bind_checked(a, b, bound)
        if isinstance(b, Variable):
            return self._bind_checked(b, a, bound)
        if isinstance(a, Compound) and isinstance(b, Compound):
            if a.functor != b.functor or len(a.args) != len(b.args):
                return False
            return all(self._unify(x, y, bound) for x, y in zip(a.args, b.args))
        return a == b

    def _bind_checked(self, var: Variable, term: Term, bound: List[Variable]) -> bool:
        if occurs(var, term, self.bindings):
            return False
        self.bind(var, term)
        bound.append(var)
        return True

    # -- history ------------------------------------------------------------

    def record(self, entry: tuple) -> bool:
        """Add a propagation history entry; False when already present"""
        if entry in self.history:
            return False
        self.history.add(entry)
        self.trail.append(("history", entry))
        return True

    # -- snapshot / backtrack -----------------------------------------------

    def fail(self):
        self.status = StoreStatus.FAILED

    def snapshot(self) -> Mark:
        mark = Mark(next(_mark_serials), len(self.trail))
        self._marks.append(mark)
        return mark

    def backtrack(self, mark: Mark):
        """Restore the state at mark, discarding it and every newer mark"""
        if mark not in self._marks:
            raise ProgramError(f"stale or foreign mark {mark.serial}")
        while self._marks:
            if self._marks.pop() == mark:
                break
        self._undo(mark.trail_length)
        self.status = StoreStatus.ACTIVE

    def _undo(self, length: int):
        while len(self.trail) > length:
            action, payload = self.trail.pop()
            if action == "add":
                self._remove(payload)
                payload.alive = False
            elif action == "kill":
                self._insert(payload)
            elif action == "bind":
                del self.bindings[payload]
            elif action == "history":
                self.history.discard(payload)

    # -- reporting ----------------------------------------------------------

    def format_constraint(self, constraint: Constraint) -> str:
        return format_resolved(constraint.as_term(), self.bindings)

    def canonical(self) -> List[str]:
        """Residual store as sorted text, independent of constraint ids"""
        return sorted(self.format_constraint(c) for c in self.live.values())

    def resolve(self, term: Term) -> Term:
        return resolve(term, self.bindings)
