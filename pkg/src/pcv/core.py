"""
Core Rewriting Engine
Committed-choice execution of guarded simplification, propagation and
simpagation rules with a labeling phase and chronological backtracking
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Iterator, List, Mapping, Optional, Sequence, Tuple, Union

from .builtins import check_guard, run_builtin
from .errors import BudgetExhausted, ProgramError
from .rules import (
    LABELING,
    BodyItem,
    ChrRule,
    ConstraintPattern,
    Disjunction,
    RuleProgram,
    TermGoal,
    parse_goal,
    pattern_from_term,
)
from .store import Constraint, ConstraintStore, Mark, StoreStatus
from .terms import (
    Compound,
    Term,
    Variable,
    deref,
    fresh_var,
    format_term,
    identical,
    resolve,
    sort_key,
)

logger = logging.getLogger(__name__)

DEFAULT_BUDGET = 1_000_000


@dataclass(frozen=True)
class Exec:
    item: BodyItem


@dataclass(frozen=True)
class Activate:
    cid: int


Task = Union[Exec, Activate]


@dataclass
class ChoicePoint:
    mark: Mark
    branches: Tuple[Tuple[BodyItem, ...], ...]
    tasks: Tuple[Task, ...]
    labeling_active: bool


@dataclass
class Match:
    """Head assignment for one rule; constraints are aligned with rule.heads"""
    rule_index: int
    rule: ChrRule
    constraints: Tuple[Constraint, ...]
    subst: Dict[int, Term]

    @property
    def ids(self) -> Tuple[int, ...]:
        return tuple(c.id for c in self.constraints)

    @property
    def history_key(self) -> tuple:
        return (self.rule_index, self.ids)


class SolveStatus(Enum):
    SATISFIABLE = "satisfiable"
    UNSATISFIABLE = "unsatisfiable"


@dataclass
class SolveStatistics:
    firings: int = 0
    choice_points: int = 0
    backtracks: int = 0
    elapsed: float = 0.0


@dataclass
class SolveResult:
    status: SolveStatus
    witness: Dict[str, str] = field(default_factory=dict)
    residual: List[str] = field(default_factory=list)
    statistics: SolveStatistics = field(default_factory=SolveStatistics)

    @property
    def satisfiable(self) -> bool:
        return self.status is SolveStatus.SATISFIABLE


# ---------------------------------------------------------------------------
# Matching


def match_term(pattern: Term, term: Term, subst: Dict[int, Term], bindings: Mapping[int, Term]) -> bool:
    """One-way matching: rule variables bind, store terms are left alone"""
    if isinstance(pattern, Variable):
        if pattern.id in subst:
            return identical(subst[pattern.id], term, bindings)
        subst[pattern.id] = deref(term, bindings)
        return True
    term = deref(term, bindings)
    if isinstance(term, Variable):
        return False
    if isinstance(pattern, Compound):
        return (isinstance(term, Compound) and term.functor == pattern.functor
                and len(term.args) == len(pattern.args)
                and all(match_term(p, t, subst, bindings) for p, t in zip(pattern.args, term.args)))
    return pattern == term


def match_constraint(head: ConstraintPattern, constraint: Constraint,
                     subst: Dict[int, Term], bindings: Mapping[int, Term]) -> bool:
    if head.functor != constraint.functor or head.arity != len(constraint.args):
        return False
    if (head.time is None) != (constraint.time is None):
        return False
    if not all(match_term(p, t, subst, bindings) for p, t in zip(head.args, constraint.args)):
        return False
    return head.time is None or match_term(head.time, constraint.time, subst, bindings)


def match_heads(rule: ChrRule, store: ConstraintStore, rule_index: int = 0,
                active: Optional[Tuple[int, Constraint]] = None) -> Iterator[Match]:
    """Injective head assignments over live constraints, oldest partners first

    Propagation matches already in the history are skipped.
    """
    heads = rule.heads
    positions = list(range(len(heads)))
    if active is not None:
        positions.remove(active[0])
        positions.insert(0, active[0])

    def extend(depth: int, chosen: Dict[int, Constraint], subst: Dict[int, Term]):
        if depth == len(positions):
            yield Match(rule_index, rule, tuple(chosen[i] for i in range(len(heads))), subst)
            return
        position = positions[depth]
        head = heads[position]
        if active is not None and depth == 0:
            candidates = [active[1]]
        else:
            candidates = store.candidates(head.functor, head.arity, head.time is not None)
        used = {c.id for c in chosen.values()}
        for constraint in candidates:
            if constraint.id in used or not constraint.alive:
                continue
            trial = dict(subst)
            if match_constraint(head, constraint, trial, store.bindings):
                chosen[position] = constraint
                yield from extend(depth + 1, chosen, trial)
                del chosen[position]

    for match in extend(0, {}, {}):
        if rule.is_propagation and match.history_key in store.history:
            continue
        yield match


def instantiate(term: Term, subst: Mapping[int, Term], local: Dict[int, Variable]) -> Term:
    """Apply a head match; variables outside the heads become fresh locals"""
    if isinstance(term, Variable):
        if term.id in subst:
            return subst[term.id]
        if term.id not in local:
            local[term.id] = fresh_var(term.name)
        return local[term.id]
    if isinstance(term, Compound):
        return Compound(term.functor, tuple(instantiate(arg, subst, local) for arg in term.args))
    return term


def instantiate_item(item: BodyItem, subst: Mapping[int, Term], local: Dict[int, Variable]) -> BodyItem:
    if isinstance(item, Disjunction):
        return Disjunction(tuple(
            tuple(instantiate_item(sub, subst, local) for sub in branch) for branch in item.branches))
    time_term = None if item.time is None else instantiate(item.time, subst, local)
    if isinstance(item, TermGoal):
        return TermGoal(instantiate(item.term, subst, local), time_term)
    return ConstraintPattern(item.functor, tuple(instantiate(a, subst, local) for a in item.args), time_term)


def guard_holds(match: Match, store: ConstraintStore) -> bool:
    guard = [instantiate_item(test, match.subst, {}) for test in match.rule.guard]
    return check_guard(guard, store)


# ---------------------------------------------------------------------------
# Search


class SearchState:
    """One solving attempt: store, task stack, choice points and budget"""

    def __init__(self, program: RuleProgram, budget: int = DEFAULT_BUDGET):
        if budget < 0:
            raise ProgramError("step budget must be non-negative")
        self.program = program
        self.store = ConstraintStore()
        self.budget = budget
        self.labeling_active = False
        self.choice_points: List[ChoicePoint] = []
        self.tasks: List[Task] = []
        self.statistics = SolveStatistics()

    # -- public operations --------------------------------------------------

    def snapshot(self) -> Mark:
        return self.store.snapshot()

    def backtrack(self, mark: Mark):
        self.store.backtrack(mark)

    def add_goal(self, items: Sequence[BodyItem]):
        self._push_items(items)

    def unify(self, a: Term, b: Term) -> bool:
        bound = self.store.unify(a, b)
        if bound is None:
            return False
        if bound:
            self._wake(bound)
        return True

    def post(self, pattern: ConstraintPattern) -> bool:
        """Run a built-in or add a user constraint and schedule its activation"""
        if pattern.is_builtin:
            return run_builtin(pattern, self)
        if (pattern.key in self.program.already_in_store
                and self.store.find_identical(pattern.functor, pattern.args, pattern.time)):
            return True
        constraint = self.store.add(pattern.functor, pattern.args, pattern.time)
        self.tasks.append(Activate(constraint.id))
        return True

    def fire(self, match: Match, resume: Optional[Task] = None):
        """Commit to a match: remove heads, record history, schedule the body"""
        if self.budget <= 0:
            raise BudgetExhausted(self.statistics.firings)
        self.budget -= 1
        self.statistics.firings += 1
        rule = match.rule
        logger.debug(f"Firing {rule.name} on {list(match.ids)}")
        for constraint in match.constraints[len(rule.kept):]:
            self.store.kill(constraint)
        if rule.is_propagation:
            self.store.record(match.history_key)
        local: Dict[int, Variable] = {}
        body = [instantiate_item(item, match.subst, local) for item in rule.body]
        if resume is not None:
            self.tasks.append(resume)
        self._push_items(body)

    def run(self) -> SolveStatus:
        while True:
            if self.store.status is StoreStatus.FAILED:
                if not self._retry():
                    return SolveStatus.UNSATISFIABLE
                continue
            if not self.tasks:
                if self.labeling_active:
                    return SolveStatus.SATISFIABLE
                logger.debug("Fixpoint reached, starting labeling")
                self.labeling_active = True
                self.post(ConstraintPattern(LABELING))
                continue
            task = self.tasks.pop()
            if isinstance(task, Activate):
                constraint = self.store.get(task.cid)
                if constraint is not None:
                    self._activate(constraint)
            elif not self._execute(task.item):
                self.store.fail()

    # -- internals ----------------------------------------------------------

    def _push_items(self, items: Sequence[BodyItem]):
        for item in reversed(items):
            self.tasks.append(Exec(item))

    def _activate(self, constraint: Constraint):
        for occurrence in self.program.lookup(*constraint.key):
            rule = self.program.rules[occurrence.rule_index]
            active = (occurrence.head_index, constraint)
            for match in match_heads(rule, self.store, occurrence.rule_index, active):
                if guard_holds(match, self.store):
                    self.fire(match, Activate(constraint.id) if occurrence.head_index < len(rule.kept) else None)
                    return

    def _execute(self, item: BodyItem) -> bool:
        if isinstance(item, Disjunction):
            self._branch(item.branches)
            return True
        if isinstance(item, TermGoal):
            value = deref(item.term, self.store.bindings)
            if isinstance(value, Variable):
                raise ProgramError(f"call of unbound goal variable {item.term}")
            item = pattern_from_term(value, item.time)
        return self.post(item)

    def _branch(self, branches: Tuple[Tuple[BodyItem, ...], ...]):
        first, rest = branches[0], branches[1:]
        if rest:
            mark = self.store.snapshot()
            self.choice_points.append(ChoicePoint(mark, rest, tuple(self.tasks), self.labeling_active))
            self.statistics.choice_points += 1
        self._push_items(first)

    def _retry(self) -> bool:
        if not self.choice_points:
            return False
        point = self.choice_points.pop()
        self.store.backtrack(point.mark)
        self.statistics.backtracks += 1
        logger.debug(f"Backtracking to choice point {point.mark.serial}")
        self.tasks = list(point.tasks)
        self.labeling_active = point.labeling_active
        self._branch(point.branches)
        return True

    def _wake(self, bound: Sequence[Variable]):
        in_store = self.program.already_in_store
        woken = []
        for constraint in self.store.watching(bound):
            if not constraint.alive:
                continue
            if (constraint.functor, len(constraint.args)) in in_store and not self.store.dedupe(constraint):
                continue
            woken.append(constraint)
        for constraint in reversed(woken):
            if constraint.alive:
                self.tasks.append(Activate(constraint.id))


# ---------------------------------------------------------------------------
# Entry point


def alpha_residual(store: ConstraintStore, names: Optional[Dict[int, Variable]] = None) -> List[str]:
    """Residual constraints in canonical order with variables renamed by first appearance

    Pass `names` to share the renaming with other printed terms.
    """
    terms = [resolve(c.as_term(), store.bindings) for c in store.live.values()]
    terms.sort(key=lambda t: (format_term(_blank(t)), sort_key(t)))
    names = {} if names is None else names
    return [format_term(_rename(t, names)) for t in terms]


def _blank(term: Term) -> Term:
    if isinstance(term, Variable):
        return Variable("_", 0)
    if isinstance(term, Compound):
        return Compound(term.functor, tuple(_blank(a) for a in term.args))
    return term


def _rename(term: Term, names: Dict[int, Variable]) -> Term:
    if isinstance(term, Variable):
        if term.id not in names:
            names[term.id] = Variable(f"_G{len(names)}", len(names))
        return names[term.id]
    if isinstance(term, Compound):
        return Compound(term.functor, tuple(_rename(a, names) for a in term.args))
    return term


def solve(goal: Union[str, Sequence[BodyItem]], program: RuleProgram, budget: int = DEFAULT_BUDGET,
          variables: Optional[Mapping[str, Variable]] = None) -> SolveResult:
    """Solve a goal to a labeled fixpoint

    Raises BudgetExhausted when the firing budget runs out.
    """
    if isinstance(goal, str):
        items, named = parse_goal(goal, dict(variables or {}))
        variables = named
    else:
        items = tuple(goal)
    state = SearchState(program, budget)
    state.add_goal(items)
    started = time.perf_counter()
    try:
        status = state.run()
    finally:
        state.statistics.elapsed = time.perf_counter() - started
    result = SolveResult(status, statistics=state.statistics)
    if status is SolveStatus.SATISFIABLE:
        names: Dict[int, Variable] = {}
        result.residual = alpha_residual(state.store, names)
        for name, var in sorted((variables or {}).items()):
            if not name.startswith("_"):
                result.witness[name] = format_term(_rename(resolve(var, state.store.bindings), names))
    logger.debug(f"Solved goal: {status.value} after {state.statistics.firings} firings")
    return result
