"""
Property-based tests for the tri-valued logic, the store trail and the kernel packs
"""

import itertools
import operator
from dataclasses import replace

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pcv.core import DEFAULT_BUDGET, SearchState, SolveStatus, solve
from pcv.domain import GroundEvent, values_term
from pcv.errors import BudgetExhausted
from pcv.expressions import literal_term
from pcv.goals import goal_program
from pcv.kernel import build_enumeration_pack, kernel_packs
from pcv.rules import ConstraintPattern, RuleProgram
from pcv.spl import TriValue, compile_policy, evaluate_policy, evaluate_tri, parse_spl, tri_and, tri_not, tri_or
from pcv.templates import PolicyTemplates, policy_library
from pcv.terms import Compound, IntLiteral, fresh_var, make_list

pytestmark = pytest.mark.property

PROGRAM = RuleProgram.compose(kernel_packs() + (build_enumeration_pack(),))

COMPARISONS = {
    "=<": operator.le,
    "<": operator.lt,
    ">=": operator.ge,
    ">": operator.gt,
    "=": operator.eq,
    "!=": operator.ne,
}

pairs = st.tuples(st.booleans(), st.booleans())
canonical = st.sampled_from([(True, True), (True, False), (False, True)])

USERS = ["alice", "bob", "eve"]
DOCS = ["d1", "d2"]
POLICIES = {key: parse_spl(policy_library()[key]) for key in ("private", "idempotent", "disjoint", "either",
                                                            "deny_print", "permissive")}

events = st.builds(
    GroundEvent,
    actor=st.sampled_from(USERS),
    action=st.sampled_from(["SendEmail", "Print", "Delete"]),
    target=st.sampled_from(DOCS + ["memo"]),
    pars=st.tuples(st.sampled_from(USERS)),
    time=st.integers(1, 3),
)


class TestTriValuedLaws:
    """Algebraic laws of the tri-valued connectives"""

    @given(canonical, canonical)
    def test_and_commutes(self, left, right):
        assert tri_and(left, right) == tri_and(right, left)

    @given(canonical, canonical, canonical)
    def test_and_associates(self, a, b, c):
        assert tri_and(tri_and(a, b), c) == tri_and(a, tri_and(b, c))

    @given(canonical)
    def test_not_applicable_is_the_unit(self, value):
        assert tri_and(value, (False, True)) == value
        assert tri_or((False, False), value) == value

    @given(pairs, pairs)
    def test_de_morgan(self, left, right):
        assert tri_not(tri_and(left, right)) == tri_or(tri_not(left), tri_not(right))

    @given(canonical)
    def test_double_negation(self, value):
        assert tri_not(tri_not(value)) == value


class TestOrderPack:
    """Ground soundness and order independence"""

    @settings(max_examples=60, deadline=None)
    @given(st.integers(0, 5), st.sampled_from(sorted(COMPARISONS)), st.integers(0, 5))
    def test_ground_comparisons_are_sound(self, left, op, right):
        result = solve(f"{left} {op} {right}", PROGRAM)
        assert result.satisfiable is COMPARISONS[op](left, right)

    @settings(max_examples=20, deadline=None)
    @given(st.permutations(["A =< B", "B =< C", "C < A"]))
    def test_strict_cycle_in_any_order(self, parts):
        assert solve(", ".join(parts), PROGRAM).status is SolveStatus.UNSATISFIABLE

    @settings(max_examples=20, deadline=None)
    @given(st.permutations(["A =< B", "B =< C", "A < C"]))
    def test_chain_in_any_order(self, parts):
        assert solve(", ".join(parts), PROGRAM).status is SolveStatus.SATISFIABLE


class TestStore:
    """Trail restoration and duplicate suppression"""

    @settings(max_examples=50, deadline=None)
    @given(st.lists(st.tuples(st.integers(0, 3), st.integers(0, 3)), max_size=6),
           st.lists(st.tuples(st.integers(0, 3), st.integers(0, 5)), max_size=4))
    def test_backtrack_restores_the_store(self, constraints, bindings):
        state = SearchState(PROGRAM)
        xs = [fresh_var(f"X{i}") for i in range(4)]
        state.post(ConstraintPattern("=<", (xs[0], xs[1])))
        canonical_before, bindings_before = state.store.canonical(), dict(state.store.bindings)
        mark = state.snapshot()
        for a, b in constraints:
            state.post(ConstraintPattern("=<", (xs[a], xs[b])))
        for index, value in bindings:
            state.unify(xs[index], IntLiteral(value))
        state.backtrack(mark)
        assert state.store.canonical() == canonical_before
        assert state.store.bindings == bindings_before

    @given(st.integers(1, 5))
    def test_membership_is_stored_once(self, copies):
        state = SearchState(PROGRAM)
        x, s = fresh_var("X"), fresh_var("S")
        for _ in range(copies):
            state.post(ConstraintPattern("in", (x, s)))
        assert len(state.store.candidates("in", 2, False)) == 1


def _event_term(event: GroundEvent) -> Compound:
    pars = make_list([literal_term(p) for p in event.pars])
    return Compound("event", (literal_term(event.actor), literal_term(event.action),
                              literal_term(event.target), pars, literal_term(event.time)))


class TestCompiledPolicies:
    """Compiled rules decide like direct evaluation"""

    @settings(max_examples=40, deadline=None)
    @given(st.sampled_from(sorted(POLICIES)), events,
           st.lists(st.sampled_from(USERS), unique=True), st.lists(st.sampled_from(DOCS), unique=True))
    def test_engine_matches_direct_evaluation(self, key, event, org_users, idocs):
        model = POLICIES[key]
        sets = {"OrgUsers": org_users, "IDocs": idocs}
        compiled = compile_policy(model)
        result = fresh_var("R")
        call = compiled.call(_event_term(event), [values_term(sets[n]) for n in model.set_parameters],
                             compiled.locals_term([values_term(sets[n]) for n in model.local_sets]),
                             compiled.globals_term([]), result)
        state = SearchState(goal_program(compiled.rules))
        state.add_goal([call])
        assert state.run() is SolveStatus.SATISFIABLE
        decision = evaluate_tri(state.store.resolve(result), event)
        assert decision is evaluate_policy(model, event, sets)
        assert isinstance(decision, TriValue)


VARIABLES = [f"V{i}" for i in range(12)]
ORDER_OPS = ["=<", "<", ">=", ">", "!="]

operand = st.one_of(st.sampled_from(VARIABLES), st.integers(0, 3).map(str))
small_lists = st.lists(st.integers(0, 3), unique=True, max_size=3).map(
    lambda items: "[" + ", ".join(map(str, items)) + "]")

order_constraints = st.builds("{} {} {}".format, operand, st.sampled_from(ORDER_OPS), operand)
membership_constraints = st.builds("{} {} {}".format, st.sampled_from(VARIABLES),
                                   st.sampled_from(["in", "notin"]), small_lists)
timeless_goals = st.lists(st.one_of(order_constraints, membership_constraints),
                          min_size=1, max_size=8).map(", ".join)
kernel_goals = st.lists(st.one_of(
    order_constraints,
    membership_constraints,
    order_constraints.map("{} @ T".format),
    st.builds("{} = {} @ T".format, st.sampled_from(VARIABLES), st.sampled_from(VARIABLES)),
), min_size=1, max_size=8).map(", ".join)


def _timeless(pack):
    return replace(pack, rules=tuple(rule for rule in pack.rules
                                     if all(head.time is None for head in rule.heads)))


TIMELESS_PROGRAM = RuleProgram.compose([_timeless(pack) for pack in kernel_packs() + (build_enumeration_pack(),)])


def _outcome(goal: str, budget: int):
    try:
        return solve(goal, PROGRAM, budget=budget).status
    except BudgetExhausted:
        return None


class TestKernelSearch:
    """Termination, budgets and the timed rule variants"""

    @pytest.mark.slow
    @settings(max_examples=1000, deadline=None)
    @given(kernel_goals)
    def test_random_goals_finish_within_default_budget(self, goal):
        result = solve(goal, PROGRAM, budget=DEFAULT_BUDGET)
        assert result.status in (SolveStatus.SATISFIABLE, SolveStatus.UNSATISFIABLE)
        assert result.statistics.firings <= DEFAULT_BUDGET

    @settings(max_examples=60, deadline=None)
    @given(timeless_goals)
    def test_timed_variants_leave_timeless_goals_alone(self, goal):
        full, plain = solve(goal, PROGRAM), solve(goal, TIMELESS_PROGRAM)
        assert full.status is plain.status
        assert full.witness == plain.witness
        assert full.residual == plain.residual
        assert full.statistics.firings == plain.statistics.firings

    @settings(max_examples=60, deadline=None)
    @given(kernel_goals, st.integers(0, 150), st.integers(0, 150))
    def test_larger_budget_never_changes_a_verdict(self, goal, first, second):
        low, high = sorted((first, second))
        at_low, at_high = _outcome(goal, low), _outcome(goal, high)
        if at_low is not None:
            assert at_high is at_low
        if at_high is None:
            assert at_low is None


SET_NAMES = ("A", "B", "C")
ELEMENTS = (1, 2, 3)
SUBSETS = [frozenset(items) for size in range(len(ELEMENTS) + 1)
           for items in itertools.combinations(ELEMENTS, size)]

set_names = st.sampled_from(SET_NAMES)
set_constraints = st.one_of(
    st.tuples(st.sampled_from(["in", "notin"]), st.sampled_from(ELEMENTS), set_names),
    st.tuples(st.sampled_from(["meet", "join"]), set_names, set_names, set_names),
)


def _set_goal(constraints) -> str:
    parts = []
    for kind, *args in constraints:
        if kind in ("in", "notin"):
            parts.append(f"{args[0]} {kind} {args[1]}")
        else:
            parts.append(f"{kind}({', '.join(args)})")
    return ", ".join(parts)


def _set_holds(constraint, sets) -> bool:
    kind, *args = constraint
    if kind == "in":
        return args[0] in sets[args[1]]
    if kind == "notin":
        return args[0] not in sets[args[1]]
    combined, left, right = (sets[name] for name in args)
    return combined == (left & right if kind == "meet" else left | right)


def _some_assignment_satisfies(constraints) -> bool:
    for choice in itertools.product(SUBSETS, repeat=len(SET_NAMES)):
        sets = dict(zip(SET_NAMES, choice))
        if all(_set_holds(c, sets) for c in constraints):
            return True
    return False


class TestSetPack:
    """Set constraints against enumeration of every set assignment"""

    @settings(max_examples=150, deadline=None)
    @given(st.lists(set_constraints, min_size=1, max_size=5))
    def test_undefined_sets_match_brute_force(self, constraints):
        result = solve(_set_goal(constraints), PROGRAM)
        assert result.satisfiable is _some_assignment_satisfies(constraints)

    @settings(max_examples=60, deadline=None)
    @given(st.lists(st.integers(0, 4), unique=True, max_size=4),
           st.lists(st.integers(0, 4), unique=True, max_size=4),
           st.lists(st.integers(0, 4), unique=True, max_size=4))
    def test_defined_lists_match_python_sets(self, first, second, third):
        def text(items):
            return "[" + ", ".join(map(str, items)) + "]"

        a, b, c = set(first), set(second), set(third)
        goal = f"X in {text(first)}, X in {text(second)}, X notin {text(third)}"
        assert solve(goal, PROGRAM).satisfiable is bool((a & b) - c)
        assert solve(f"X in M, meet(M, {text(first)}, {text(second)})", PROGRAM).satisfiable is bool(a & b)
        assert solve(f"X in J, join(J, {text(first)}, {text(second)})", PROGRAM).satisfiable is bool(a | b)


QUANTIFIED = {"forall": parse_spl(PolicyTemplates.staff_only()), "exists": parse_spl(PolicyTemplates.any_staff())}


def _decide_with_open_set(model, event: GroundEvent, members, policy_first: bool) -> TriValue:
    compiled = compile_policy(model)
    staff, result = fresh_var("Staff"), fresh_var("R")
    call = compiled.call(_event_term(event), [], compiled.locals_term([staff]), compiled.globals_term([]), result)
    inserts = [ConstraintPattern("in", (literal_term(member), staff)) for member in members]
    state = SearchState(goal_program(compiled.rules))
    state.add_goal([call, *inserts] if policy_first else [*inserts, call])
    assert state.run() is SolveStatus.SATISFIABLE
    return evaluate_tri(state.store.resolve(result), event)


class TestOpenSetQuantifiers:
    """Quantifiers over a set known only through its members"""

    @settings(max_examples=40, deadline=None)
    @given(st.sampled_from(sorted(QUANTIFIED)), events, st.permutations(USERS), st.integers(0, len(USERS)),
           st.booleans())
    def test_result_ignores_insertion_order(self, key, event, ordering, size, policy_first):
        model = QUANTIFIED[key]
        members = ordering[:size]
        decision = _decide_with_open_set(model, event, members, policy_first)
        assert decision is _decide_with_open_set(model, event, list(reversed(members)), not policy_first)
        assert decision is evaluate_policy(model, event, {"Staff": sorted(members)})
