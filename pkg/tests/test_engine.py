"""
Tests for the constraint store, built-ins and the search engine
"""

import pytest

from pcv.builtins import check_guard, test_entailed as entailed
from pcv.core import SearchState, SolveStatus, solve
from pcv.errors import BudgetExhausted, ProgramError
from pcv.rules import ConstraintPattern, FunctorDecl, HandlerPack, RuleProgram, parse_goal, parse_rules
from pcv.store import ConstraintStore, StoreStatus
from pcv.terms import Atom, Compound, IntLiteral, fresh_var, identical, make_list


def _program(text: str, *functors) -> RuleProgram:
    declared = frozenset(FunctorDecl(f, n) for f, n in functors)
    return RuleProgram.compose([HandlerPack("test", parse_rules(text), declared)])


class TestConstraintStore:
    """Trail, marks and bindings"""

    def test_backtrack_restores_canonical_store(self):
        store = ConstraintStore()
        x = fresh_var("X")
        store.add("p", (x,))
        before = store.canonical()
        mark = store.snapshot()
        q = store.add("q", (x,))
        store.kill(q)
        store.unify(x, IntLiteral(1))
        store.record((0, (1,)))
        store.backtrack(mark)
        assert store.canonical() == before
        assert store.bindings == {}
        assert store.history == set()

    def test_backtrack_revives_killed_constraints(self):
        store = ConstraintStore()
        p = store.add("p", ())
        mark = store.snapshot()
        store.kill(p)
        assert store.candidates("p", 0, False) == []
        store.backtrack(mark)
        assert store.candidates("p", 0, False) == [p]

    def test_stale_mark_is_rejected(self):
        store = ConstraintStore()
        outer = store.snapshot()
        inner = store.snapshot()
        store.backtrack(outer)
        with pytest.raises(ProgramError):
            store.backtrack(inner)

    def test_foreign_mark_is_rejected(self):
        mark = ConstraintStore().snapshot()
        with pytest.raises(ProgramError):
            ConstraintStore().backtrack(mark)

    def test_unify_occurs_check(self):
        store = ConstraintStore()
        x = fresh_var("X")
        assert store.unify(x, Compound("f", (x,))) is None
        assert store.bindings == {}

    def test_failed_unification_leaves_no_bindings(self):
        store = ConstraintStore()
        x, y = fresh_var("X"), fresh_var("Y")
        left = Compound("f", (x, IntLiteral(1)))
        right = Compound("f", (y, IntLiteral(2)))
        assert store.unify(left, right) is None
        assert store.bindings == {}

    def test_dedupe_keeps_the_oldest_copy(self):
        store = ConstraintStore()
        x, y = fresh_var("X"), fresh_var("Y")
        first = store.add("in", (x, Atom("s")))
        second = store.add("in", (y, Atom("s")))
        store.unify(y, x)
        assert store.dedupe(second) is False
        assert store.candidates("in", 2, False) == [first]

    def test_symmetric_relations_match_either_way(self):
        store = ConstraintStore()
        x, y, t = fresh_var("X"), fresh_var("Y"), fresh_var("T")
        store.add("=", (x, y), t)
        store.add("<", (x, y))
        assert store.find_identical("=", (y, x), t) is not None
        assert store.find_identical("<", (y, x), None) is None

    def test_status_resets_on_backtrack(self):
        store = ConstraintStore()
        mark = store.snapshot()
        store.fail()
        store.backtrack(mark)
        assert store.status is StoreStatus.ACTIVE


class TestGuards:
    """Guard entailment never binds"""

    def test_basic_tests(self):
        store = ConstraintStore()
        x = fresh_var("X")
        assert entailed(ConstraintPattern("integer", (IntLiteral(3),)), store)
        assert not entailed(ConstraintPattern("ground", (x,)), store)
        assert entailed(ConstraintPattern("!=", (x, IntLiteral(1))), store)
        assert not entailed(ConstraintPattern("=", (x, IntLiteral(1))), store)
        assert entailed(ConstraintPattern("=<", (IntLiteral(1), IntLiteral(2))), store)
        assert not entailed(ConstraintPattern("<", (x, IntLiteral(2))), store)
        assert store.bindings == {}

    def test_membership_and_negation(self):
        store = ConstraintStore()
        items = make_list([IntLiteral(1), IntLiteral(2)])
        assert entailed(ConstraintPattern("member", (IntLiteral(2), items)), store)
        assert entailed(ConstraintPattern("not_member", (IntLiteral(3), items)), store)
        assert entailed(ConstraintPattern("not", (Compound("ground", (fresh_var("X"),)),)), store)
        assert check_guard([ConstraintPattern("is_list", (items,)), ConstraintPattern("true")], store)

    def test_unknown_guard_is_an_error(self):
        with pytest.raises(ProgramError):
            entailed(ConstraintPattern("mystery", (IntLiteral(1),)), ConstraintStore())


class TestSearch:
    """Rule application, labeling and backtracking"""

    def test_empty_goal_is_satisfiable(self, kernel_program):
        result = solve("", kernel_program)
        assert result.satisfiable
        assert result.witness == {}

    def test_simplification_chain(self):
        program = _program("""
        step_a @ a(X) <=> b(X).
        step_b @ b(X) <=> X = 1.
        """, ("a", 1), ("b", 1))
        result = solve("a(Y)", program)
        assert result.witness == {"Y": "1"}
        assert result.statistics.firings == 2

    def test_propagation_fires_once_per_match(self):
        program = _program("""
        copy @ a(X) ==> b(X).
        """, ("a", 1), ("b", 1))
        result = solve("a(1)", program)
        assert result.residual.count("b(1)") == 1
        assert result.statistics.firings == 1

    def test_failure_without_choice_is_unsatisfiable(self):
        program = _program("clash @ a(X), b(X) <=> fail.", ("a", 1), ("b", 1))
        result = solve("a(Z), b(Z)", program)
        assert result.status is SolveStatus.UNSATISFIABLE
        assert result.witness == {}

    def test_disjunction_backtracks(self):
        program = _program("""
        pick @ choose(X) <=> (X = 1 ; X = 2).
        reject @ choose_not(X) \\ ok(X) <=> fail.
        """, ("choose", 1), ("choose_not", 1), ("ok", 1))
        result = solve("choose_not(1), choose(X), ok(X)", program)
        assert result.satisfiable
        assert result.witness["X"] == "2"
        assert result.statistics.choice_points == 1
        assert result.statistics.backtracks == 1

    def test_binding_wakes_waiting_constraints(self):
        program = _program("ground_only @ p(X) <=> integer(X) | fail.", ("p", 1))
        result = solve("p(X), X = 3", program)
        assert result.status is SolveStatus.UNSATISFIABLE

    def test_labeling_rules_fire_after_fixpoint(self):
        program = _program("late @ labeling \\ pending(X) <=> X = done.", ("pending", 1))
        result = solve("pending(X)", program)
        assert result.witness == {"X": "done"}

    def test_budget_exhaustion(self, kernel_program):
        with pytest.raises(BudgetExhausted) as info:
            solve("X =< Y, Y =< X", kernel_program, budget=0)
        assert info.value.firings == 0

    def test_negative_budget_is_rejected(self, kernel_program):
        with pytest.raises(ProgramError):
            SearchState(kernel_program, budget=-1)

    def test_unbound_term_goal_is_an_error(self, kernel_program):
        with pytest.raises(ProgramError):
            solve("G", kernel_program)

    def test_state_snapshot_and_backtrack(self, kernel_program):
        state = SearchState(kernel_program)
        x = fresh_var("X")
        mark = state.snapshot()
        assert state.unify(x, IntLiteral(1))
        state.post(ConstraintPattern("card", (IntLiteral(1), fresh_var("S"))))
        state.backtrack(mark)
        assert state.store.bindings == {}
        assert state.store.canonical() == []

    def test_witness_hides_underscore_names(self, kernel_program):
        items, names = parse_goal("X = f(_Hidden, Y)")
        result = solve(items, kernel_program, variables=names)
        assert set(result.witness) == {"X", "Y"}
        assert result.witness["X"] == "f(_G0, _G1)"

    def test_solving_is_deterministic(self, kernel_program):
        goal = "X in [1, 2, 3], Y in [1, 2, 3], X < Y, Y =< 2"
        first, second = solve(goal, kernel_program), solve(goal, kernel_program)
        assert first.witness == second.witness == {"X": "1", "Y": "2"}
        assert first.residual == second.residual
        assert first.statistics.firings == second.statistics.firings

    def test_timed_equality_is_transitive(self, kernel_program):
        items, names = parse_goal("X = Y @ T, X = Z @ T")
        state = SearchState(kernel_program, budget=5000)
        state.add_goal(items)
        assert state.run() is SolveStatus.SATISFIABLE
        bindings = state.store.bindings
        y, z = names["Y"], names["Z"]

        def relates(c):
            return ((identical(c.args[0], y, bindings) and identical(c.args[1], z, bindings))
                    or (identical(c.args[0], z, bindings) and identical(c.args[1], y, bindings)))

        assert any(relates(c) for c in state.store.candidates("=", 2, True))

    def test_timed_equality_derivation_stops(self, kernel_program):
        result = solve("X = Y @ T, X = Z @ T", kernel_program, budget=5000)
        assert result.satisfiable
        y, z, t = (result.witness[name] for name in "YZT")
        assert {f"({y} = {z}) @ {t}", f"({z} = {y}) @ {t}"} & set(result.residual)
        assert len([c for c in result.residual if " = " in c]) == 3
