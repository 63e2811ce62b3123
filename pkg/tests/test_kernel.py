"""
Tests for the kernel handler packs and timed rule expansion
"""

import itertools

import pytest

from pcv.core import SearchState, SolveStatus, solve
from pcv.errors import ProgramError
from pcv.kernel import (
    build_cardinality_pack,
    build_enumeration_pack,
    build_order_equality_pack,
    build_set_pack,
    expand_all,
    kernel_packs,
    timed_expand,
)
from pcv.rules import FunctorDecl, HandlerPack, RuleProgram, parse_goal, parse_rule, parse_rules
from pcv.terms import identical


def _solved(goal: str, program: RuleProgram):
    items, names = parse_goal(goal)
    state = SearchState(program)
    state.add_goal(items)
    assert state.run() is SolveStatus.SATISFIABLE
    return state, names


def _same(state: SearchState, names, left: str, right: str) -> bool:
    return identical(names[left], names[right], state.store.bindings)


class TestTimedExpansion:
    """Template expansion of timeless rules"""

    @pytest.mark.parametrize("heads,expected", [(1, 1), (2, 3), (3, 7)])
    def test_variant_count(self, heads, expected):
        names = ", ".join(f"h{i}(X)" for i in range(heads))
        rule = parse_rule(f"r @ {names} <=> out(X).")
        assert len(timed_expand(rule)) == expected

    def test_variants_cover_every_subset_once(self):
        rule = parse_rule("r @ a(X), b(X), c(X) <=> d(X).")
        variants = timed_expand(rule)
        timed_sets = set()
        for variant in variants:
            timed = frozenset(h.functor for h in variant.heads if h.time is not None)
            timed_sets.add(timed)
            assert all(h.time is not None for h in variant.removed)
            assert all(h.time is None for h in variant.kept)
            assert variant.body[0].time is not None
        expected = {frozenset(s) for n in (1, 2, 3) for s in itertools.combinations("abc", n)}
        assert timed_sets == expected

    def test_variant_names(self):
        rule = parse_rule("r @ a(X), b(X) ==> c(X).")
        assert [v.name for v in timed_expand(rule)] == ["r_t1", "r_t2", "r_t12"]

    def test_variants_share_one_time_variable(self):
        rule = parse_rule("r @ a(X), b(X) ==> c(X).")
        both = timed_expand(rule)[-1]
        assert both.heads[0].time == both.heads[1].time == both.body[0].time

    def test_builtins_in_body_stay_timeless(self):
        rule = parse_rule("r @ a(X) <=> X = 1, member(X, [1]).")
        variant = timed_expand(rule)[0]
        assert variant.body[0].time is not None
        assert variant.body[1].time is None

    def test_eligible_heads_only(self):
        rule = parse_rule("r @ X in S, meet(C, A, B) ==> X in A.")
        variants = timed_expand(rule, lambda head: head.functor == "in")
        assert len(variants) == 1
        assert variants[0].heads[1].time is None

    def test_timed_rule_is_rejected(self):
        with pytest.raises(ProgramError):
            timed_expand(parse_rule("r @ a(X) @ T <=> true."))

    def test_no_eligible_head_is_rejected(self):
        with pytest.raises(ProgramError):
            timed_expand(parse_rule("r @ meet(C, A, B) <=> true."), lambda head: False)

    def test_expand_all_skips_ineligible_rules(self):
        rules = parse_rules("""
        a @ meet(C, A, B) <=> true.
        b @ X in S <=> true.
        """)
        assert [r.name for r in expand_all(rules)] == ["b_t1"]


class TestOrderEquality:
    """Order and equality reasoning"""

    def test_antisymmetry_binds(self, kernel_program):
        state, names = _solved("X =< Y, Y =< X", kernel_program)
        assert _same(state, names, "X", "Y")

    def test_lower_and_upper_bound_pair_binds(self, kernel_program):
        state, names = _solved("A =< B, B >= A", kernel_program)
        assert _same(state, names, "A", "B")

    def test_strict_bound_keeps_variables_apart(self, kernel_program):
        state, names = _solved("X =< Y, X != Y", kernel_program)
        assert not _same(state, names, "X", "Y")
        result = solve("X =< Y, X != Y", kernel_program)
        assert result.witness["X"] != result.witness["Y"]
        assert result.residual == [f"{result.witness['X']} < {result.witness['Y']}", "labeling()"]

    def test_transitivity_derives_bound(self, kernel_program):
        result = solve("A =< B, B =< C", kernel_program)
        assert result.satisfiable
        assert len([c for c in result.residual if " =< " in c]) == 3

    def test_strict_cycle_is_unsatisfiable(self, kernel_program):
        assert solve("A =< B, B =< C, C < A", kernel_program).status is SolveStatus.UNSATISFIABLE

    @pytest.mark.parametrize("goal,satisfiable", [
        ("1 =< 2", True),
        ("2 =< 1", False),
        ("3 < 3", False),
        ("4 >= 2", True),
        ("2 > 4", False),
        ("1 != 2", True),
        ("X != X", False),
    ])
    def test_ground_comparisons(self, kernel_program, goal, satisfiable):
        assert solve(goal, kernel_program).satisfiable is satisfiable

    def test_not_equal_and_le_become_strict(self, kernel_program):
        result = solve("A =< B, A != B", kernel_program)
        assert any(" < " in c for c in result.residual)
        assert not any(" =< " in c or " != " in c for c in result.residual)

    def test_timed_equality_conflicts(self, kernel_program):
        assert solve("X = Y @ T, Y < X @ T", kernel_program).status is SolveStatus.UNSATISFIABLE
        assert solve("X = Y @ T, X != Y", kernel_program).status is SolveStatus.UNSATISFIABLE

    def test_timed_equality_at_other_time_does_not_conflict(self, kernel_program):
        assert solve("X = Y @ 1, Y < X @ 2", kernel_program).satisfiable

    def test_ground_timed_equality_is_built_in(self, kernel_program):
        assert solve("3 = 3 @ T", kernel_program).satisfiable
        assert not solve("3 = 4 @ T", kernel_program).satisfiable

    def test_antisymmetry_as_stand_alone_rule(self):
        """Literal two-head antisymmetry over the le/ge pair"""
        pack = HandlerPack("literal", parse_rules("antisymmetry @ A =< B, B >= A <=> A = B."),
                           frozenset({FunctorDecl("=<", 2), FunctorDecl(">=", 2)}))
        state, names = _solved("A =< B, B >= A", RuleProgram.compose([pack]))
        assert _same(state, names, "A", "B")
        assert state.store.canonical() == ["labeling()"]


class TestSets:
    """Membership, intersection, union and restriction"""

    def test_meet_propagates_to_both_sides(self, kernel_program):
        result = solve("meet(C, A, B), X in C, X notin B", kernel_program)
        assert result.status is SolveStatus.UNSATISFIABLE

    def test_meet_identity(self, kernel_program):
        state, names = _solved("meet(C, A, A)", kernel_program)
        assert _same(state, names, "C", "A")

    def test_set_tautology(self, kernel_program):
        assert not solve("X in S, X notin S", kernel_program).satisfiable

    def test_join_members(self, kernel_program):
        assert not solve("join(C, A, B), X in A, X notin C", kernel_program).satisfiable
        assert solve("join(C, A, B), X in C", kernel_program).satisfiable

    def test_restriction(self, kernel_program):
        result = solve("X in C, restrict(C, A, R)", kernel_program)
        assert result.satisfiable
        assert any(c.startswith("holds(") for c in result.residual)
        assert not solve("X in C, restrict(C, A, R), not_holds(R, X)", kernel_program).satisfiable

    def test_defined_sets(self, kernel_program):
        assert solve('"a" in ["a", "b"]', kernel_program).satisfiable
        assert not solve('"c" in ["a", "b"]', kernel_program).satisfiable
        assert not solve("X in []", kernel_program).satisfiable
        assert solve("X notin []", kernel_program).satisfiable

    def test_labeling_enumerates_defined_lists(self, kernel_program):
        result = solve("X in [1, 2, 3], X != 1", kernel_program)
        assert result.witness == {"X": "2"}

    def test_membership_is_stored_once(self, kernel_program):
        result = solve("X in S, X in S", kernel_program)
        assert len([c for c in result.residual if " in " in c]) == 1

    def test_timed_membership_conflict(self, kernel_program):
        assert not solve("X in S @ T, X notin S @ T", kernel_program).satisfiable


class TestCardinality:
    """Cardinality bounds checked during labeling"""

    def test_negative_cardinality(self, kernel_program):
        assert not solve("card(-1, S)", kernel_program).satisfiable

    def test_cardinality_of_defined_list(self, kernel_program):
        result = solve("card(N, [a, b, c])", kernel_program)
        assert result.witness == {"N": "3"}

    def test_too_many_distinct_members(self, kernel_program):
        goal = "card(1, S), X in S, Y in S, X != Y"
        assert not solve(goal, kernel_program).satisfiable

    def test_members_that_may_coincide(self, kernel_program):
        assert solve("card(1, S), X in S, Y in S", kernel_program).satisfiable


class TestPacks:
    """Pack declarations"""

    def test_kernel_pack_order(self):
        assert [p.name for p in kernel_packs()] == ["order_equality", "sets", "cardinality"]

    def test_set_pack_never_adds_meet(self):
        pack = build_set_pack()
        assert not any(item.functor == "meet" for rule in pack.rules for item in rule.body
                       if hasattr(item, "functor"))

    def test_membership_may_be_timed(self):
        pack = build_set_pack()
        assert pack.timed_allowed("in", 2)
        assert not pack.timed_allowed("meet", 3)

    def test_packs_compose(self):
        packs = kernel_packs() + (build_enumeration_pack(),)
        program = RuleProgram.compose(packs)
        assert len(program.rules) == sum(len(p.rules) for p in packs)
        assert ("card", 2) in program.already_in_store
        assert build_order_equality_pack().already_in_store
        assert build_cardinality_pack().declared_keys() >= {("card", 2)}
