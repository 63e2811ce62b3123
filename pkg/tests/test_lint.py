"""
Tests for the rule program validator
"""

from pcv.goals import base_packs, goal_program
from pcv.kernel import build_enumeration_pack, build_set_pack, kernel_packs
from pcv.lint import ProgramValidator, adds_meet
from pcv.rules import FunctorDecl, HandlerPack, RuleProgram, parse_rules


def _pack(name: str, text: str, *functors) -> HandlerPack:
    return HandlerPack(name, parse_rules(text), frozenset(FunctorDecl(f, n) for f, n in functors))


class TestPackValidation:
    """Per-pack checks"""

    def test_base_packs_are_valid(self):
        validator = ProgramValidator()
        for pack in base_packs():
            result = validator.validate_pack(pack)
            assert result["valid"], result["errors"]
            assert result["rule_count"] == len(pack.rules)

    def test_set_pack_adds_no_meet(self):
        assert not any(adds_meet(rule) for rule in build_set_pack().rules)

    def test_meet_in_body(self):
        pack = _pack("grow", "grow @ seed(A, B) ==> meet(C, A, B).", ("seed", 2))
        result = ProgramValidator().validate_pack(pack)
        assert not result["valid"]
        assert "grow" in result["errors"][0]

    def test_meet_inside_disjunction(self):
        (rule,) = parse_rules("split @ seed(A, B) ==> (A = B ; meet(C, A, B)).")
        assert adds_meet(rule)

    def test_undeclared_head_warns(self):
        result = ProgramValidator().validate_pack(_pack("loose", "drop @ foo(X) <=> true."))
        assert result["valid"]
        assert len(result["warnings"]) == 1

    def test_duplicate_names_warn(self):
        pack = _pack("twice", "r @ foo(X) <=> true.\nr @ foo(X) <=> fail.", ("foo", 1))
        result = ProgramValidator().validate_pack(pack)
        assert result["warnings"] == ["Duplicate rule names found: ['r']"]


class TestProgramValidation:
    """Checks on composed programs"""

    def test_goal_program(self):
        result = ProgramValidator().validate_program(goal_program([]))
        assert result["valid"]
        assert result["warnings"] == []
        assert result["labeling_rules"] >= 1

    def test_missing_enumeration_warns(self):
        result = ProgramValidator().validate_program(RuleProgram.compose(kernel_packs()))
        assert result["valid"]
        assert len(result["warnings"]) == 1

    def test_enumeration_must_come_last(self):
        program = RuleProgram.compose((build_enumeration_pack(),) + kernel_packs())
        result = ProgramValidator().validate_program(program)
        assert not result["valid"]
        assert "last" in result["errors"][0]

    def test_undeclared_heads(self):
        program = RuleProgram(parse_rules("drop @ foo(X) <=> true."))
        result = ProgramValidator().validate_program(program)
        assert result["errors"] == ["Rule drop: head foo/1 is not declared"]

    def test_report(self, capsys):
        result = ProgramValidator().print_validation_report(base_packs(), goal_program([]))
        output = capsys.readouterr().out
        assert result["overall_valid"]
        assert "All packs and the program are valid" in output
        assert result["total_errors"] == 0

    def test_report_with_errors(self, capsys):
        bad = _pack("grow", "grow @ seed(A, B) ==> meet(C, A, B).", ("seed", 2))
        result = ProgramValidator().print_validation_report([bad], goal_program([]))
        assert not result["overall_valid"]
        assert "❌ grow" in capsys.readouterr().out
