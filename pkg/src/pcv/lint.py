"""
Rule program validator
Checks handler packs and composed programs before they reach the engine
"""

import logging
from typing import Any, Dict, Iterator, List, Sequence

from .kernel import build_enumeration_pack
from .rules import LABELING, BodyItem, ChrRule, ConstraintPattern, Disjunction, HandlerPack, RuleProgram

logger = logging.getLogger(__name__)


def _body_patterns(items: Sequence[BodyItem]) -> Iterator[ConstraintPattern]:
    for item in items:
        if isinstance(item, Disjunction):
            for branch in item.branches:
                yield from _body_patterns(branch)
        elif isinstance(item, ConstraintPattern):
            yield item


def adds_meet(rule: ChrRule) -> bool:
    """True when a rule body introduces a new meet constraint"""
    return any(p.functor == "meet" and p.arity == 3 for p in _body_patterns(rule.body))


class ProgramValidator:
    """Validates handler packs and composed rule programs"""

    def __init__(self, enumeration: HandlerPack = None):
        self.enumeration_names = {r.name for r in (enumeration or build_enumeration_pack()).rules}

    def validate_pack(self, pack: HandlerPack) -> Dict[str, Any]:
        """Validate a single handler pack"""
        errors: List[str] = []
        warnings: List[str] = []
        declared = pack.declared_keys()

        for rule in pack.rules:
            if adds_meet(rule):
                errors.append(f"Rule {rule.name} adds a meet constraint in its body")
            for head in rule.heads:
                if head.key not in declared and head.key != (LABELING, 0) and head.key not in pack.already_in_store:
                    warnings.append(f"Rule {rule.name}: head {head.functor}/{head.arity} is not declared by {pack.name}")

        names = [r.name for r in pack.rules]
        duplicates = sorted({n for n in names if names.count(n) > 1})
        if duplicates:
            warnings.append(f"Duplicate rule names found: {duplicates}")

        return {
            "valid": len(errors) == 0,
            "errors": errors,
            "warnings": warnings,
            "name": pack.name,
            "rule_count": len(pack.rules),
        }

    def validate_program(self, program: RuleProgram) -> Dict[str, Any]:
        """Validate a composed program: declared heads and labeling placement"""
        errors: List[str] = []
        warnings: List[str] = []

        for rule in program.rules:
            for head in rule.heads:
                if head.key not in program.declared:
                    errors.append(f"Rule {rule.name}: head {head.functor}/{head.arity} is not declared")

        positions = [i for i, r in enumerate(program.rules) if r.name in self.enumeration_names]
        if not positions:
            warnings.append("Program has no labeling enumeration rules; finite domains will not be searched")
        else:
            first = positions[0]
            trailing = [r.name for r in program.rules[first:] if r.name not in self.enumeration_names]
            if trailing:
                errors.append(f"Enumeration rules must come last; followed by {trailing}")

        labeling_rules = sum(1 for r in program.rules if any(h.key == (LABELING, 0) for h in r.kept))
        return {
            "valid": len(errors) == 0,
            "errors": errors,
            "warnings": warnings,
            "rule_count": len(program.rules),
            "labeling_rules": labeling_rules,
        }

    def validate_all(self, packs: Sequence[HandlerPack], program: RuleProgram) -> Dict[str, Any]:
        """Validate every pack and the program built from them"""
        pack_results = [self.validate_pack(pack) for pack in packs]
        program_result = self.validate_program(program)
        results = pack_results + [program_result]
        return {
            "packs": pack_results,
            "program": program_result,
            "overall_valid": all(r["valid"] for r in results),
            "total_errors": sum(len(r["errors"]) for r in results),
            "total_warnings": sum(len(r["warnings"]) for r in results),
        }

    def print_validation_report(self, packs: Sequence[HandlerPack], program: RuleProgram) -> Dict[str, Any]:
        """Print a validation report for packs and program"""
        result = self.validate_all(packs, program)

        print("🔍 Rule Program Validation Report")
        print("=" * 50)
        for pack in result["packs"]:
            if pack["valid"]:
                print(f"  ✅ {pack['name']} - {pack['rule_count']} rules")
            else:
                print(f"  ❌ {pack['name']} - {len(pack['errors'])} errors")
                for error in pack["errors"]:
                    print(f"    • {error}")
            for warning in pack["warnings"]:
                print(f"    ⚠️  {warning}")

        program_result = result["program"]
        print(f"\n📄 Program ({program_result['rule_count']} rules, {program_result['labeling_rules']} labeling rules):")
        for error in program_result["errors"]:
            print(f"    • {error}")
        for warning in program_result["warnings"]:
            print(f"    ⚠️  {warning}")

        if result["overall_valid"]:
            print("  ✅ All packs and the program are valid!")
        else:
            print(f"  ❌ Issues found - {result['total_errors']} errors, {result['total_warnings']} warnings")
        print("=" * 50)
        if not result["overall_valid"]:
            logger.error(f"Rule program validation failed with {result['total_errors']} errors")
        return result
