"""
Kernel handler packs
Order and equality, sets and membership, restriction and cardinality,
plus the template expansion deriving timed rules from timeless ones
"""

from __future__ import annotations

import logging
from typing import Callable, List, Optional, Sequence, Tuple

from .errors import ProgramError
from .rules import (
    BodyItem,
    ChrRule,
    ConstraintPattern,
    Disjunction,
    FunctorDecl,
    HandlerPack,
    TermGoal,
    is_builtin,
    parse_rules,
)
from .terms import fresh_var

logger = logging.getLogger(__name__)

ORDER_FUNCTORS = ("=<", "<", ">=", ">", "!=")
MEMBERSHIP_FUNCTORS = ("in", "notin")
TIMEABLE_FUNCTORS = frozenset(ORDER_FUNCTORS + MEMBERSHIP_FUNCTORS + ("=", "holds", "not_holds", "not"))

HeadFilter = Callable[[ConstraintPattern], bool]


def timeable(head: ConstraintPattern) -> bool:
    return head.functor in TIMEABLE_FUNCTORS


def timed_expand(rule: ChrRule, eligible: Optional[HeadFilter] = None) -> Tuple[ChrRule, ...]:
    """Derive the 2^k - 1 timed variants of a timeless rule

    k counts the heads accepted by `eligible` (all heads by default). Each
    variant puts one shared time variable on a different non-empty subset of
    those heads and on every user constraint of the body. Timed variants of
    simplification and simpagation rules only remove timed heads; timeless
    removed heads become kept.
    """
    heads = rule.heads
    if not heads:
        raise ProgramError(f"rule {rule.name} has no head to expand")
    if any(head.time is not None for head in heads):
        raise ProgramError(f"rule {rule.name} is already timed")
    positions = [i for i, head in enumerate(heads) if eligible is None or eligible(head)]
    if not positions:
        raise ProgramError(f"rule {rule.name} has no head eligible for timing")
    n_kept = len(rule.kept)
    variants: List[ChrRule] = []
    for mask in range(1, 2 ** len(positions)):
        chosen = {positions[bit] for bit in range(len(positions)) if mask >> bit & 1}
        time_var = fresh_var("T")
        kept: List[ConstraintPattern] = []
        removed: List[ConstraintPattern] = []
        for i, head in enumerate(heads):
            if i in chosen:
                head = ConstraintPattern(head.functor, head.args, time_var)
                (kept if i < n_kept else removed).append(head)
            else:
                kept.append(head)
        suffix = "".join(str(i + 1) for i in sorted(chosen))
        body = tuple(_timed_item(item, time_var) for item in rule.body)
        variants.append(ChrRule(f"{rule.name}_t{suffix}", tuple(kept), tuple(removed), rule.guard, body))
    return tuple(variants)


def _timed_item(item: BodyItem, time_var) -> BodyItem:
    if isinstance(item, Disjunction):
        return Disjunction(tuple(tuple(_timed_item(sub, time_var) for sub in branch)
                                 for branch in item.branches))
    if item.time is not None:
        return item
    if isinstance(item, TermGoal):
        return TermGoal(item.term, time_var)
    if item.functor != "=" and is_builtin(item.functor, item.arity):
        return item
    return ConstraintPattern(item.functor, item.args, time_var)


def expand_all(rules: Sequence[ChrRule], eligible: HeadFilter = timeable) -> Tuple[ChrRule, ...]:
    """Timed variants of every rule that has at least one eligible head"""
    expanded: List[ChrRule] = []
    for rule in rules:
        if any(eligible(head) for head in rule.heads):
            expanded.extend(timed_expand(rule, eligible))
    return tuple(expanded)


# ---------------------------------------------------------------------------
# Order and equality

ORDER_RULES = r"""
le_ge_antisymmetry @ X =< Y, Y >= X <=> X = Y.
ge_normalize @ X >= Y <=> Y =< X.
gt_normalize @ X > Y <=> Y < X.
le_ground @ X =< Y <=> integer(X), integer(Y), X =< Y | true.
le_ground_fail @ X =< Y <=> integer(X), integer(Y), X > Y | fail.
lt_ground @ X < Y <=> integer(X), integer(Y), X < Y | true.
lt_ground_fail @ X < Y <=> integer(X), integer(Y), X >= Y | fail.
ne_ground @ X != Y <=> ground(X), ground(Y), X != Y | true.
le_reflexivity @ X =< X <=> true.
le_antisymmetry @ X =< Y, Y =< X <=> X = Y.
lt_irreflexivity @ X < X <=> fail.
ne_tautology @ X != X <=> fail.
lt_le_subsumption @ X < Y \ X =< Y <=> true.
lt_ne_subsumption @ X < Y \ X != Y <=> true.
lt_ne_subsumption_rev @ X < Y \ Y != X <=> true.
le_ne_strictness @ X =< Y, X != Y <=> X < Y.
le_ne_strictness_rev @ X =< Y, Y != X <=> X < Y.
le_transitivity @ X =< Y, Y =< Z ==> X =< Z.
lt_le_transitivity @ X < Y, Y =< Z ==> X < Z.
le_lt_transitivity @ X =< Y, Y < Z ==> X < Z.
lt_transitivity @ X < Y, Y < Z ==> X < Z.
"""

TIMED_EQUALITY_RULES = r"""
eq_built_in @ X = Y @ T <=> ground(X), ground(Y) | X = Y.
eq_reflexivity @ X = X @ T <=> true.
eq_commutativity @ X = Y @ T \ Y = X @ T <=> true.
eq_le_subsumption_rev @ X = Y @ T \ Y =< X @ T <=> X != Y | true.
eq_le_subsumption @ X = Y @ T \ X =< Y @ T <=> X != Y | true.
"""

# rules whose second head may be timed or timeless
_EQUALITY_CONFLICTS = (
    ("eq_irreflexivity_rev", "Y < X", "fail"),
    ("eq_irreflexivity", "X < Y", "fail"),
    ("eq_tautology_rev", "Y != X", "fail"),
    ("eq_tautology", "X != Y", "fail"),
)

_EQUALITY_TRANSITIVITY = (
    ("eq_with_self_1", "X = Z", "Y = Z"),
    ("eq_with_self_2", "Y = Z", "X = Z"),
    ("eq_with_self_3", "Z = X", "Y = Z"),
    ("eq_with_self_4", "Z = Y", "X = Z"),
    ("eq_le_1", "X =< Z", "Y =< Z"),
    ("eq_le_2", "Y =< Z", "X =< Z"),
    ("eq_le_3", "Z =< X", "Z =< Y"),
    ("eq_le_4", "Z =< Y", "Z =< X"),
)


def _timed_equality_text() -> str:
    lines = [TIMED_EQUALITY_RULES.strip()]
    for name, head, body in _EQUALITY_CONFLICTS:
        lines.append(f"{name} @ X = Y @ T, {head} @ T <=> {body}.")
        lines.append(f"{name}_timeless @ X = Y @ T, {head} <=> {body}.")
    distinct = "X != Y, X != Z, Y != Z"
    for name, head, body in _EQUALITY_TRANSITIVITY:
        lines.append(f"{name} @ X = Y @ T, {head} @ T ==> {distinct} | {body} @ T.")
        if "=<" in head:
            lines.append(f"{name}_timeless @ X = Y @ T, {head} ==> {distinct} | {body} @ T.")
    return "\n".join(lines)


def build_order_equality_pack() -> HandlerPack:
    """Timeless order rules, timed equality and the timed order variants"""
    timeless = parse_rules(ORDER_RULES)
    rules = timeless + parse_rules(_timed_equality_text()) + expand_all(timeless)
    declared = {FunctorDecl(f, 2, True) for f in ORDER_FUNCTORS + ("=",)}
    logger.debug(f"Order/equality pack: {len(rules)} rules")
    return HandlerPack("order_equality", rules, frozenset(declared),
                       frozenset((f, 2) for f in ORDER_FUNCTORS + ("=",)))


# ---------------------------------------------------------------------------
# Sets, membership and restriction

MEET_RULES = r"""
set_tautology @ X in G, X notin G <=> fail.
meet_identity @ meet(C, A, A) <=> C = A.
meet_commutativity @ meet(C, A, B) \ meet(C, B, A) <=> true.
distributivity @ X in C, meet(C, A, B) ==> A != B | X in A, X in B.
rev_dist @ X in A, X in B, meet(C, A, B) ==> A != B | X in C.
rev_not_dist_left @ X notin A, meet(C, A, B) ==> X notin C.
rev_not_dist_right @ X notin B, meet(C, A, B) ==> X notin C.
not_distrib_left @ X notin C, X in A, meet(C, A, B) ==> X notin B.
not_distrib_right @ X notin C, X in B, meet(C, A, B) ==> X notin A.
rev_dist_label_left @ labeling, X in A, meet(C, A, B) ==> A != B |
    (X notin B, X notin C ; X in C, X in B).
rev_dist_label_right @ labeling, X in B, meet(C, A, B) ==> A != B |
    (X notin A, X notin C ; X in A, X in C).
not_distrib_label @ labeling, X notin C, meet(C, A, B) ==> A != B | (X notin A ; X notin B).
"""

JOIN_RULES = r"""
join_identity @ join(C, A, A) <=> C = A.
join_commutativity @ join(C, A, B) \ join(C, B, A) <=> true.
join_member_left @ X in A, join(C, A, B) ==> X in C.
join_member_right @ X in B, join(C, A, B) ==> X in C.
join_not_member @ X notin C, join(C, A, B) ==> X notin A, X notin B.
join_rev_not @ X notin A, X notin B, join(C, A, B) ==> A != B | X notin C.
join_not_left @ X in C, X notin A, join(C, A, B) ==> X in B.
join_not_right @ X in C, X notin B, join(C, A, B) ==> X in A.
join_label @ labeling, X in C, join(C, A, B) ==> A != B | (X in A ; X notin A, X in B).
"""

RESTRICTION_RULES = r"""
restrict_idempotent @ restrict(C, A, R) \ restrict(D, A, R) <=> C = D.
restriction @ X in C, restrict(C, A, R) ==> holds(R, X), X in A.
restrict_not_member @ X notin A, restrict(C, A, R) ==> X notin C.
restrict_not_holds @ not_holds(R, X), restrict(C, A, R) ==> X notin C.
rev_restrict_label @ labeling, X in A, restrict(C, A, R) ==>
    (holds(R, X), X in C ; X notin C, not_holds(R, X)).
holds_tautology @ holds(R, X), not_holds(R, X) <=> fail.
"""

DEFINED_SET_RULES = r"""
in_empty @ X in [] <=> fail.
notin_empty @ X notin [] <=> true.
in_defined @ X in L ==> ground(X), is_list(L) | member(X, L).
notin_defined @ X notin L ==> ground(X), is_list(L) | not_member(X, L).
"""

ENUMERATION_RULES = r"""
member_label @ labeling, X in [H | T] ==> not(ground(X)) | (X = H ; X in T).
"""


def build_set_pack() -> HandlerPack:
    """Membership, meet, union and restriction rules with timed membership variants"""
    timeless = parse_rules(MEET_RULES + JOIN_RULES + RESTRICTION_RULES + DEFINED_SET_RULES)
    _check_no_meet_in_body(timeless)
    rules = timeless + expand_all(timeless)
    declared = {FunctorDecl(f, 2, True) for f in MEMBERSHIP_FUNCTORS + ("holds", "not_holds")}
    declared |= {FunctorDecl(f, 3, False) for f in ("meet", "join", "restrict")}
    in_store = {(f, 2) for f in MEMBERSHIP_FUNCTORS + ("holds", "not_holds", "known_member")}
    in_store |= {(f, 3) for f in ("meet", "join", "restrict")}
    return HandlerPack("sets", rules, frozenset(declared), frozenset(in_store))


def build_enumeration_pack() -> HandlerPack:
    """Labeling-phase enumeration of members of defined lists; loaded last"""
    timeless = parse_rules(ENUMERATION_RULES)
    rules = timeless + expand_all(timeless)
    return HandlerPack("enumeration", rules, frozenset({FunctorDecl("in", 2, True)}))


def _check_no_meet_in_body(rules: Sequence[ChrRule]):
    for rule in rules:
        for item in _flatten(rule.body):
            if isinstance(item, ConstraintPattern) and item.functor == "meet":
                raise ProgramError(f"rule {rule.name} adds a meet constraint")


def _flatten(items: Sequence[BodyItem]):
    for item in items:
        if isinstance(item, Disjunction):
            for branch in item.branches:
                yield from _flatten(branch)
        else:
            yield item


# ---------------------------------------------------------------------------
# Cardinality

CARDINALITY_RULES = r"""
card_identity @ card(N1, L) \ card(N2, L) <=> N1 = N2.
card_meet_left @ card(NC, C), card(NA, A), meet(C, A, B) ==> NC =< NA.
card_meet_right @ card(NC, C), card(NB, B), meet(C, A, B) ==> NC =< NB.
card_join_left @ card(NC, C), card(NA, A), join(C, A, B) ==> NA =< NC.
card_join_right @ card(NC, C), card(NB, B), join(C, A, B) ==> NB =< NC.
card_restrict @ card(NA, A), card(NC, C), restrict(C, A, R) ==> NC =< NA.
card_less @ card(N, A) ==> integer(N), N < 0 | fail.
card_extension @ card(N, S) ==> 0 =< N.
card_defined @ card(N, L) ==> is_list(L) | length(L, N).
card_insert @ X in L, card(N, L) ==> not(is_list(L)) | member(X, L).
card_label @ labeling, card(N, L) ==> not(is_list(L)), integer(N), N >= 0 | cardinal(L, N).
card_lesser_label @ labeling, card(N, L), N < N1 ==>
    not(is_list(L)), integer(N1), N1 > 0 | cardinal(L, N1).
card_lesseq_label @ labeling, card(N, L), N =< N1 ==>
    not(is_list(L)), integer(N1), N1 >= 0 | cardinal(L, N1).
"""


def build_cardinality_pack() -> HandlerPack:
    rules = parse_rules(CARDINALITY_RULES)
    declared = {FunctorDecl("card", 2, False), FunctorDecl("known_member", 2, False)}
    return HandlerPack("cardinality", rules, frozenset(declared), frozenset({("card", 2)}))


def kernel_packs() -> Tuple[HandlerPack, ...]:
    return (build_order_equality_pack(), build_set_pack(), build_cardinality_pack())
