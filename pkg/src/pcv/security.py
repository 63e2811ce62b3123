"""
Security constraint handler
Binary logic over constraint formulas and the tri-valued logic of policy rules
"""

import logging

from .kernel import expand_all
from .rules import FunctorDecl, HandlerPack, parse_rules

logger = logging.getLogger(__name__)

LOGIC_RULES = r"""
and_commutativity @ and(A, B) \ and(B, A) <=> true.
or_commutativity @ or(A, B) \ or(B, A) <=> true.
xor_commutativity @ xor(A, B) \ xor(B, A) <=> true.
or_true_left @ or(true, B) <=> true.
or_true_right @ or(A, true) <=> true.
or_fail_left @ or(fail, B) <=> nonvar(B) | B.
or_fail_right @ or(A, fail) <=> nonvar(A) | A.
or_definition @ labeling \ or(A, B) <=> A != B, nonvar(A), nonvar(B) | (A ; B).
and_definition @ and(A, B) <=> A != B, nonvar(A), nonvar(B) | A, B.
xor_definition @ xor(A, B) <=> A != B | or(and(A, not(B)), and(not(A), B)).
and_identity @ and(A, A) <=> nonvar(A) | A.
or_identity @ or(A, A) <=> nonvar(A) | A.
xor_irreflexivity @ xor(A, A) <=> fail.
not_true @ not(true) <=> fail.
not_fail @ not(fail) <=> true.
not_not @ not(not(A)) <=> nonvar(A) | A.
de_morgan_and @ not(and(A, B)) <=> or(not(A), not(B)).
de_morgan_or @ not(or(A, B)) <=> not(A), not(B).
not_xor @ not(xor(A, B)) <=> or(and(A, B), and(not(A), not(B))).
"""

REDUCTION_RULES = r"""
reduce_lt @ not(X < Y) <=> Y =< X.
reduce_le @ not(X =< Y) <=> Y < X.
reduce_gt @ not(X > Y) <=> X =< Y.
reduce_ge @ not(X >= Y) <=> X < Y.
reduce_eq @ not(X = Y) <=> X != Y.
reduce_ne @ not(X != Y) <=> X = Y.
reduce_in @ not(X in S) <=> X notin S.
reduce_notin @ not(X notin S) <=> X in S.
reduce_holds @ not(holds(R, X)) <=> not_holds(R, X).
reduce_not_holds @ not(not_holds(R, X)) <=> holds(R, X).
"""

TRI_AND_RULES = r"""
notr_definition @ notr(R, r(D, A)) <=> R = r(D, not(A)).
andr_commutativity @ andr(R3, R1, R2) \ andr(R4, R2, R1) <=> R4 = R3.
andr_identity @ andr(R3, R1, R1) <=> R3 = R1.
andr_neutral_left @ andr(R3, r(fail, X), R2) <=> R3 = R2.
andr_neutral_right @ andr(R3, R1, r(fail, X)) <=> R3 = R1.
andr_absorb_left @ andr(R3, r(true, fail), R2) <=> R3 = r(true, fail).
andr_absorb_right @ andr(R3, R1, r(true, fail)) <=> R3 = r(true, fail).
andr_default_left @ andr(R3, r(true, true), r(D2, A2)) <=> R3 = r(true, or(not(D2), A2)).
andr_default_right @ andr(R3, r(D1, A1), r(true, true)) <=> R3 = r(true, or(not(D1), A1)).
andr_definition @ andr(R3, r(D1, A1), r(D2, A2)) <=>
    R3 = r(or(D1, D2), and(or(not(D1), A1), or(not(D2), A2))).
"""

TRI_OR_RULES = r"""
orr_commutativity @ orr(R3, R1, R2) \ orr(R4, R2, R1) <=> R4 = R3.
orr_identity @ orr(R3, R1, R1) <=> R3 = R1.
orr_neutral_left @ orr(R3, r(fail, X), R2) <=> R3 = R2.
orr_neutral_right @ orr(R3, R1, r(fail, X)) <=> R3 = R1.
orr_absorb_left @ orr(R3, r(true, true), R2) <=> R3 = r(true, true).
orr_absorb_right @ orr(R3, R1, r(true, true)) <=> R3 = r(true, true).
orr_default_left @ orr(R3, r(true, fail), r(D2, A2)) <=> R3 = r(true, and(D2, A2)).
orr_default_right @ orr(R3, r(D1, A1), r(true, fail)) <=> R3 = r(true, and(D1, A1)).
orr_definition @ orr(R3, r(D1, A1), r(D2, A2)) <=>
    R3 = r(or(D1, D2), or(and(D1, A1), and(D2, A2))).
"""

_QUANTIFIER_TEMPLATE = r"""
{q}_empty @ {q}([], TR, R) <=> R = {unit}.
{q}_each @ {q}([X | Tail], TR, R) <=> apply(TR, X, R1), {op}(R, R1, R2), {q}(Tail, TR, R2).
{q}_convert @ {q}(S, TR, R) <=> not(is_list(S)) | {q}(S, TR, R, []).
{q}_empty_timed @ {q}([], TR, R) @ T <=> R = {unit}.
{q}_each_timed @ {q}([X | Tail], TR, R) @ T <=>
    apply(TR, X, R1), {op}(R, R1, R2), {q}(Tail, TR, R2) @ T.
{q}_convert_timed @ {q}(S, TR, R) @ T <=> not(is_list(S)) | {q}(S, TR, R, []) @ T.
{q}_insert_timed @ X in S @ T \ {q}(S, TR, R, U) @ T <=> not_member(X, U) |
    apply(TR, X, R1), {op}(R, R1, R2), {q}(S, TR, R2, [X | U]) @ T.
{q}_insert_into_timed @ X in S \ {q}(S, TR, R, U) @ T <=> not_member(X, U) |
    apply(TR, X, R1), {op}(R, R1, R2), {q}(S, TR, R2, [X | U]) @ T.
{q}_insert @ X in S \ {q}(S, TR, R, U) <=> not_member(X, U) |
    apply(TR, X, R1), {op}(R, R1, R2), {q}(S, TR, R2, [X | U]).
{q}_no_more @ labeling \ {q}(S, TR, R, U) <=> R = {unit}.
{q}_no_more_timed @ labeling \ {q}(S, TR, R, U) @ T <=> R = {unit}.
"""


def build_logic_pack() -> HandlerPack:
    """Conjunction, disjunction, exclusive disjunction and negation over formulas"""
    reductions = parse_rules(REDUCTION_RULES)
    rules = parse_rules(LOGIC_RULES) + reductions + expand_all(reductions)
    declared = {FunctorDecl(f, 2, False) for f in ("and", "or", "xor")}
    declared.add(FunctorDecl("not", 1, True))
    return HandlerPack("logic", rules, frozenset(declared),
                       frozenset({("and", 2), ("or", 2), ("xor", 2), ("not", 1)}))


def build_trilogic_pack() -> HandlerPack:
    """Tri-valued negation, conjunction, disjunction and quantifiers over r(D, A) terms"""
    text = TRI_AND_RULES + TRI_OR_RULES
    text += _QUANTIFIER_TEMPLATE.format(q="forallr", op="andr", unit="r(fail, true)")
    text += _QUANTIFIER_TEMPLATE.format(q="existsr", op="orr", unit="r(fail, fail)")
    rules = parse_rules(text)
    declared = {FunctorDecl("notr", 2, False), FunctorDecl("andr", 3, False), FunctorDecl("orr", 3, False)}
    for quantifier in ("forallr", "existsr"):
        declared |= {FunctorDecl(quantifier, 3, True), FunctorDecl(quantifier, 4, True)}
    logger.debug(f"Tri-logic pack: {len(rules)} rules")
    return HandlerPack("trilogic", rules, frozenset(declared))
