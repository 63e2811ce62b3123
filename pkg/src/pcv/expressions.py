"""
Boolean expressions shared by policies and workflow conditions
Grammar, syntax tree, translation to constraint terms and direct evaluation
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable, Iterator, Optional, Union

import pyparsing as pp

from .errors import EvaluationError, UnsupportedExpression
from .terms import FAIL, TRUE, Compound, IntLiteral, StrLiteral, Term

logger = logging.getLogger(__name__)

pp.ParserElement.enable_packrat()

EVENT_FIELDS = ("actor", "action", "target", "time", "par")
FIELD_ALIASES = {"author": "actor"}
COMPARISONS = {"=": "=", "!=": "!=", "<": "<", "<=": "=<"}
# compiled formulas state upper bounds with the arguments swapped
MIRRORED = {">": "<", ">=": "=<"}

KEYWORDS = {"IN", "AND", "OR", "NOT", "FORALL", "EXIST", "true", "false", "event",
            "policy", "user", "object", "set", "value", "global"}

Value = Union[bool, int, str]


@dataclass(frozen=True)
class Literal:
    value: Value


@dataclass(frozen=True)
class EventField:
    field: str
    index: Optional[int] = None

    def __str__(self) -> str:
        return f"event.par[{self.index}]" if self.field == "par" else f"event.{self.field}"


@dataclass(frozen=True)
class Name:
    name: str


@dataclass(frozen=True)
class Comparison:
    op: str
    left: "Operand"
    right: "Operand"


@dataclass(frozen=True)
class Membership:
    element: "Operand"
    set_name: str


@dataclass(frozen=True)
class Not:
    operand: "Expr"


@dataclass(frozen=True)
class And:
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Or:
    left: "Expr"
    right: "Expr"


Operand = Union[Literal, EventField, Name]
Expr = Union[Literal, Comparison, Membership, Not, And, Or]


# ---------------------------------------------------------------------------
# Grammar


def identifier() -> pp.ParserElement:
    word = pp.Regex(r"[A-Za-z_][A-Za-z0-9_]*")
    return (~pp.MatchFirst([pp.Keyword(k) for k in sorted(KEYWORDS)]) + word).set_name("identifier")


def _fold(cls):
    def action(tokens):
        items = tokens[0][::2]
        result = items[0]
        for item in items[1:]:
            result = cls(result, item)
        return result
    return action


def _event_field(tokens):
    name = FIELD_ALIASES.get(tokens[0], tokens[0])
    if name not in EVENT_FIELDS:
        raise pp.ParseFatalException(f"unknown event property {tokens[0]}")
    if name == "par":
        if len(tokens) < 2:
            raise pp.ParseFatalException("event.par needs an index")
        if tokens[1] < 1:
            raise pp.ParseFatalException("event.par indexes start at 1")
        return EventField("par", tokens[1])
    return EventField(name)


def build_expression_grammar() -> pp.ParserElement:
    """Boolean expressions with & | ! over comparisons and set membership"""
    integer = pp.Regex(r"-?\d+").set_parse_action(lambda t: Literal(int(t[0])))
    string = pp.QuotedString('"', esc_char="\\").set_parse_action(lambda t: Literal(t[0]))
    boolean = (pp.Keyword("true").set_parse_action(lambda: Literal(True))
               | pp.Keyword("false").set_parse_action(lambda: Literal(False)))
    index = pp.Suppress("[") + pp.Regex(r"\d+").set_parse_action(lambda t: int(t[0])) + pp.Suppress("]")
    field = (pp.Suppress(pp.Keyword("event") + ".") + pp.Regex(r"[a-z]+") + pp.Optional(index)
             ).set_parse_action(_event_field)
    name = identifier().set_parse_action(lambda t: Name(t[0]))
    operand = integer | string | field | name
    op = pp.one_of("!= <= >= = < >")
    comparison = (operand + op + operand).set_parse_action(lambda t: Comparison(t[1], t[0], t[2]))
    membership = (operand + pp.Suppress(pp.Keyword("IN")) + identifier()).set_parse_action(
        lambda t: Membership(t[0], t[1]))
    atom = comparison | membership | boolean
    return pp.infix_notation(atom, [
        (pp.Suppress("!"), 1, pp.OpAssoc.RIGHT, lambda t: Not(t[0][0])),
        (pp.Literal("&"), 2, pp.OpAssoc.LEFT, _fold(And)),
        (pp.Literal("|") + ~pp.Literal("|"), 2, pp.OpAssoc.LEFT, _fold(Or)),
    ])


# ---------------------------------------------------------------------------
# Inspection


def operands(expr: Expr) -> Iterator[Operand]:
    if isinstance(expr, Comparison):
        yield expr.left
        yield expr.right
    elif isinstance(expr, Membership):
        yield expr.element
    elif isinstance(expr, Not):
        yield from operands(expr.operand)
    elif isinstance(expr, (And, Or)):
        yield from operands(expr.left)
        yield from operands(expr.right)


def set_names(expr: Expr) -> Iterator[str]:
    if isinstance(expr, Membership):
        yield expr.set_name
    elif isinstance(expr, Not):
        yield from set_names(expr.operand)
    elif isinstance(expr, (And, Or)):
        yield from set_names(expr.left)
        yield from set_names(expr.right)


def referenced_names(expr: Expr) -> Iterator[str]:
    for operand in operands(expr):
        if isinstance(operand, Name):
            yield operand.name


def par_indexes(expr: Expr) -> Iterator[int]:
    for operand in operands(expr):
        if isinstance(operand, EventField) and operand.field == "par":
            yield operand.index


# ---------------------------------------------------------------------------
# Translation to constraint terms

NameResolver = Callable[[str], Term]
FieldResolver = Callable[[EventField], Term]


def literal_term(value: Value) -> Term:
    if isinstance(value, bool):
        return TRUE if value else FAIL
    if isinstance(value, int):
        return IntLiteral(value)
    return StrLiteral(value)


def expression_term(expr: Expr, names: NameResolver, fields: FieldResolver) -> Term:
    """Formula term over and/or/not and kernel constraints"""

    def operand(node: Operand) -> Term:
        if isinstance(node, Literal):
            if isinstance(node.value, bool):
                raise UnsupportedExpression("boolean literal used as a value")
            return literal_term(node.value)
        if isinstance(node, EventField):
            return fields(node)
        return names(node.name)

    def formula(node: Expr) -> Term:
        if isinstance(node, Literal):
            return literal_term(bool(node.value))
        if isinstance(node, Comparison):
            left, right = operand(node.left), operand(node.right)
            if node.op in MIRRORED:
                return Compound(MIRRORED[node.op], (right, left))
            return Compound(COMPARISONS[node.op], (left, right))
        if isinstance(node, Membership):
            return Compound("in", (operand(node.element), names(node.set_name)))
        if isinstance(node, Not):
            return Compound("not", (formula(node.operand),))
        if isinstance(node, And):
            return Compound("and", (formula(node.left), formula(node.right)))
        if isinstance(node, Or):
            return Compound("or", (formula(node.left), formula(node.right)))
        raise UnsupportedExpression(f"unsupported expression {node!r}")

    return formula(expr)


# ---------------------------------------------------------------------------
# Direct evaluation

ValueLookup = Callable[[str], object]
FieldLookup = Callable[[EventField], Value]

ORDERINGS = {
    "<": lambda a, b: a < b,
    "<=": lambda a, b: a <= b,
    ">": lambda a, b: a > b,
    ">=": lambda a, b: a >= b,
}


def compare(op: str, left, right) -> bool:
    if op == "=":
        return left == right
    if op == "!=":
        return left != right
    if not (isinstance(left, int) and isinstance(right, int)):
        raise EvaluationError(f"order comparison {left!r} {op} {right!r} needs integers")
    return ORDERINGS[op](left, right)


def evaluate(expr: Expr, names: ValueLookup, fields: FieldLookup) -> bool:
    """Truth value of an expression; names resolve values and set contents"""

    def operand(node: Operand):
        if isinstance(node, Literal):
            return node.value
        if isinstance(node, EventField):
            return fields(node)
        return names(node.name)

    if isinstance(expr, Literal):
        return bool(expr.value)
    if isinstance(expr, Comparison):
        return compare(expr.op, operand(expr.left), operand(expr.right))
    if isinstance(expr, Membership):
        members = names(expr.set_name)
        if not isinstance(members, (list, tuple, frozenset, set)):
            raise EvaluationError(f"set {expr.set_name} is not defined")
        return operand(expr.element) in members
    if isinstance(expr, Not):
        return not evaluate(expr.operand, names, fields)
    if isinstance(expr, And):
        return evaluate(expr.left, names, fields) and evaluate(expr.right, names, fields)
    if isinstance(expr, Or):
        return evaluate(expr.left, names, fields) or evaluate(expr.right, names, fields)
    raise EvaluationError(f"cannot evaluate {expr!r}")
