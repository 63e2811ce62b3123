"""
Rule programs for the constraint rewriting engine
Patterns, rules, handler packs, the textual rule reader and the rule dump
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Iterable, Iterator, List, Optional, Sequence, Tuple, Union

import pyparsing as pp

from .errors import ProgramError, SourceError
from .terms import (
    NIL,
    Atom,
    Compound,
    IntLiteral,
    StrLiteral,
    Term,
    Variable,
    format_term,
    fresh_var,
    make_list,
)

logger = logging.getLogger(__name__)

pp.ParserElement.enable_packrat()

LABELING = "labeling"

# Body built-ins, keyed by (functor, arity); call-style apply is variadic
BODY_BUILTINS = {
    ("true", 0), ("fail", 0), ("=", 2), ("member", 2), ("not_member", 2),
    ("length", 2), ("cardinal", 2),
}

GUARD_BUILTINS = {
    "true", "fail", "=", "!=", "<", "=<", ">", ">=", "ground", "integer",
    "is_list", "nonvar", "not", "not_member", "member",
}


@dataclass(frozen=True)
class ConstraintPattern:
    """A constraint with rule variables; also used for goals and guards"""
    functor: str
    args: Tuple[Term, ...] = ()
    time: Optional[Term] = None

    @property
    def arity(self) -> int:
        return len(self.args)

    @property
    def key(self) -> Tuple[str, int]:
        return (self.functor, len(self.args))

    @property
    def is_builtin(self) -> bool:
        return is_builtin(self.functor, len(self.args), self.time is not None)

    def as_term(self) -> Term:
        if not self.args:
            return Atom(self.functor)
        return Compound(self.functor, self.args)

    def __str__(self) -> str:
        text = format_term(self.as_term())
        if self.time is not None:
            text += f" @ {format_term(self.time, True)}"
        return text


@dataclass(frozen=True)
class TermGoal:
    """Goal given as a term, converted to a constraint when executed"""
    term: Term
    time: Optional[Term] = None

    def __str__(self) -> str:
        text = format_term(self.term)
        if self.time is not None:
            text += f" @ {format_term(self.time, True)}"
        return text


@dataclass(frozen=True)
class Disjunction:
    branches: Tuple[Tuple["BodyItem", ...], ...]

    def __str__(self) -> str:
        return "(" + " ; ".join(format_goals(branch) for branch in self.branches) + ")"


BodyItem = Union[ConstraintPattern, TermGoal, Disjunction]


def is_builtin(functor: str, arity: int, timed: bool = False) -> bool:
    if functor == "apply" and arity >= 2:
        return True
    if functor == "=" and timed:
        return False
    return (functor, arity) in BODY_BUILTINS


def pattern_from_term(term: Term, time: Optional[Term] = None) -> ConstraintPattern:
    """Read a (dereferenced) term as a constraint"""
    if isinstance(term, Compound) and term.functor == "@" and len(term.args) == 2:
        return pattern_from_term(term.args[0], term.args[1])
    if isinstance(term, Compound):
        return ConstraintPattern(term.functor, term.args, time)
    if isinstance(term, Atom):
        return ConstraintPattern(term.symbol, (), time)
    raise ProgramError(f"cannot use {format_term(term)} as a constraint")


def format_goals(items: Sequence[BodyItem]) -> str:
    if not items:
        return "true"
    return ", ".join(str(item) for item in items)


def pattern_variables(term: Term) -> Iterator[Variable]:
    if isinstance(term, Variable):
        yield term
    elif isinstance(term, Compound):
        for arg in term.args:
            yield from pattern_variables(arg)


def item_variables(item: BodyItem) -> Iterator[Variable]:
    if isinstance(item, Disjunction):
        for branch in item.branches:
            for sub in branch:
                yield from item_variables(sub)
    elif isinstance(item, TermGoal):
        yield from pattern_variables(item.term)
        if item.time is not None:
            yield from pattern_variables(item.time)
    else:
        for arg in item.args:
            yield from pattern_variables(arg)
        if item.time is not None:
            yield from pattern_variables(item.time)


@dataclass(frozen=True)
class ChrRule:
    """Guarded rewrite rule; kept heads survive, removed heads are consumed"""
    name: str
    kept: Tuple[ConstraintPattern, ...] = ()
    removed: Tuple[ConstraintPattern, ...] = ()
    guard: Tuple[ConstraintPattern, ...] = ()
    body: Tuple[BodyItem, ...] = ()

    def __post_init__(self):
        if not self.kept and not self.removed:
            raise ProgramError(f"rule {self.name} has no head")
        for head in self.removed:
            if head.functor == LABELING and head.arity == 0:
                raise ProgramError(f"rule {self.name} removes the labeling constraint")
        head_ids = {v.id for head in self.heads for v in item_variables(head)}
        for test in self.guard:
            for v in item_variables(test):
                if v.id not in head_ids:
                    raise ProgramError(f"rule {self.name}: guard variable {v.name} does not occur in a head")

    @property
    def heads(self) -> Tuple[ConstraintPattern, ...]:
        return self.kept + self.removed

    @property
    def kind(self) -> str:
        if not self.kept:
            return "simplification"
        if not self.removed:
            return "propagation"
        return "simpagation"

    @property
    def is_propagation(self) -> bool:
        return not self.removed

    def __str__(self) -> str:
        return format_rule(self)


def format_rule(rule: ChrRule) -> str:
    """Render a rule as `name @ kept \\ removed <=> guard | body.`"""
    kept = ", ".join(str(h) for h in rule.kept)
    removed = ", ".join(str(h) for h in rule.removed)
    if rule.kind == "propagation":
        heads = f"{kept} ==>"
    elif rule.kind == "simplification":
        heads = f"{removed} <=>"
    else:
        heads = f"{kept} \\ {removed} <=>"
    guard = ", ".join(str(g) for g in rule.guard)
    guard_text = f" {guard} |" if guard else ""
    return f"{rule.name} @ {heads}{guard_text} {format_goals(rule.body)}."


@dataclass(frozen=True)
class FunctorDecl:
    functor: str
    arity: int
    timed_allowed: bool = False


@dataclass(frozen=True)
class HandlerPack:
    """A named group of rules with the functors it handles"""
    name: str
    rules: Tuple[ChrRule, ...]
    declared: FrozenSet[FunctorDecl] = frozenset()
    already_in_store: FrozenSet[Tuple[str, int]] = frozenset()

    def declared_keys(self) -> FrozenSet[Tuple[str, int]]:
        return frozenset((d.functor, d.arity) for d in self.declared)

    def timed_allowed(self, functor: str, arity: int) -> bool:
        return any(d.functor == functor and d.arity == arity and d.timed_allowed for d in self.declared)

    def dump(self) -> str:
        return dump_rules(self.rules)


def dump_rules(rules: Iterable[ChrRule]) -> str:
    return "\n".join(format_rule(rule) for rule in rules) + "\n"


@dataclass(frozen=True)
class Occurrence:
    rule_index: int
    head_index: int


@dataclass(frozen=True)
class RuleProgram:
    """Immutable, ordered rule list with a head-occurrence index"""
    rules: Tuple[ChrRule, ...]
    already_in_store: FrozenSet[Tuple[str, int]] = frozenset()
    declared: FrozenSet[Tuple[str, int]] = frozenset()
    occurrences: Dict[Tuple[str, int, bool], Tuple[Occurrence, ...]] = field(
        default_factory=dict, compare=False, hash=False)

    def __post_init__(self):
        index: Dict[Tuple[str, int, bool], List[Occurrence]] = {}
        for rule_index, rule in enumerate(self.rules):
            for head_index, head in enumerate(rule.heads):
                key = (head.functor, head.arity, head.time is not None)
                index.setdefault(key, []).append(Occurrence(rule_index, head_index))
        object.__setattr__(self, "occurrences", {k: tuple(v) for k, v in index.items()})

    @classmethod
    def compose(cls, packs: Sequence[HandlerPack], rules: Sequence[ChrRule] = (),
                declared: Iterable[Tuple[str, int]] = ()) -> "RuleProgram":
        """Concatenate packs and extra rules; every head functor must be declared"""
        all_rules: List[ChrRule] = []
        known = {(LABELING, 0)} | set(declared)
        in_store = set()
        for pack in packs:
            all_rules.extend(pack.rules)
            known |= pack.declared_keys()
            in_store |= pack.already_in_store
        for rule in rules:
            all_rules.append(rule)
            for head in rule.removed or rule.kept:
                known.add(head.key)
        for rule in all_rules:
            for head in rule.heads:
                if head.key not in known:
                    raise ProgramError(
                        f"rule {rule.name}: head functor {head.functor}/{head.arity} is not declared")
        logger.debug(f"Composed program with {len(all_rules)} rules from {len(packs)} packs")
        return cls(tuple(all_rules), frozenset(in_store), frozenset(known))

    def lookup(self, functor: str, arity: int, timed: bool) -> Tuple[Occurrence, ...]:
        return self.occurrences.get((functor, arity, timed), ())

    def dump(self) -> str:
        return dump_rules(self.rules)


# ---------------------------------------------------------------------------
# Textual rule reader


def _comma_list(expr: pp.ParserElement) -> pp.ParserElement:
    return expr + pp.ZeroOrMore(pp.Suppress(",") + expr)


def _build_grammar():
    LPAR, RPAR, LBRACK, RBRACK, BAR = map(pp.Suppress, "()[]|")
    var = pp.Regex(r"[A-Z_][A-Za-z0-9_]*").set_parse_action(lambda t: ("var", t[0]))
    name = pp.Regex(r"[a-z][A-Za-z0-9_]*") | pp.QuotedString("'", esc_char="\\")
    integer = pp.Regex(r"-?\d+").set_parse_action(lambda t: ("int", int(t[0])))
    string = pp.QuotedString('"', esc_char="\\").set_parse_action(lambda t: ("str", t[0]))

    expr = pp.Forward()
    args = pp.Group(_comma_list(expr))
    compound = (name + LPAR + args + RPAR).set_parse_action(lambda t: ("cmp", t[0], tuple(t[1])))
    tail = pp.Optional(BAR + expr, default=("atom", "[]"))
    list_items = pp.Optional(pp.Group(_comma_list(expr)) + tail)
    list_term = (LBRACK + list_items + RBRACK).set_parse_action(
        lambda t: ("list", tuple(t[0]), t[1]) if len(t) else ("atom", "[]"))
    atom_term = name.copy().set_parse_action(lambda t: ("atom", t[0]))
    primary = (compound | list_term | integer | string | var | atom_term
               | (LPAR + expr + RPAR))
    infix = pp.one_of("!= =< >= = < >") | pp.Keyword("notin") | pp.Keyword("in")
    expr <<= (primary + pp.Optional(infix + primary)).set_parse_action(
        lambda t: ("op", t[1], t[0], t[2]) if len(t) == 3 else t[0])
    timed = (expr + pp.Optional(pp.Suppress("@") + primary)).set_parse_action(
        lambda t: ("at", t[0], t[1]) if len(t) == 2 else t[0])

    disj = pp.Forward()
    goal_item = (LPAR + disj + RPAR) | timed
    conj = pp.Group(_comma_list(goal_item)).set_parse_action(lambda t: ("conj", tuple(t[0])))
    disj <<= (conj + pp.ZeroOrMore(pp.Suppress(";") + conj)).set_parse_action(
        lambda t: ("disj", tuple(t)))

    heads = pp.Group(_comma_list(timed))
    rule_name = name + pp.Suppress("@")
    head_part = heads + pp.Optional(pp.Literal("\\") + heads) + (pp.Literal("<=>") | pp.Literal("==>"))
    guard = pp.Group(_comma_list(timed)) + pp.Suppress(pp.Literal("|") + ~pp.Literal("|"))
    rule = pp.Group(rule_name + pp.Group(head_part) + pp.Group(pp.Optional(guard)) + disj
                    + pp.Suppress("."))
    program = pp.ZeroOrMore(rule)
    comment = pp.Regex(r"%.*")
    for element in (program, disj, timed):
        element.ignore(comment)
    return program, disj, timed


_PROGRAM, _GOALS, _TERM = _build_grammar()


class _Scope:
    """Maps variable names to variables within one rule or goal"""

    def __init__(self, variables: Optional[Dict[str, Variable]] = None):
        self.variables: Dict[str, Variable] = dict(variables or {})

    def var(self, name: str) -> Variable:
        if name == "_":
            return fresh_var("_")
        if name not in self.variables:
            self.variables[name] = fresh_var(name)
        return self.variables[name]

    def term(self, raw) -> Term:
        tag = raw[0]
        if tag == "var":
            return self.var(raw[1])
        if tag == "atom":
            return NIL if raw[1] == "[]" else Atom(raw[1])
        if tag == "int":
            return IntLiteral(raw[1])
        if tag == "str":
            return StrLiteral(raw[1])
        if tag == "cmp":
            return Compound(raw[1], tuple(self.term(arg) for arg in raw[2]))
        if tag == "list":
            return make_list([self.term(item) for item in raw[1]], self.term(raw[2]))
        if tag == "op":
            return Compound(raw[1], (self.term(raw[2]), self.term(raw[3])))
        if tag == "at":
            return Compound("@", (self.term(raw[1]), self.term(raw[2])))
        if tag in ("disj", "conj"):
            raise ProgramError("a goal list cannot be used as a term")
        raise ProgramError(f"unknown syntax node {tag}")

    def pattern(self, raw) -> ConstraintPattern:
        if raw[0] == "var":
            raise ProgramError("a head or guard cannot be a bare variable")
        return pattern_from_term(self.term(raw))

    def item(self, raw) -> Tuple[BodyItem, ...]:
        if raw[0] == "disj":
            branches = tuple(self.conj(branch) for branch in raw[1])
            if len(branches) == 1:
                return branches[0]
            return (Disjunction(branches),)
        if raw[0] == "var":
            return (TermGoal(self.var(raw[1])),)
        if raw[0] == "at" and raw[1][0] == "var":
            return (TermGoal(self.var(raw[1][1]), self.term(raw[2])),)
        return (self.pattern(raw),)

    def conj(self, raw) -> Tuple[BodyItem, ...]:
        items: List[BodyItem] = []
        for sub in raw[1]:
            items.extend(self.item(sub))
        return tuple(items)

    def goals(self, raw) -> Tuple[BodyItem, ...]:
        return self.item(raw)


def _raise_parse_error(err: pp.ParseBaseException, what: str):
    raise SourceError(f"invalid {what}: {err.msg}", line=err.lineno, column=err.col) from err


def parse_rules(text: str) -> Tuple[ChrRule, ...]:
    """Read rules written in the dump notation"""
    try:
        parsed = _PROGRAM.parse_string(text, parse_all=True)
    except pp.ParseBaseException as err:
        _raise_parse_error(err, "rule text")
    rules = []
    for raw in parsed:
        name, head_part, guard_part, body = raw[0], raw[1], raw[2], raw[3]
        scope = _Scope()
        first = tuple(scope.pattern(h) for h in head_part[0])
        arrow = head_part[-1]
        if len(head_part) == 4:
            if arrow != "<=>":
                raise SourceError(f"rule {name}: simpagation needs <=>")
            kept, removed = first, tuple(scope.pattern(h) for h in head_part[2])
        elif arrow == "<=>":
            kept, removed = (), first
        else:
            kept, removed = first, ()
        guard = tuple(scope.pattern(g) for g in guard_part[0]) if len(guard_part) else ()
        rules.append(ChrRule(name, kept, removed, guard, scope.goals(body)))
    return tuple(rules)


def parse_rule(text: str) -> ChrRule:
    rules = parse_rules(text)
    if len(rules) != 1:
        raise SourceError(f"expected one rule, found {len(rules)}")
    return rules[0]


def parse_goal(text: str, variables: Optional[Dict[str, Variable]] = None
               ) -> Tuple[Tuple[BodyItem, ...], Dict[str, Variable]]:
    """Read a goal; returns the items and the named variables they use"""
    scope = _Scope(variables)
    text = text.strip()
    if not text:
        return (), scope.variables
    try:
        parsed = _GOALS.parse_string(text, parse_all=True)
    except pp.ParseBaseException as err:
        _raise_parse_error(err, "goal")
    return scope.goals(parsed[0]), scope.variables


def parse_term(text: str, variables: Optional[Dict[str, Variable]] = None) -> Term:
    scope = _Scope(variables)
    try:
        parsed = _TERM.parse_string(text, parse_all=True)
    except pp.ParseBaseException as err:
        _raise_parse_error(err, "term")
    return scope.term(parsed[0])
