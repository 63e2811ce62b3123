"""
SPL policy frontend
Policy model, parser, compiler to constraint rules and direct tri-valued evaluation
"""

from __future__ import annotations

import dataclasses
import logging
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Callable, Dict, Iterator, List, Mapping, Optional, Sequence, Tuple, Union

import pyparsing as pp

from .errors import (
    CyclicRuleReference,
    DuplicateRuleName,
    EvaluationError,
    MissingQueryRule,
    SplSyntaxError,
    UnboundSet,
    UnknownRuleTarget,
    UnsupportedExpression,
)
from .expressions import (
    EventField,
    Expr,
    Literal,
    build_expression_grammar,
    compare,
    evaluate,
    expression_term,
    identifier,
    par_indexes,
    referenced_names,
    set_names,
)
from .rules import BodyItem, ChrRule, ConstraintPattern, dump_rules
from .terms import NIL, Atom, Compound, IntLiteral, StrLiteral, Term, Variable, fresh_var, is_cons, make_list

logger = logging.getLogger(__name__)


# ---------------------------------------------------------------------------
# Policy model


@dataclass(frozen=True)
class Parameter:
    name: str
    sort: str  # user-set, object-set or value

    @property
    def is_set(self) -> bool:
        return self.sort != "value"


@dataclass(frozen=True)
class SetDecl:
    name: str
    sort: str
    is_global: bool = False


@dataclass(frozen=True)
class Simple:
    """Applicability and acceptability expressions of a simple rule"""
    domain: Expr
    accept: Expr


@dataclass(frozen=True)
class RuleAnd:
    left: "RuleExpr"
    right: "RuleExpr"


@dataclass(frozen=True)
class RuleOr:
    left: "RuleExpr"
    right: "RuleExpr"


@dataclass(frozen=True)
class RuleNot:
    body: "RuleExpr"


@dataclass(frozen=True)
class ForAll:
    var: str
    set_name: str
    body: "RuleExpr"


@dataclass(frozen=True)
class Exists:
    var: str
    set_name: str
    body: "RuleExpr"


@dataclass(frozen=True)
class RuleRef:
    name: str


RuleExpr = Union[Simple, RuleAnd, RuleOr, RuleNot, ForAll, Exists, RuleRef]

# dummy rule with an empty applicability domain
NEVER_APPLIES = Simple(Literal(False), Literal(True))


@dataclass(frozen=True)
class SplPolicyModel:
    name: str
    parameters: Tuple[Parameter, ...]
    sets: Tuple[SetDecl, ...]
    rules: Mapping[str, RuleExpr]
    query: str
    lines: Mapping[str, int] = field(default_factory=dict, compare=False)

    @property
    def set_parameters(self) -> Tuple[str, ...]:
        return tuple(p.name for p in self.parameters if p.is_set)

    @property
    def value_parameters(self) -> Tuple[str, ...]:
        return tuple(p.name for p in self.parameters if not p.is_set)

    @property
    def local_sets(self) -> Tuple[str, ...]:
        return tuple(s.name for s in self.sets if not s.is_global)

    @property
    def global_sets(self) -> Tuple[str, ...]:
        return tuple(s.name for s in self.sets if s.is_global)

    @property
    def set_names(self) -> Tuple[str, ...]:
        return self.set_parameters + tuple(s.name for s in self.sets)

    def query_rule(self) -> RuleExpr:
        return self.rules[self.query]

    def max_par(self) -> int:
        indexes = [i for expr in self.rules.values() for simple in _simples(expr)
                   for part in (simple.domain, simple.accept) for i in par_indexes(part)]
        return max(indexes, default=0)


def _children(expr: RuleExpr) -> Tuple[Tuple[str, RuleExpr], ...]:
    if isinstance(expr, (RuleAnd, RuleOr)):
        return (("left", expr.left), ("right", expr.right))
    if isinstance(expr, (RuleNot, ForAll, Exists)):
        return (("body", expr.body),)
    return ()


def _walk(expr: RuleExpr) -> Iterator[RuleExpr]:
    yield expr
    for _, child in _children(expr):
        yield from _walk(child)


def _simples(expr: RuleExpr) -> Iterator[Simple]:
    for node in _walk(expr):
        if isinstance(node, Simple):
            yield node


# ---------------------------------------------------------------------------
# Parser


@dataclass(frozen=True)
class _RawRule:
    is_query: bool
    name: str
    expr: RuleExpr
    line: int
    column: int


def _fold(cls):
    def action(tokens):
        items = list(tokens[0])
        result = items[0]
        for item in items[1:]:
            result = cls(result, item)
        return result
    return action


def _quantifier(tokens):
    cls = ForAll if tokens[0] == "FORALL" else Exists
    return cls(tokens[1], tokens[2], tokens[3])


def build_spl_grammar() -> pp.ParserElement:
    """Policy header, set declarations and named rules"""
    bexpr = build_expression_grammar()
    rexpr = pp.Forward()

    simple = (bexpr + pp.Suppress("::") + bexpr).set_parse_action(lambda t: Simple(t[0], t[1]))
    quantifier = ((pp.Keyword("FORALL") | pp.Keyword("EXIST")) + identifier()
                  + pp.Suppress(pp.Keyword("IN")) + identifier()
                  + pp.Suppress("{") + rexpr + pp.Suppress("}")).set_parse_action(_quantifier)
    reference = identifier().set_parse_action(lambda t: RuleRef(t[0]))
    rexpr <<= pp.infix_notation(quantifier | simple | reference, [
        (pp.Suppress(pp.Keyword("NOT")), 1, pp.OpAssoc.RIGHT, lambda t: RuleNot(t[0][0])),
        (pp.Suppress(pp.Keyword("AND")), 2, pp.OpAssoc.LEFT, _fold(RuleAnd)),
        (pp.Suppress(pp.Keyword("OR")), 2, pp.OpAssoc.LEFT, _fold(RuleOr)),
    ])

    set_sort = pp.Keyword("user") | pp.Keyword("object")
    param = ((set_sort + pp.Suppress(pp.Keyword("set")) + identifier()).set_parse_action(
                 lambda t: Parameter(t[1], f"{t[0]}-set"))
             | (pp.Suppress(pp.Keyword("value")) + identifier()).set_parse_action(
                 lambda t: Parameter(t[0], "value")))
    params = pp.Group(pp.Optional(param + pp.ZeroOrMore(pp.Suppress(",") + param)))
    decl = (pp.Optional(pp.Keyword("global"), default="") + set_sort + pp.Suppress(pp.Keyword("set"))
            + identifier() + pp.Suppress(";")).set_parse_action(
                lambda t: SetDecl(t[2], f"{t[1]}-set", t[0] == "global"))
    rule = (pp.Optional(pp.Literal("?"), default="") + identifier()
            + pp.Suppress(pp.Literal(":") + ~pp.Literal(":")) + rexpr + pp.Optional(pp.Suppress(";")))
    rule.set_parse_action(lambda s, loc, t: _RawRule(t[0] == "?", t[1], t[2], pp.lineno(loc, s), pp.col(loc, s)))

    policy = (pp.Suppress(pp.Keyword("policy")) + identifier() + pp.Suppress("(") + params + pp.Suppress(")")
              + pp.Suppress("{") + pp.Group(pp.ZeroOrMore(decl)) + pp.Group(pp.ZeroOrMore(rule))
              + pp.Suppress("}"))
    policy.ignore(pp.dbl_slash_comment)
    return policy


_SPL = build_spl_grammar()


def parse_spl(text: str, path: Optional[str] = None) -> SplPolicyModel:
    """Parse and validate one policy"""
    try:
        parsed = _SPL.parse_string(text, parse_all=True)
    except pp.ParseBaseException as err:
        raise SplSyntaxError(f"invalid policy: {err.msg}", path, err.lineno, err.col) from err
    name = parsed[0]
    parameters = tuple(parsed[1])
    sets = tuple(parsed[2])
    raw_rules: List[_RawRule] = list(parsed[3])

    if not raw_rules:
        raise MissingQueryRule(f"policy {name} has no rules", path)
    rules: Dict[str, RuleExpr] = {}
    lines: Dict[str, int] = {}
    queries = []
    for raw in raw_rules:
        if raw.name in rules:
            raise DuplicateRuleName(f"rule {raw.name} defined twice", path, raw.line, raw.column)
        rules[raw.name] = raw.expr
        lines[raw.name] = raw.line
        if raw.is_query:
            queries.append(raw)
    if not queries:
        raise MissingQueryRule(f"policy {name} marks no query rule with ?", path)
    if len(queries) > 1:
        raise SplSyntaxError(f"policy {name} has more than one query rule", path, queries[1].line, queries[1].column)

    model = SplPolicyModel(name, parameters, sets, rules, queries[0].name, lines)
    _check_declarations(model, path)
    for rule_name, expr in rules.items():
        _check_names(model, rule_name, expr, frozenset(), path)
    _check_acyclic(model, path)
    logger.debug(f"Parsed policy {name}: {len(rules)} rules, query {model.query}")
    return model


def load_policy(path: Union[str, Path]) -> SplPolicyModel:
    path = Path(path)
    return parse_spl(path.read_text(encoding="utf-8"), str(path))


def _check_declarations(model: SplPolicyModel, path: Optional[str]):
    seen = set()
    for name in model.set_names + model.value_parameters:
        if name in seen:
            raise SplSyntaxError(f"policy {model.name} declares {name} twice", path)
        seen.add(name)


def _check_names(model: SplPolicyModel, rule_name: str, expr: RuleExpr, scope: frozenset, path: Optional[str]):
    line = model.lines.get(rule_name)
    if isinstance(expr, Simple):
        for part in (expr.domain, expr.accept):
            for set_name in set_names(part):
                if set_name not in model.set_names:
                    raise UnboundSet(f"rule {rule_name} refers to undeclared set {set_name}", path, line)
            for name in referenced_names(part):
                if name not in scope and name not in model.value_parameters:
                    raise UnboundSet(f"rule {rule_name} refers to unknown name {name}", path, line)
    elif isinstance(expr, RuleRef):
        if expr.name not in model.rules:
            raise SplSyntaxError(f"rule {rule_name} refers to unknown rule {expr.name}", path, line)
    elif isinstance(expr, (ForAll, Exists)):
        if expr.set_name not in model.set_names:
            raise UnboundSet(f"rule {rule_name} quantifies over undeclared set {expr.set_name}", path, line)
        _check_names(model, rule_name, expr.body, scope | {expr.var}, path)
    else:
        for _, child in _children(expr):
            _check_names(model, rule_name, child, scope, path)


def _check_acyclic(model: SplPolicyModel, path: Optional[str]):
    done = set()

    def visit(name: str, stack: Tuple[str, ...]):
        if name in stack:
            cycle = " -> ".join(stack[stack.index(name):] + (name,))
            raise CyclicRuleReference(f"cyclic rule references: {cycle}", path, model.lines.get(name))
        if name in done:
            return
        for node in _walk(model.rules[name]):
            if isinstance(node, RuleRef):
                visit(node.name, stack + (name,))
        done.add(name)

    for name in model.rules:
        visit(name, ())


# ---------------------------------------------------------------------------
# Redundancy targets


def resolve_target(model: SplPolicyModel, target: str) -> Tuple[str, Tuple[str, ...]]:
    """Map `Name`, `query` or a dotted path such as `query.left` to (rule, steps)"""
    head, *steps = target.split(".")
    rule = model.query if head == "query" else head
    if rule not in model.rules:
        raise UnknownRuleTarget(f"policy {model.name} has no rule {head}")
    node = model.rules[rule]
    for step in steps:
        children = dict(_children(node))
        if step not in children:
            raise UnknownRuleTarget(f"policy {model.name}: {target} has no {step} part")
        node = children[step]
    return rule, tuple(steps)


def replace_rule(model: SplPolicyModel, target: str, replacement: RuleExpr = NEVER_APPLIES) -> SplPolicyModel:
    rule, steps = resolve_target(model, target)
    rules = dict(model.rules)
    rules[rule] = _replace_at(rules[rule], steps, replacement)
    return dataclasses.replace(model, rules=rules)


def _replace_at(expr: RuleExpr, steps: Tuple[str, ...], replacement: RuleExpr) -> RuleExpr:
    if not steps:
        return replacement
    step, rest = steps[0], steps[1:]
    current = dict(_children(expr))[step]
    return dataclasses.replace(expr, **{step: _replace_at(current, rest, replacement)})


def rule_targets(model: SplPolicyModel) -> List[str]:
    """Every rule name and query sub-expression a redundancy check can address"""
    targets = [name for name in model.rules if name != model.query]

    def paths(expr: RuleExpr, prefix: str):
        for step, child in _children(expr):
            targets.append(f"{prefix}.{step}")
            paths(child, f"{prefix}.{step}")

    paths(model.query_rule(), "query")
    return targets


# ---------------------------------------------------------------------------
# Compiler


def _var_name(name: str) -> str:
    return name[:1].upper() + name[1:]


def _eq(left: Term, right: Term) -> ConstraintPattern:
    return ConstraintPattern("=", (left, right))


def wrapper(kind: str, functor: str, items: Sequence[Term]) -> Term:
    inner = Compound(functor, tuple(items)) if items else Atom(functor)
    return Compound(kind, (inner,))


@dataclass(frozen=True)
class CompiledPolicy:
    """Rules of one policy and the shape of its head constraint"""
    name: str
    functor: str
    parameters: Tuple[Parameter, ...]
    local_sets: Tuple[str, ...]
    global_sets: Tuple[str, ...]
    rules: Tuple[ChrRule, ...]
    result: Term

    @property
    def arity(self) -> int:
        return len(self.parameters) + 4

    def locals_term(self, sets: Sequence[Term]) -> Term:
        return wrapper("locals", f"{self.functor}_vars", sets)

    def globals_term(self, sets: Sequence[Term]) -> Term:
        return wrapper("globals", f"{self.functor}_globals", sets)

    def call(self, event: Term, arguments: Sequence[Term], locals_: Term, globals_: Term,
             result: Term) -> ConstraintPattern:
        return ConstraintPattern(self.functor, (event, *arguments, locals_, globals_, result))

    def dump(self) -> str:
        return dump_rules(self.rules)


class _Frame:
    """Variables of one emitted rule"""

    def __init__(self, model: SplPolicyModel, max_par: int):
        self.event = fresh_var("Event")
        self.fields = {name: fresh_var(_var_name(name)) for name in ("actor", "action", "target", "time")}
        self.pars = [fresh_var(f"P{i}") for i in range(1, max_par + 1)]
        self.pars_var = fresh_var("Pars")
        self.locals = fresh_var("Locals")
        self.globals = fresh_var("Globals")
        self.names: Dict[str, Variable] = {p.name: fresh_var(_var_name(p.name)) for p in model.parameters}
        self.names.update({s.name: fresh_var(_var_name(s.name)) for s in model.sets})
        self.results = 0

    def result(self) -> Variable:
        self.results += 1
        return fresh_var(f"R{self.results}")

    def field(self, node: EventField) -> Term:
        if node.field == "par":
            return self.pars[node.index - 1]
        return self.fields[node.field]

    def head_args(self, model: SplPolicyModel) -> Tuple[Term, ...]:
        params = tuple(self.names[p.name] for p in model.parameters)
        return (self.event, *params, self.locals, self.globals)

    def preamble(self, functor: str, model: SplPolicyModel) -> List[BodyItem]:
        f = self.fields
        event = Compound("event", (f["actor"], f["action"], f["target"], self.pars_var, f["time"]))
        items: List[BodyItem] = [
            _eq(self.event, event),
            _eq(self.locals, wrapper("locals", f"{functor}_vars", [self.names[s] for s in model.local_sets])),
        ]
        if model.global_sets:
            items.append(_eq(self.globals, wrapper("globals", f"{functor}_globals",
                                                   [self.names[s] for s in model.global_sets])))
        if self.pars:
            items.append(_eq(self.pars_var, make_list(self.pars, fresh_var())))
        return items


class _PolicyCompiler:
    def __init__(self, model: SplPolicyModel, functor: str, nonempty_sets: Sequence[str], negated: bool):
        self.model = model
        self.functor = functor
        self.nonempty = frozenset(nonempty_sets)
        self.negated = negated
        self.max_par = model.max_par()
        self.aux: List[ChrRule] = []
        self.quantifiers = 0

    def compile(self) -> CompiledPolicy:
        model = self.model
        frame = _Frame(model, self.max_par)
        result = fresh_var("R")
        items = frame.preamble(self.functor, model)
        term = self.rule_expr(model.query_rule(), frame, {}, items, (model.query,), not self.negated)
        items.append(_eq(result, term))
        head = ConstraintPattern(self.functor, frame.head_args(model) + (result,))
        main = ChrRule(self.functor, removed=(head,), body=tuple(items))
        return CompiledPolicy(model.name, self.functor, model.parameters, model.local_sets,
                              model.global_sets, (main, *self.aux), term)

    def rule_expr(self, expr: RuleExpr, frame: _Frame, scope: Dict[str, Term],
                  items: List[BodyItem], stack: Tuple[str, ...], positive: bool) -> Term:
        if isinstance(expr, Simple):
            names = self._resolver(frame, scope)
            return Compound("r", (expression_term(expr.domain, names, frame.field),
                                  expression_term(expr.accept, names, frame.field)))
        if isinstance(expr, RuleRef):
            if expr.name in stack:
                raise CyclicRuleReference(f"rule {expr.name} refers to itself")
            return self.rule_expr(self.model.rules[expr.name], frame, {}, items, stack + (expr.name,), positive)
        if isinstance(expr, RuleNot):
            inner = self.rule_expr(expr.body, frame, scope, items, stack, not positive)
            result = frame.result()
            items.append(ConstraintPattern("notr", (result, inner)))
            return result
        if isinstance(expr, (RuleAnd, RuleOr)):
            left = self.rule_expr(expr.left, frame, scope, items, stack, positive)
            right = self.rule_expr(expr.right, frame, scope, items, stack, positive)
            result = frame.result()
            functor = "andr" if isinstance(expr, RuleAnd) else "orr"
            items.append(ConstraintPattern(functor, (result, left, right)))
            return result
        if isinstance(expr, (ForAll, Exists)) and self._skolemizable(expr, positive):
            constant = fresh_var(f"Sk{_var_name(expr.var)}")
            items.append(ConstraintPattern("in", (constant, frame.names[expr.set_name])))
            return self.rule_expr(expr.body, frame, {**scope, expr.var: constant}, items, stack, positive)
        if isinstance(expr, (ForAll, Exists)):
            return self.quantifier(expr, frame, scope, items, stack, positive)
        raise UnsupportedExpression(f"unsupported rule form {expr!r}")

    def quantifier(self, expr: Union[ForAll, Exists], frame: _Frame, scope: Dict[str, Term],
                   items: List[BodyItem], stack: Tuple[str, ...], positive: bool) -> Term:
        self.quantifiers += 1
        aux_functor = f"{self.functor}_q{self.quantifiers}"
        outer = list(scope.items())
        closure = Compound(aux_functor, frame.head_args(self.model) + tuple(term for _, term in outer))
        result = frame.result()
        functor = "forallr" if isinstance(expr, ForAll) else "existsr"
        items.append(ConstraintPattern(functor, (frame.names[expr.set_name], closure, result)))

        inner = _Frame(self.model, self.max_par)
        outer_vars = [fresh_var(_var_name(name)) for name, _ in outer]
        inner_scope: Dict[str, Term] = dict(zip((name for name, _ in outer), outer_vars))
        element = fresh_var(_var_name(expr.var))
        inner_scope[expr.var] = element
        inner_result = fresh_var("R")
        body = inner.preamble(self.functor, self.model)
        term = self.rule_expr(expr.body, inner, inner_scope, body, stack, positive)
        body.append(_eq(inner_result, term))
        head = ConstraintPattern(aux_functor, inner.head_args(self.model) + tuple(outer_vars)
                                 + (element, inner_result))
        self.aux.append(ChrRule(aux_functor, removed=(head,), body=tuple(body)))
        return result

    def _resolver(self, frame: _Frame, scope: Mapping[str, Term]) -> Callable[[str], Term]:
        def resolve(name: str) -> Term:
            if name in scope:
                return scope[name]
            if name in frame.names:
                return frame.names[name]
            raise UnsupportedExpression(f"unknown name {name} in policy {self.model.name}")
        return resolve

    def _skolemizable(self, expr: Union[ForAll, Exists], positive: bool) -> bool:
        # existentials where acceptance counts for the goal, universals where it counts against
        if isinstance(expr, Exists) != positive:
            return False
        return expr.set_name in self.nonempty and not _domain_mentions(expr.body, expr.var)


def _domain_mentions(expr: RuleExpr, var: str) -> bool:
    if isinstance(expr, Simple):
        return var in set(referenced_names(expr.domain))
    if isinstance(expr, (ForAll, Exists)):
        return expr.var != var and _domain_mentions(expr.body, var)
    return any(_domain_mentions(child, var) for _, child in _children(expr))


def compile_policy(model: SplPolicyModel, *, replace: Optional[str] = None, functor: Optional[str] = None,
                   nonempty_sets: Sequence[str] = (), negated: bool = False) -> CompiledPolicy:
    """One simplification rule for the policy plus one per quantifier

    `replace` swaps the addressed rule for a never-applicable dummy;
    existentials over sets in `nonempty_sets` whose applicability does not
    depend on the bound variable are compiled to a fresh member of the set.
    Only quantifiers the goal reads positively are replaced: existentials
    under an even number of NOTs, universals under an odd one. `negated`
    says the goal looks for events the policy does not accept, which flips
    the starting polarity.
    """
    if replace is not None:
        model = replace_rule(model, replace)
    compiled = _PolicyCompiler(model, functor or model.name.lower(), nonempty_sets, negated).compile()
    logger.debug(f"Compiled policy {model.name} into {len(compiled.rules)} rules")
    return compiled


# ---------------------------------------------------------------------------
# Direct evaluation


class TriValue(Enum):
    ALLOW = "allow"
    DENY = "deny"
    NOT_APPLY = "notapply"

    @classmethod
    def from_pair(cls, domain: bool, accept: bool) -> "TriValue":
        if not domain:
            return cls.NOT_APPLY
        return cls.ALLOW if accept else cls.DENY


Pair = Tuple[bool, bool]


def tri_not(value: Pair) -> Pair:
    return value[0], not value[1]


def tri_and(left: Pair, right: Pair) -> Pair:
    (d1, a1), (d2, a2) = left, right
    return d1 or d2, (not d1 or a1) and (not d2 or a2)


def tri_or(left: Pair, right: Pair) -> Pair:
    (d1, a1), (d2, a2) = left, right
    return d1 or d2, (d1 and a1) or (d2 and a2)


def event_field(event, node: EventField):
    if node.field == "par":
        if node.index > len(event.pars):
            raise EvaluationError(f"event has no parameter {node.index}")
        return event.par(node.index)
    return getattr(event, node.field)


def evaluate_policy(model: SplPolicyModel, event, sets: Mapping[str, Sequence],
                    values: Optional[Mapping[str, object]] = None) -> TriValue:
    """Tri-valued decision of a policy on a ground event, without the engine"""
    values = values or {}

    def lookup(scope: Mapping[str, object]):
        def find(name: str):
            for table in (scope, values, sets):
                if name in table:
                    return table[name]
            raise EvaluationError(f"{name} has no value in policy {model.name}")
        return find

    def fields(node: EventField):
        return event_field(event, node)

    def pair(expr: RuleExpr, scope: Mapping[str, object]) -> Pair:
        if isinstance(expr, Simple):
            find = lookup(scope)
            return evaluate(expr.domain, find, fields), evaluate(expr.accept, find, fields)
        if isinstance(expr, RuleRef):
            return pair(model.rules[expr.name], {})
        if isinstance(expr, RuleNot):
            return tri_not(pair(expr.body, scope))
        if isinstance(expr, RuleAnd):
            return tri_and(pair(expr.left, scope), pair(expr.right, scope))
        if isinstance(expr, RuleOr):
            return tri_or(pair(expr.left, scope), pair(expr.right, scope))
        if expr.set_name not in sets:
            raise EvaluationError(f"set {expr.set_name} is not defined")
        combine, result = (tri_and, (False, True)) if isinstance(expr, ForAll) else (tri_or, (False, False))
        for member in sets[expr.set_name]:
            result = combine(result, pair(expr.body, {**scope, expr.var: member}))
        return result

    return TriValue.from_pair(*pair(model.query_rule(), {}))


_ORDER_NAMES = {"=<": "<="}


def evaluate_tri(term: Term, event, bindings: Optional[Mapping[str, object]] = None) -> TriValue:
    """Tri-valued decision of a compiled r(D, A) term on a ground event

    Event variables are looked up by the names the compiler gives them
    (Actor, Action, Target, Time, P1...); everything else comes from bindings.
    """
    if not (isinstance(term, Compound) and term.functor == "r" and len(term.args) == 2):
        raise EvaluationError(f"not a rule term: {term}")
    env: Dict[str, object] = {"Actor": event.actor, "Action": event.action,
                              "Target": event.target, "Time": event.time}
    env.update({f"P{i}": value for i, value in enumerate(event.pars, start=1)})
    env.update(bindings or {})
    return TriValue.from_pair(_formula(term.args[0], env), _formula(term.args[1], env))


def _value(term: Term, env: Mapping[str, object]):
    if isinstance(term, Variable):
        if term.name not in env:
            raise EvaluationError(f"variable {term.name} is not ground")
        return env[term.name]
    if isinstance(term, (IntLiteral, StrLiteral)):
        return term.value
    if term == NIL:
        return []
    if is_cons(term):
        return [_value(term.args[0], env)] + list(_value(term.args[1], env))
    raise EvaluationError(f"cannot take the value of {term}")


def _formula(term: Term, env: Mapping[str, object]) -> bool:
    if isinstance(term, Atom) and term.symbol in ("true", "fail"):
        return term.symbol == "true"
    if not isinstance(term, Compound):
        raise EvaluationError(f"not a formula: {term}")
    f, args = term.functor, term.args
    if f == "and":
        return _formula(args[0], env) and _formula(args[1], env)
    if f == "or":
        return _formula(args[0], env) or _formula(args[1], env)
    if f == "xor":
        return _formula(args[0], env) != _formula(args[1], env)
    if f == "not":
        return not _formula(args[0], env)
    if f in ("in", "notin"):
        members = _value(args[1], env)
        if not isinstance(members, (list, tuple, set, frozenset)):
            raise EvaluationError(f"{args[1]} is not a set")
        return (_value(args[0], env) in members) == (f == "in")
    if f in ("=", "!=", "<", "=<", ">", ">="):
        return compare(_ORDER_NAMES.get(f, f), _value(args[0], env), _value(args[1], env))
    raise EvaluationError(f"unknown formula {f}/{len(args)}")
