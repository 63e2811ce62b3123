"""
Workflow frontend
Workflow model, parser and compiler of activities and transitions to constraint rules
"""

from __future__ import annotations

import dataclasses
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Iterator, List, Optional, Sequence, Tuple, Union

import pyparsing as pp

from .errors import (
    CyclicWorkflow,
    DanglingReference,
    LoopActivityUnsupported,
    MissingStartActivity,
    UnsupportedExpression,
    WorkflowSyntaxError,
)
from .expressions import (
    EventField,
    Expr,
    Literal,
    Name,
    build_expression_grammar,
    expression_term,
    literal_term,
    operands,
    referenced_names,
    set_names,
)
from .rules import BodyItem, ChrRule, ConstraintPattern, Disjunction, FunctorDecl, HandlerPack, dump_rules, pattern_from_term
from .terms import Atom, Compound, Term, fresh_var

logger = logging.getLogger(__name__)

PARTICIPANT_KINDS = ("person", "role", "application", "org-unit")
ACTIVITY_KINDS = ("atomic", "dummy", "loop")


@dataclass(frozen=True)
class Participant:
    name: str
    kind: str


@dataclass(frozen=True)
class DataCompound:
    functor: str
    args: Tuple["DataTerm", ...]


DataTerm = Union[Name, Literal, DataCompound]


@dataclass(frozen=True)
class DataDecl:
    name: str
    term: DataTerm

    def variables(self) -> Iterator[str]:
        yield from _data_variables(self.term)


def _data_variables(term: DataTerm) -> Iterator[str]:
    if isinstance(term, Name):
        yield term.name
    elif isinstance(term, DataCompound):
        for arg in term.args:
            yield from _data_variables(arg)


@dataclass(frozen=True)
class Activity:
    name: str
    kind: str = "atomic"
    performer: Optional[str] = None
    action: Optional[Union[str, int]] = None
    target: Optional[Union[str, int]] = None
    join: str = "AND"
    split: str = "AND"
    priority: Tuple[str, ...] = ()
    line: Optional[int] = None

    @property
    def is_atomic(self) -> bool:
        return self.kind == "atomic"


@dataclass(frozen=True)
class Transition:
    name: str
    from_activity: str
    to_activity: str
    condition: Optional[Expr] = None  # None is the otherwise branch
    line: Optional[int] = None


@dataclass(frozen=True)
class WorkflowModel:
    name: str
    participants: Tuple[Participant, ...]
    data: Tuple[DataDecl, ...]
    activities: Tuple[Activity, ...]
    transitions: Tuple[Transition, ...]
    start: str
    ends: Tuple[str, ...]

    def activity(self, name: str) -> Activity:
        return next(a for a in self.activities if a.name == name)

    @property
    def atomic_activities(self) -> Tuple[str, ...]:
        return tuple(a.name for a in self.activities if a.is_atomic)

    @property
    def participant_names(self) -> Tuple[str, ...]:
        return tuple(p.name for p in self.participants)

    @property
    def data_variables(self) -> Tuple[str, ...]:
        seen: List[str] = []
        for decl in self.data:
            for name in decl.variables():
                if name not in seen:
                    seen.append(name)
        return tuple(seen)

    def incoming(self, name: str) -> Tuple[Transition, ...]:
        return tuple(t for t in self.transitions if t.to_activity == name)

    def outgoing(self, name: str) -> Tuple[Transition, ...]:
        """Outgoing transitions, in priority order for XOR splits"""
        found = [t for t in self.transitions if t.from_activity == name]
        activity = self.activity(name)
        if activity.split == "XOR" and activity.priority:
            rank = {n: i for i, n in enumerate(activity.priority)}
            found.sort(key=lambda t: rank[t.name])
        return tuple(found)

    def preceding_siblings(self, transition: Transition) -> Tuple[Transition, ...]:
        """Higher-priority siblings of a transition leaving an XOR split"""
        if self.activity(transition.from_activity).split != "XOR":
            return ()
        siblings = self.outgoing(transition.from_activity)
        return siblings[:siblings.index(transition)]


# ---------------------------------------------------------------------------
# Parser


@dataclass(frozen=True)
class _Item:
    kind: str
    tokens: tuple
    line: int


def _tagged(kind: str, element: pp.ParserElement) -> pp.ParserElement:
    return element.set_parse_action(lambda s, loc, t: _Item(kind, tuple(t), pp.lineno(loc, s)))


def build_workflow_grammar() -> pp.ParserElement:
    ident = pp.Regex(r"[A-Za-z_][A-Za-z0-9_]*")
    semi = pp.Suppress(";")
    integer = pp.Regex(r"-?\d+").set_parse_action(lambda t: int(t[0]))
    string = pp.QuotedString('"', esc_char="\\")
    value = string | integer | ident

    data_term = pp.Forward()
    compound = (ident + pp.Suppress("(") + pp.Group(data_term + pp.ZeroOrMore(pp.Suppress(",") + data_term))
                + pp.Suppress(")")).set_parse_action(lambda t: DataCompound(t[0], tuple(t[1])))
    data_term <<= (compound
                   | integer.copy().set_parse_action(lambda t: Literal(int(t[0])))
                   | string.copy().set_parse_action(lambda t: Literal(t[0]))
                   | ident.copy().set_parse_action(lambda t: Name(t[0]) if t[0][:1].isupper() else Literal(t[0])))

    def prop(keyword: str, operand: pp.ParserElement) -> pp.ParserElement:
        return pp.Group(pp.Keyword(keyword) + operand + semi)

    properties = (prop("performer", ident) | prop("action", value) | prop("target", value)
                  | prop("join", pp.Keyword("AND") | pp.Keyword("XOR"))
                  | pp.Group(pp.Keyword("split") + pp.Keyword("XOR")
                             + pp.Optional(ident + pp.ZeroOrMore(pp.Suppress(",") + ident)) + semi)
                  | prop("split", pp.Keyword("AND")))
    kind = pp.MatchFirst([pp.Keyword(k) for k in ACTIVITY_KINDS])

    item = pp.Forward()
    participant = _tagged("participant", pp.Suppress(pp.Keyword("participant")) + ident
                          + pp.one_of(" ".join(PARTICIPANT_KINDS)) + semi)
    data = _tagged("data", pp.Suppress(pp.Keyword("data")) + ident + pp.Suppress("=") + data_term + semi)
    activity = _tagged("activity", pp.Suppress(pp.Keyword("activity")) + ident
                       + pp.Optional(kind, default="atomic")
                       + pp.Suppress("{") + pp.Group(pp.ZeroOrMore(properties)) + pp.Suppress("}"))
    condition = (pp.Suppress(pp.Keyword("when")) + build_expression_grammar()) | pp.Keyword("otherwise")
    transition = _tagged("transition", pp.Suppress(pp.Keyword("transition")) + ident
                         + pp.Suppress(pp.Keyword("from")) + ident + pp.Suppress(pp.Keyword("to")) + ident
                         + condition + semi)
    start = _tagged("start", pp.Suppress(pp.Keyword("start")) + ident + semi)
    end = _tagged("end", pp.Suppress(pp.Keyword("end")) + ident + pp.ZeroOrMore(pp.Suppress(",") + ident) + semi)
    subflow = _tagged("subflow", pp.Suppress(pp.Keyword("subflow")) + ident
                      + pp.Suppress("{") + pp.Group(pp.ZeroOrMore(item)) + pp.Suppress("}"))
    item <<= participant | data | activity | transition | start | end | subflow

    workflow = (pp.Suppress(pp.Keyword("workflow")) + ident + pp.Suppress("{")
                + pp.Group(pp.ZeroOrMore(item)) + pp.Suppress("}"))
    workflow.ignore(pp.dbl_slash_comment)
    return workflow


_WORKFLOW = build_workflow_grammar()


def _flatten_items(items: Sequence[_Item], path: Optional[str], nested: bool = False) -> List[_Item]:
    flat: List[_Item] = []
    for item in items:
        if item.kind != "subflow":
            flat.append(item)
            continue
        if nested:
            raise WorkflowSyntaxError(f"subflow {item.tokens[0]} is nested inside another subflow",
                                      path, item.line)
        logger.debug(f"Inlining subflow {item.tokens[0]}")
        flat.extend(_flatten_items(list(item.tokens[1]), path, nested=True))
    return flat


def _activity(item: _Item, path: Optional[str]) -> Activity:
    name, kind, props = item.tokens[0], item.tokens[1], item.tokens[2]
    if kind == "loop":
        raise LoopActivityUnsupported(f"loop activity {name} cannot be verified without unrolling", path, item.line)
    fields: Dict[str, object] = {}
    for prop in props:
        key = prop[0]
        if key == "split" and prop[1] == "XOR":
            fields["split"] = "XOR"
            fields["priority"] = tuple(prop[2:])
        elif key in fields:
            raise WorkflowSyntaxError(f"activity {name} sets {key} twice", path, item.line)
        else:
            fields[key] = prop[1]
    if kind == "dummy" and any(k in fields for k in ("performer", "action", "target")):
        raise WorkflowSyntaxError(f"dummy activity {name} cannot have a performer, action or target",
                                  path, item.line)
    return Activity(name, kind, line=item.line, **fields)


def parse_workflow(text: str, path: Optional[str] = None) -> WorkflowModel:
    """Parse and validate one workflow"""
    try:
        parsed = _WORKFLOW.parse_string(text, parse_all=True)
    except pp.ParseBaseException as err:
        raise WorkflowSyntaxError(f"invalid workflow: {err.msg}", path, err.lineno, err.col) from err
    name = parsed[0]
    items = _flatten_items(list(parsed[1]), path)

    participants: List[Participant] = []
    data: List[DataDecl] = []
    activities: List[Activity] = []
    transitions: List[Transition] = []
    starts: List[_Item] = []
    ends: List[str] = []
    names = set()

    def declare(item_name: str, item: _Item):
        if item_name in names:
            raise WorkflowSyntaxError(f"{item_name} declared twice", path, item.line)
        names.add(item_name)

    for item in items:
        if item.kind == "participant":
            declare(item.tokens[0], item)
            participants.append(Participant(item.tokens[0], item.tokens[1]))
        elif item.kind == "data":
            declare(item.tokens[0], item)
            data.append(DataDecl(item.tokens[0], item.tokens[1]))
        elif item.kind == "activity":
            declare(item.tokens[0], item)
            activities.append(_activity(item, path))
        elif item.kind == "transition":
            declare(item.tokens[0], item)
            condition = None if item.tokens[3] == "otherwise" else item.tokens[3]
            transitions.append(Transition(item.tokens[0], item.tokens[1], item.tokens[2], condition, item.line))
        elif item.kind == "start":
            starts.append(item)
        else:
            ends.extend(item.tokens)

    if not activities:
        raise MissingStartActivity(f"workflow {name} has no activities", path)
    known = {a.name for a in activities}
    for transition in transitions:
        for endpoint in (transition.from_activity, transition.to_activity):
            if endpoint not in known:
                raise DanglingReference(f"transition {transition.name} refers to undeclared activity {endpoint}",
                                        path, transition.line)

    if len(starts) > 1:
        raise WorkflowSyntaxError(f"workflow {name} has more than one start activity", path, starts[1].line)
    targets = {t.to_activity for t in transitions}
    if starts:
        start = starts[0].tokens[0]
        if start not in known:
            raise DanglingReference(f"start refers to undeclared activity {start}", path, starts[0].line)
    else:
        roots = [a.name for a in activities if a.name not in targets]
        if not roots:
            raise MissingStartActivity(f"workflow {name} has no activity without incoming transitions", path)
        start = roots[0]

    sources = {t.from_activity for t in transitions}
    if not ends:
        ends = [a.name for a in activities if a.name not in sources]
    for end in ends:
        if end not in known:
            raise DanglingReference(f"end refers to undeclared activity {end}", path)

    model = WorkflowModel(name, tuple(participants), tuple(data), tuple(activities), tuple(transitions),
                          start, tuple(ends))
    _validate(model, path)
    logger.debug(f"Parsed workflow {name}: {len(activities)} activities, {len(transitions)} transitions")
    return model


def load_workflow(path: Union[str, Path]) -> WorkflowModel:
    path = Path(path)
    return parse_workflow(path.read_text(encoding="utf-8"), str(path))


def _validate(model: WorkflowModel, path: Optional[str]):
    participants = set(model.participant_names)
    data_variables = set(model.data_variables)
    for activity in model.activities:
        if activity.performer is not None and activity.performer not in participants:
            raise DanglingReference(f"activity {activity.name} is performed by undeclared participant "
                                    f"{activity.performer}", path, activity.line)
        outgoing = {t.name for t in model.transitions if t.from_activity == activity.name}
        if activity.priority and (len(activity.priority) != len(outgoing) or set(activity.priority) != outgoing):
            raise WorkflowSyntaxError(f"XOR split of {activity.name} must list each outgoing transition once",
                                      path, activity.line)
    for end in model.ends:
        if not model.activity(end).is_atomic:
            raise WorkflowSyntaxError(f"end activity {end} must be atomic", path)
    for transition in model.transitions:
        if transition.condition is None:
            continue
        if any(isinstance(op, EventField) for op in operands(transition.condition)):
            raise UnsupportedExpression(f"condition of {transition.name} reads event properties",
                                        path, transition.line)
        for name in referenced_names(transition.condition):
            if name not in data_variables:
                raise DanglingReference(f"condition of {transition.name} uses undeclared data {name}",
                                        path, transition.line)
        for name in set_names(transition.condition):
            if name not in participants:
                raise DanglingReference(f"condition of {transition.name} uses undeclared participant {name}",
                                        path, transition.line)
    _check_acyclic(model, path)


def _check_acyclic(model: WorkflowModel, path: Optional[str]):
    state: Dict[str, int] = {}

    def visit(name: str):
        state[name] = 1
        for transition in model.transitions:
            if transition.from_activity != name:
                continue
            nxt = transition.to_activity
            if state.get(nxt) == 1:
                raise CyclicWorkflow(f"transition {transition.name} closes a cycle at {nxt}", path, transition.line)
            if nxt not in state:
                visit(nxt)
        state[name] = 2

    for activity in model.activities:
        if activity.name not in state:
            visit(activity.name)


# ---------------------------------------------------------------------------
# Compiler


def _eq(left: Term, right: Term) -> ConstraintPattern:
    return ConstraintPattern("=", (left, right))


def _var_name(name: str) -> str:
    return name[:1].upper() + name[1:]


@dataclass(frozen=True)
class CompiledWorkflow:
    name: str
    prefix: str
    participants: Tuple[str, ...]
    data_variables: Tuple[str, ...]
    events: Tuple[str, ...]
    ends: Tuple[str, ...]
    rules: Tuple[ChrRule, ...]

    def functor(self, name: str) -> str:
        return f"{self.prefix}_{name}"

    def globals_term(self, all_events: Term, participants: Sequence[Term], data: Sequence[Term],
                     events: Sequence[Term]) -> Term:
        inner = Compound(f"{self.prefix}_globals",
                         (all_events, *participants, *data, Compound("events", tuple(events))))
        return Compound("globals", (inner,))

    def activity_call(self, name: str, event: Term, globals_: Term) -> ConstraintPattern:
        return ConstraintPattern(self.functor(name), (event, globals_))

    def pack(self) -> HandlerPack:
        heads = {rule.removed[0].functor for rule in self.rules}
        return HandlerPack(f"workflow_{self.prefix}", self.rules,
                           frozenset(FunctorDecl(f, 2) for f in heads),
                           frozenset((f, 2) for f in heads))

    def dump(self) -> str:
        return dump_rules(self.rules)


class _Globals:
    """Fresh variables for the globals of one emitted rule"""

    def __init__(self, model: WorkflowModel, compiled: CompiledWorkflow):
        self.all_events = fresh_var("AllEvents")
        self.participants = {p: fresh_var(_var_name(p)) for p in model.participant_names}
        self.data = {d: fresh_var(_var_name(d)) for d in model.data_variables}
        self.events = {a: fresh_var(f"E_{a}") for a in model.atomic_activities}
        self.term = compiled.globals_term(self.all_events, list(self.participants.values()),
                                          list(self.data.values()), list(self.events.values()))

    def name(self, name: str) -> Term:
        if name in self.data:
            return self.data[name]
        if name in self.participants:
            return self.participants[name]
        raise UnsupportedExpression(f"unknown workflow name {name}")


def _no_fields(node: EventField) -> Term:
    raise UnsupportedExpression(f"workflow conditions cannot read {node}")


class _WorkflowCompiler:
    def __init__(self, model: WorkflowModel):
        self.model = model
        self.compiled = CompiledWorkflow(model.name, model.name.lower(), model.participant_names,
                                         model.data_variables, model.atomic_activities, model.ends, ())

    def compile(self) -> CompiledWorkflow:
        rules: List[ChrRule] = []
        for activity in self.model.activities:
            rules.append(self.activity_rule(activity) if activity.is_atomic else self.dummy_rule(activity))
        for transition in self.model.transitions:
            rules.append(self.test_rule(transition))
            rules.append(self.transition_rule(transition))
        return dataclasses.replace(self.compiled, rules=tuple(rules))

    def _call(self, name: str, event: Term, globals_: Term) -> ConstraintPattern:
        return ConstraintPattern(self.compiled.functor(name), (event, globals_))

    def _join(self, activity: Activity, event: Term, globals_: Term) -> List[BodyItem]:
        incoming = self.model.incoming(activity.name)
        calls = [self._call(t.name, event, globals_) for t in incoming]
        if activity.join == "XOR" and len(calls) > 1:
            return [Disjunction(tuple((call,) for call in calls))]
        return list(calls)

    def activity_rule(self, activity: Activity) -> ChrRule:
        event, g = fresh_var("E"), fresh_var("G")
        env = _Globals(self.model, self.compiled)
        actor, action, target = fresh_var("Actor"), fresh_var("Action"), fresh_var("Target")
        body: List[BodyItem] = [_eq(g, env.term), _eq(event, env.events[activity.name])]
        body += self._join(activity, event, g)
        body.append(_eq(event, Compound("event", (actor, action, target, fresh_var(), fresh_var()))))
        body.append(ConstraintPattern("in", (event, env.all_events)))
        if activity.performer is not None:
            body.append(ConstraintPattern("in", (actor, env.participants[activity.performer])))
        if activity.action is not None:
            body.append(_eq(action, literal_term(activity.action)))
        if activity.target is not None:
            value = activity.target
            body.append(_eq(target, env.data[value] if value in env.data else literal_term(value)))
        head = self._call(activity.name, event, g)
        return ChrRule(self.compiled.functor(activity.name), removed=(head,), body=tuple(body))

    def dummy_rule(self, activity: Activity) -> ChrRule:
        event, g = fresh_var("E"), fresh_var("G")
        body = self._join(activity, event, g) or [ConstraintPattern("true")]
        head = self._call(activity.name, event, g)
        return ChrRule(self.compiled.functor(activity.name), removed=(head,), body=tuple(body))

    def _condition(self, condition: Optional[Expr], env: _Globals) -> Term:
        if condition is None:
            return Atom("true")
        return expression_term(condition, env.name, _no_fields)

    def test_rule(self, transition: Transition) -> ChrRule:
        event, g = fresh_var("E"), fresh_var("G")
        env = _Globals(self.model, self.compiled)
        body: List[BodyItem] = [_eq(g, env.term)]
        for sibling in self.model.preceding_siblings(transition):
            body.append(ConstraintPattern("not", (self._condition(sibling.condition, env),)))
        body.append(pattern_from_term(self._condition(transition.condition, env)))
        name = f"{transition.name}_test"
        head = self._call(name, event, g)
        return ChrRule(self.compiled.functor(name), removed=(head,), body=tuple(body))

    def transition_rule(self, transition: Transition) -> ChrRule:
        event, g = fresh_var("E"), fresh_var("G")
        body: List[BodyItem] = [self._call(f"{transition.name}_test", event, g)]
        source = self.model.activity(transition.from_activity)
        if not source.is_atomic:
            body.append(self._call(source.name, event, g))
        else:
            env = _Globals(self.model, self.compiled)
            previous, time, previous_time = fresh_var("PrevE"), fresh_var("T"), fresh_var("PT")
            body = [_eq(g, env.term)] + body + [
                self._call(source.name, previous, g),
                _eq(event, Compound("event", (fresh_var(), fresh_var(), fresh_var(), fresh_var(), time))),
                ConstraintPattern("in", (event, env.all_events)),
                _eq(previous, Compound("event", (fresh_var(), fresh_var(), fresh_var(), fresh_var(), previous_time))),
                ConstraintPattern("<", (previous_time, time)),
            ]
        head = self._call(transition.name, event, g)
        return ChrRule(self.compiled.functor(transition.name), removed=(head,), body=tuple(body))


def compile_workflow(model: WorkflowModel) -> CompiledWorkflow:
    """One rule per activity and two per transition"""
    compiled = _WorkflowCompiler(model).compile()
    logger.debug(f"Compiled workflow {model.name} into {len(compiled.rules)} rules")
    return compiled
