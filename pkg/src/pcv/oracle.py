"""
Brute-force oracle
Decides the consistency goals by exhaustive evaluation over the domain, without the rule engine
"""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass
from typing import Callable, Dict, FrozenSet, Iterator, List, Mapping, Optional, Sequence, Tuple

from .domain import DomainSpec, GroundEvent, Value, enumerate_events
from .errors import EvaluationError, OracleError
from .expressions import EventField, evaluate
from .spl import SplPolicyModel, TriValue, evaluate_policy, replace_rule, tri_and
from .verdicts import GoalKind, GoalRequest, VerificationInputs, Verdict, Witness, split_target
from .wpdl import Activity, Transition, WorkflowModel

logger = logging.getLogger(__name__)

MAX_ASSIGNMENTS = 1_000_000

ValueAssignment = Tuple[Dict[str, Value], ...]


def master_decision(decisions: Sequence[TriValue]) -> TriValue:
    """Tri-valued conjunction; NotApply is the unit"""
    pair = (False, True)
    for value in decisions:
        pair = tri_and(pair, (value is not TriValue.NOT_APPLY, value is TriValue.ALLOW))
    return TriValue.from_pair(*pair)


CANONICAL_PAIRS: Dict[TriValue, Tuple[bool, bool]] = {
    TriValue.ALLOW: (True, True),
    TriValue.DENY: (True, False),
    TriValue.NOT_APPLY: (False, True),
}

DiffRow = Tuple[bool, bool, bool, bool]


def tri_and_table() -> Dict[Tuple[TriValue, TriValue], TriValue]:
    """The nine verdict combinations of the tri-valued conjunction"""
    return {(left, right): TriValue.from_pair(*tri_and(CANONICAL_PAIRS[left], CANONICAL_PAIRS[right]))
            for left in TriValue for right in TriValue}


def differs(d1: bool, a1: bool, d2: bool, a2: bool) -> bool:
    return d1 != d2 or (d1 and a1) != (d2 and a2)


def diff_table() -> Dict[DiffRow, bool]:
    """All sixteen ground (D1, A1, D2, A2) rows of the difference operator"""
    return {row: differs(*row) for row in itertools.product((False, True), repeat=4)}


@dataclass(frozen=True)
class TracePlan:
    """Structural requirements of one way to reach an end activity"""
    activities: FrozenSet[str] = frozenset()
    tests: FrozenSet[str] = frozenset()
    order: FrozenSet[Tuple[str, str]] = frozenset()

    def merge(self, *others: "TracePlan") -> "TracePlan":
        plans = (self,) + others
        return TracePlan(frozenset().union(*(p.activities for p in plans)),
                         frozenset().union(*(p.tests for p in plans)),
                         frozenset().union(*(p.order for p in plans)))


def trace_plans(model: WorkflowModel, end: str) -> Iterator[TracePlan]:
    """Every combination of XOR-join choices that completes `end`"""
    yield from _activity_plans(model, end, end)


def _activity_plans(model: WorkflowModel, name: str, owner: str) -> Iterator[TracePlan]:
    activity = model.activity(name)
    if activity.is_atomic:
        owner = name
    base = TracePlan(activities=frozenset({name}) if activity.is_atomic else frozenset())
    incoming = model.incoming(name)
    if not incoming:
        yield base
        return
    options = [list(_transition_plans(model, t, owner)) for t in incoming]
    if activity.join == "XOR" and len(incoming) > 1:
        for plan in itertools.chain.from_iterable(options):
            yield base.merge(plan)
    else:
        for combination in itertools.product(*options):
            yield base.merge(*combination)


def _transition_plans(model: WorkflowModel, transition: Transition, owner: str) -> Iterator[TracePlan]:
    source = model.activity(transition.from_activity)
    step = TracePlan(tests=frozenset({transition.name}))
    if source.is_atomic:
        step = step.merge(TracePlan(order=frozenset({(source.name, owner)})))
        for plan in _activity_plans(model, source.name, source.name):
            yield plan.merge(step)
    else:
        for plan in _activity_plans(model, source.name, owner):
            yield plan.merge(step)


def _no_fields(node: EventField):
    raise OracleError(f"workflow conditions cannot read {node}")


class PolicyOracle:
    """Exhaustive evaluator for the policy and workflow goals of one run"""

    def __init__(self, inputs: VerificationInputs):
        self.inputs = inputs
        self.domain: DomainSpec = inputs.domain
        self.policies: Tuple[SplPolicyModel, ...] = tuple(inputs.policies)
        self._check_policies()

    def _check_policies(self):
        for model in self.policies:
            for name in model.set_names:
                if name not in self.domain.sets:
                    raise OracleError(f"set {name} of policy {model.name} is not defined by domain {self.domain.name}")
            for name in model.value_parameters:
                if name not in self.domain.data:
                    raise OracleError(f"value parameter {name} of policy {model.name} has no data universe")
            if model.max_par() > self.domain.pars:
                raise OracleError(f"policy {model.name} reads more event parameters than the domain has")

    def _guard(self, *factors: int):
        total = math.prod(factors)
        if total > MAX_ASSIGNMENTS:
            raise OracleError(f"{total} candidate assignments exceed the oracle limit of {MAX_ASSIGNMENTS}")

    def value_assignments(self) -> List[ValueAssignment]:
        slots = [(i, name) for i, model in enumerate(self.policies) for name in model.value_parameters]
        assignments = []
        for combination in itertools.product(*(self.domain.data[name] for _, name in slots)):
            values: Tuple[Dict[str, Value], ...] = tuple({} for _ in self.policies)
            for (i, name), value in zip(slots, combination):
                values[i][name] = value
            assignments.append(values)
        return assignments

    def decide(self, policies: Sequence[SplPolicyModel], event: GroundEvent, values: ValueAssignment) -> TriValue:
        try:
            return master_decision([evaluate_policy(model, event, self.domain.sets, value)
                                    for model, value in zip(policies, values)])
        except EvaluationError as err:
            raise OracleError(str(err)) from err

    def _first_event(self, predicate: Callable[[GroundEvent, ValueAssignment], bool]) -> Optional[GroundEvent]:
        assignments = self.value_assignments()
        self._guard(self.domain.event_count(), len(assignments))
        for values in assignments:
            for event in enumerate_events(self.domain):
                if predicate(event, values):
                    return event
        return None

    def _event_verdict(self, predicate: Callable[[GroundEvent, ValueAssignment], bool]) -> Verdict:
        event = self._first_event(predicate)
        if event is None:
            return Verdict.inconsistency()
        return Verdict.consistent(Witness(event=str(event)))

    def inapplicability(self) -> Verdict:
        return self._event_verdict(
            lambda e, v: self.decide(self.policies, e, v) is not TriValue.NOT_APPLY)

    def monotonic_denial(self) -> Verdict:
        return self._event_verdict(lambda e, v: self.decide(self.policies, e, v) is not TriValue.DENY)

    def monotonic_acceptance(self) -> Verdict:
        return self._event_verdict(lambda e, v: self.decide(self.policies, e, v) is not TriValue.ALLOW)

    def redundancy(self, target: str) -> Verdict:
        index, path = split_target(self.inputs, target)
        modified = list(self.policies)
        modified[index] = replace_rule(modified[index], path)
        return self._event_verdict(
            lambda e, v: self.decide(self.policies, e, v) is not self.decide(modified, e, v))

    # -----------------------------------------------------------------------
    # Workflow traces

    def workflow_consistency(self) -> Verdict:
        workflow = self.inputs.workflow
        if workflow is None:
            raise OracleError("workflow goal without a workflow")
        for name in workflow.participant_names:
            if name not in self.domain.sets:
                raise OracleError(f"participant {name} is not defined by domain {self.domain.name}")
        for name in workflow.data_variables:
            if name not in self.domain.data:
                raise OracleError(f"workflow data {name} has no data universe")
        data_assignments = [dict(zip(workflow.data_variables, combination)) for combination in
                            itertools.product(*(self.domain.data[n] for n in workflow.data_variables))]
        value_assignments = self.value_assignments()
        self._guard(self.domain.event_count(), len(value_assignments), len(data_assignments))
        events = list(enumerate_events(self.domain))

        for end in workflow.ends:
            for plan in trace_plans(workflow, end):
                for data in data_assignments:
                    if not self._tests_hold(workflow, plan, data):
                        continue
                    for values in value_assignments:
                        trace = self._schedule(workflow, plan, data, values, events)
                        if trace is not None:
                            ordered = [a.name for a in workflow.activities if a.name in trace]
                            return Verdict.consistent(Witness(trace={a: str(trace[a]) for a in ordered}))
        return Verdict.inconsistency()

    def _names(self, data: Mapping[str, Value]):
        def find(name: str):
            if name in data:
                return data[name]
            if name in self.domain.sets:
                return self.domain.sets[name]
            raise OracleError(f"workflow name {name} has no value")
        return find

    def _tests_hold(self, workflow: WorkflowModel, plan: TracePlan, data: Mapping[str, Value]) -> bool:
        names = self._names(data)

        def holds(transition: Transition) -> bool:
            if transition.condition is None:
                return True
            return evaluate(transition.condition, names, _no_fields)

        for transition in workflow.transitions:
            if transition.name not in plan.tests:
                continue
            if any(holds(sibling) for sibling in workflow.preceding_siblings(transition)):
                return False
            if not holds(transition):
                return False
        return True

    def _performs(self, activity: Activity, event: GroundEvent, data: Mapping[str, Value]) -> bool:
        if activity.performer is not None and event.actor not in self.domain.sets[activity.performer]:
            return False
        if activity.action is not None and event.action != activity.action:
            return False
        if activity.target is not None:
            target = data.get(activity.target, activity.target) if isinstance(activity.target, str) else activity.target
            if event.target != target:
                return False
        return True

    def _allowed(self, event: GroundEvent, values: ValueAssignment) -> bool:
        decision = self.decide(self.policies, event, values)
        if self.inputs.assumption == "close":
            return decision is TriValue.ALLOW
        return decision is not TriValue.DENY

    def _schedule(self, workflow: WorkflowModel, plan: TracePlan, data: Mapping[str, Value],
                  values: ValueAssignment, events: Sequence[GroundEvent]) -> Optional[Dict[str, GroundEvent]]:
        """Earliest strictly ordered choice of one allowed event per required activity"""
        candidates: Dict[str, List[GroundEvent]] = {}
        for name in plan.activities:
            activity = workflow.activity(name)
            candidates[name] = [e for e in events if self._performs(activity, e, data) and self._allowed(e, values)]
            if not candidates[name]:
                return None
            candidates[name].sort(key=lambda e: e.time)
        chosen: Dict[str, GroundEvent] = {}
        pending = set(plan.activities)
        while pending:
            ready = sorted(a for a in pending
                           if all(before in chosen for before, after in plan.order if after == a))
            if not ready:
                return None
            for name in ready:
                earliest = max((chosen[b].time for b, a in plan.order if a == name), default=0)
                event = next((e for e in candidates[name] if e.time > earliest), None)
                if event is None:
                    return None
                chosen[name] = event
                pending.discard(name)
        return chosen


def oracle_goal(inputs: VerificationInputs, request: GoalRequest) -> Verdict:
    """Verdict of one goal by exhaustive evaluation"""
    oracle = PolicyOracle(inputs)
    logger.info(f"Oracle evaluating {request.label}")
    if request.kind is GoalKind.INAPPLICABILITY:
        return oracle.inapplicability()
    if request.kind is GoalKind.MONOTONIC_DENY:
        return oracle.monotonic_denial()
    if request.kind is GoalKind.MONOTONIC_ALLOW:
        return oracle.monotonic_acceptance()
    if request.kind is GoalKind.REDUNDANCY:
        return oracle.redundancy(request.target or "")
    return oracle.workflow_consistency()


def agrees(engine: Verdict, oracle: Verdict) -> bool:
    return engine.kind == oracle.kind
