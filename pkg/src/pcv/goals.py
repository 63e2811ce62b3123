"""
Consistency goals
Bridge and difference packs, goal construction and the goal runner
"""

from __future__ import annotations

import asyncio
import logging
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Dict, List, Optional, Sequence, Tuple

from .core import DEFAULT_BUDGET, SolveResult, solve
from .domain import DomainSpec, values_term
from .errors import BudgetExhausted, ConfigError, DomainError, PcvError
from .kernel import build_enumeration_pack, kernel_packs
from .rules import BodyItem, ChrRule, ConstraintPattern, Disjunction, FunctorDecl, HandlerPack, RuleProgram, parse_rules
from .security import build_logic_pack, build_trilogic_pack
from .spl import CompiledPolicy, SplPolicyModel, compile_policy
from .terms import Atom, Compound, Term, Variable, fresh_var, make_list
from .verdicts import (
    GoalKind,
    GoalRequest,
    InconsistencyReport,
    ReportStatistics,
    SearchStatus,
    VerificationInputs,
    Verdict,
    Witness,
    split_target,
)
from .wpdl import compile_workflow

logger = logging.getLogger(__name__)

ALL_EVENTS = Atom("all_events")
NOT_APPLICABLE = Compound("r", (Atom("fail"), Atom("true")))

OPEN_CLOSE_RULES = r"""
close_bridge @ close(r(D, A)) <=> and(D, A).
open_bridge @ open(r(D, A)) <=> or(not(D), and(D, A)).
"""

DIFF_RULES = r"""
diff_commutativity @ diff(R1, R2) \ diff(R2, R1) <=> true.
diff_identity @ diff(R, R) <=> fail.
diff_definition @ diff(r(D1, A1), r(D2, A2)) <=> or(xor(D1, D2), xor(and(D1, A1), and(D2, A2))).
"""

CALL_RULES = r"""
call_deferred @ call(G) <=> nonvar(G) | G.
"""


def build_open_close_pack() -> HandlerPack:
    """Bridge from tri-valued rule terms to binary constraints"""
    declared = frozenset({FunctorDecl("open", 1), FunctorDecl("close", 1)})
    return HandlerPack("open_close", parse_rules(OPEN_CLOSE_RULES), declared)


def build_diff_pack() -> HandlerPack:
    """Constraint forcing two tri-valued rule terms to differ"""
    return HandlerPack("diff", parse_rules(DIFF_RULES), frozenset({FunctorDecl("diff", 2)}))


def build_call_pack() -> HandlerPack:
    return HandlerPack("call", parse_rules(CALL_RULES), frozenset({FunctorDecl("call", 1)}))


@lru_cache(maxsize=1)
def base_packs() -> Tuple[HandlerPack, ...]:
    """Every pack a goal program loads before its compiled rules"""
    return kernel_packs() + (build_logic_pack(), build_trilogic_pack(), build_open_close_pack(),
                             build_diff_pack(), build_call_pack())


@lru_cache(maxsize=1)
def _enumeration_pack() -> HandlerPack:
    return build_enumeration_pack()


def goal_program(rules: Sequence[ChrRule], packs: Sequence[HandlerPack] = ()) -> RuleProgram:
    """Base packs, then goal-specific packs and rules, then labeling enumeration"""
    heads = {head.key for rule in rules for head in rule.heads}
    local = HandlerPack("goal", tuple(rules), frozenset(FunctorDecl(f, n) for f, n in heads))
    return RuleProgram.compose(base_packs() + tuple(packs) + (local, _enumeration_pack()))


@dataclass
class GoalProblem:
    name: str
    program: RuleProgram
    items: Tuple[BodyItem, ...]
    variables: Dict[str, Variable]
    trace: Tuple[str, ...] = ()


# ---------------------------------------------------------------------------
# Goal construction


def _in(element: Term, collection: Term) -> ConstraintPattern:
    return ConstraintPattern("in", (element, collection))


def _eq(left: Term, right: Term) -> ConstraintPattern:
    return ConstraintPattern("=", (left, right))


def build_domain_rule(domain: DomainSpec) -> ChrRule:
    """Every member of all_events is an event built from the domain universes"""
    x = fresh_var("X")
    actor, action, target, time = (fresh_var(n) for n in ("Actor", "Action", "Target", "Time"))
    pars = [fresh_var(f"P{i}") for i in range(1, domain.pars + 1)]
    body: List[BodyItem] = [_eq(x, Compound("event", (actor, action, target, make_list(pars), time)))]
    for var, key in ((actor, "actors"), (action, "actions"), (target, "targets")):
        body.append(_in(var, domain.universe_term(key)))
    body.extend(_in(p, domain.universe_term("params")) for p in pars)
    body.append(_in(time, domain.universe_term("times")))
    return ChrRule("domain_events", kept=(_in(x, ALL_EVENTS),), body=tuple(body))


class MasterPolicy:
    """Tri-valued conjunction of the compiled policies under one head"""

    def __init__(self, policies: Sequence[CompiledPolicy], functor: str = "master"):
        self.policies = tuple(policies)
        self.functor = functor

    def rule(self) -> ChrRule:
        event, result = fresh_var("E"), fresh_var("R")
        arguments = [[fresh_var(f"A{i}_{j}") for j in range(policy.arity - 2)]
                     for i, policy in enumerate(self.policies)]
        head = ConstraintPattern(self.functor, (event, *[a for args in arguments for a in args], result))
        if not self.policies:
            body: List[BodyItem] = [_eq(result, NOT_APPLICABLE)]
        elif len(self.policies) == 1:
            body = [ConstraintPattern(self.policies[0].functor, (event, *arguments[0], result))]
        else:
            results = [fresh_var(f"R{i}") for i in range(len(self.policies))]
            body = [ConstraintPattern(p.functor, (event, *args, r))
                    for p, args, r in zip(self.policies, arguments, results)]
            combined: Term = results[0]
            for i, partial in enumerate(results[1:], start=1):
                out = result if i == len(results) - 1 else fresh_var(f"C{i}")
                body.append(ConstraintPattern("andr", (out, combined, partial)))
                combined = out
        return ChrRule(self.functor, removed=(head,), body=tuple(body))

    def call(self, event: Term, arguments: Sequence[Term], result: Term) -> ConstraintPattern:
        return ConstraintPattern(self.functor, (event, *arguments, result))


class PolicyArguments:
    """Parameter, locals and globals terms for policy heads, taken from the domain

    Sets the domain leaves undefined become shared unbound variables; value
    parameters range over the domain's data universe of the same name.
    """

    def __init__(self, domain: DomainSpec):
        self.domain = domain
        self.terms: Dict[Tuple[str, str], Term] = {}
        self.items: List[BodyItem] = []

    def set_term(self, owner: str, name: str) -> Term:
        key = (owner, name)
        if key not in self.terms:
            defined = self.domain.set_term(name)
            self.terms[key] = defined if defined is not None else fresh_var(name[:1].upper() + name[1:])
        return self.terms[key]

    def value_term(self, owner: str, name: str) -> Term:
        key = (owner, name)
        if key not in self.terms:
            var = fresh_var(name[:1].upper() + name[1:])
            self.terms[key] = var
            if name in self.domain.data:
                self.items.append(_in(var, values_term(self.domain.data[name])))
        return self.terms[key]

    def for_policy(self, model: SplPolicyModel, compiled: CompiledPolicy) -> List[Term]:
        args: List[Term] = [self.set_term(model.name, p.name) if p.is_set else self.value_term(model.name, p.name)
                            for p in model.parameters]
        args.append(compiled.locals_term([self.set_term(model.name, s) for s in model.local_sets]))
        args.append(compiled.globals_term([self.set_term("", s) for s in model.global_sets]))
        return args

    def for_policies(self, models: Sequence[SplPolicyModel], compiled: Sequence[CompiledPolicy]) -> List[Term]:
        return [t for model, c in zip(models, compiled) for t in self.for_policy(model, c)]


def check_domain(inputs: VerificationInputs):
    for model in inputs.policies:
        if model.max_par() > inputs.domain.pars:
            raise DomainError(f"policy {model.name} reads event.par[{model.max_par()}] but domain "
                              f"{inputs.domain.name} has {inputs.domain.pars} parameters")


def _compile_all(inputs: VerificationInputs, skolemize: bool = False, replace: Optional[Tuple[int, str]] = None,
                 suffix: str = "", negated: bool = False) -> List[CompiledPolicy]:
    nonempty = [name for name, values in inputs.domain.sets.items() if values] if skolemize else []
    compiled = []
    for index, model in enumerate(inputs.policies):
        target = replace[1] if replace and replace[0] == index else None
        functor = f"{model.name.lower()}{suffix}"
        compiled.append(compile_policy(model, replace=target, functor=functor, nonempty_sets=nonempty,
                                       negated=negated))
    return compiled


def _policy_goal(inputs: VerificationInputs, name: str, condition, skolemize: bool = False,
                 negated: bool = False) -> GoalProblem:
    check_domain(inputs)
    compiled = _compile_all(inputs, skolemize, negated=negated)
    master = MasterPolicy(compiled)
    arguments = PolicyArguments(inputs.domain)
    args = arguments.for_policies(inputs.policies, compiled)
    event, result, d, a = fresh_var("Event"), fresh_var("R"), fresh_var("D"), fresh_var("A")
    items: List[BodyItem] = [_in(event, ALL_EVENTS), *arguments.items, master.call(event, args, result),
                             _eq(result, Compound("r", (d, a))),
                             ConstraintPattern("call", (condition(d, a),))]
    rules = [r for c in compiled for r in c.rules] + [master.rule(), build_domain_rule(inputs.domain)]
    return GoalProblem(name, goal_program(rules), tuple(items), {"Event": event})


def build_inapplicability(inputs: VerificationInputs) -> GoalProblem:
    """Some event falls in the applicability domain"""
    return _policy_goal(inputs, GoalKind.INAPPLICABILITY.value, lambda d, a: d, inputs.skolemize)


def build_monotonic_denial(inputs: VerificationInputs) -> GoalProblem:
    """Some event is not denied"""
    return _policy_goal(inputs, GoalKind.MONOTONIC_DENY.value,
                        lambda d, a: Compound("or", (Compound("not", (d,)), a)), inputs.skolemize)


def build_monotonic_acceptance(inputs: VerificationInputs) -> GoalProblem:
    """Some event is not accepted"""
    return _policy_goal(inputs, GoalKind.MONOTONIC_ALLOW.value,
                        lambda d, a: Compound("or", (Compound("not", (d,)), Compound("not", (a,)))),
                        inputs.skolemize, negated=True)


def build_redundancy(inputs: VerificationInputs, target: str) -> GoalProblem:
    """Some event is decided differently once the target rule never applies"""
    check_domain(inputs)
    replace = split_target(inputs, target)
    original = _compile_all(inputs)
    modified = _compile_all(inputs, replace=replace, suffix="_mod")
    master, master_mod = MasterPolicy(original), MasterPolicy(modified, "master_mod")
    arguments = PolicyArguments(inputs.domain)
    event, r1, r2 = fresh_var("Event"), fresh_var("R1"), fresh_var("R2")
    items: List[BodyItem] = [
        _in(event, ALL_EVENTS),
        master.call(event, arguments.for_policies(inputs.policies, original), r1),
        master_mod.call(event, arguments.for_policies(inputs.policies, modified), r2),
        *arguments.items,
        ConstraintPattern("diff", (r1, r2)),
    ]
    rules = ([r for c in original + modified for r in c.rules]
             + [master.rule(), master_mod.rule(), build_domain_rule(inputs.domain)])
    return GoalProblem(f"{GoalKind.REDUNDANCY.value}={target}", goal_program(rules), tuple(items),
                       {"Event": event})


def build_workflow_consistency(inputs: VerificationInputs) -> GoalProblem:
    """A run of the workflow reaching an end activity whose events the policies allow"""
    if inputs.workflow is None:
        raise ConfigError("wf-consistency goal needs a workflow")
    if inputs.assumption not in ("open", "close"):
        raise ConfigError(f"unknown assumption {inputs.assumption}")
    check_domain(inputs)
    workflow = compile_workflow(inputs.workflow)
    compiled = _compile_all(inputs, inputs.skolemize and inputs.assumption == "close")
    master = MasterPolicy(compiled)
    arguments = PolicyArguments(inputs.domain)
    args = arguments.for_policies(inputs.policies, compiled)

    # every trace event is checked against the master policy
    context = [fresh_var(f"W{i}") for i in range(len(args))]
    x, r = fresh_var("X"), fresh_var("R")
    check = ChrRule("trace_policy_check",
                    kept=(ConstraintPattern("wf_context", tuple(context)), _in(x, ALL_EVENTS)),
                    body=(master.call(x, context, r), ConstraintPattern(inputs.assumption, (r,))))

    events = {name: fresh_var(f"E_{name}") for name in workflow.events}
    participants = [_participant_term(inputs.domain, p) for p in workflow.participants]
    data_vars = []
    for name in workflow.data_variables:
        var = fresh_var(name[:1].upper() + name[1:])
        data_vars.append(var)
        if name in inputs.domain.data:
            arguments.items.append(_in(var, values_term(inputs.domain.data[name])))
    g = workflow.globals_term(ALL_EVENTS, participants, data_vars, list(events.values()))
    ends = [(workflow.activity_call(end, events[end], g),) for end in workflow.ends]
    items: List[BodyItem] = [ConstraintPattern("wf_context", tuple(args)), *arguments.items]
    items.append(ends[0][0] if len(ends) == 1 else Disjunction(tuple(ends)))

    rules = ([r for c in compiled for r in c.rules]
             + [master.rule(), check, build_domain_rule(inputs.domain)])
    return GoalProblem(f"{GoalKind.WF_CONSISTENCY.value}", goal_program(rules, [workflow.pack()]),
                       tuple(items), dict(events), trace=workflow.events)


def _participant_term(domain: DomainSpec, name: str) -> Term:
    defined = domain.set_term(name)
    return defined if defined is not None else fresh_var(name[:1].upper() + name[1:])


def build_goal(inputs: VerificationInputs, request: GoalRequest) -> GoalProblem:
    if request.kind is GoalKind.INAPPLICABILITY:
        return build_inapplicability(inputs)
    if request.kind is GoalKind.MONOTONIC_DENY:
        return build_monotonic_denial(inputs)
    if request.kind is GoalKind.MONOTONIC_ALLOW:
        return build_monotonic_acceptance(inputs)
    if request.kind is GoalKind.REDUNDANCY:
        return build_redundancy(inputs, request.target or "")
    return build_workflow_consistency(inputs)


# ---------------------------------------------------------------------------
# Running goals


def _witness(problem: GoalProblem, result: SolveResult) -> Witness:
    if not problem.trace:
        return Witness(event=result.witness.get("Event"))
    trace = {name: result.witness[name] for name in problem.trace
             if name in result.witness and result.witness[name].startswith("event(")}
    return Witness(trace=trace)


def verdict_for(problem: GoalProblem, result: SolveResult) -> Verdict:
    """A solution is a counterexample to the inconsistency; none means it holds"""
    if result.satisfiable:
        return Verdict.consistent(_witness(problem, result))
    return Verdict.inconsistency()


def run_goal(inputs: VerificationInputs, request: GoalRequest, budget: int = DEFAULT_BUDGET,
             deterministic: bool = False) -> InconsistencyReport:
    """Build and solve one goal; budget exhaustion becomes an error verdict"""
    report = InconsistencyReport(
        goal=request.label,
        policies=[p.name for p in inputs.policies],
        workflow=inputs.workflow.name if inputs.workflow and request.kind is GoalKind.WF_CONSISTENCY else None,
        domain=inputs.domain.name,
        assumption=inputs.assumption if request.kind is GoalKind.WF_CONSISTENCY else None,
        verdict=Verdict.error("not run"),
    )
    logger.info(f"Running goal {request.label}")
    try:
        problem = build_goal(inputs, request)
        result = solve(problem.items, problem.program, budget, problem.variables)
    except BudgetExhausted as err:
        logger.warning(f"Goal {request.label}: {err}")
        report.verdict = Verdict.error(str(err), SearchStatus.BUDGET_LIMITED)
        report.statistics = ReportStatistics(firings=err.firings)
        return report
    except PcvError as err:
        logger.error(f"Goal {request.label} failed: {err}")
        report.verdict = Verdict.error(str(err))
        return report
    stats = result.statistics
    report.verdict = verdict_for(problem, result)
    report.statistics = ReportStatistics(firings=stats.firings, choice_points=stats.choice_points,
                                         backtracks=stats.backtracks,
                                         elapsed=0.0 if deterministic else round(stats.elapsed, 6))
    logger.info(f"Goal {request.label}: {report.verdict.kind.value} after {stats.firings} firings")
    return report


def goal_inapplicability(inputs: VerificationInputs, budget: int = DEFAULT_BUDGET) -> Verdict:
    return run_goal(inputs, GoalRequest(GoalKind.INAPPLICABILITY), budget).verdict


def goal_monotonic_denial(inputs: VerificationInputs, budget: int = DEFAULT_BUDGET) -> Verdict:
    return run_goal(inputs, GoalRequest(GoalKind.MONOTONIC_DENY), budget).verdict


def goal_monotonic_acceptance(inputs: VerificationInputs, budget: int = DEFAULT_BUDGET) -> Verdict:
    return run_goal(inputs, GoalRequest(GoalKind.MONOTONIC_ALLOW), budget).verdict


def goal_rule_redundancy(inputs: VerificationInputs, target: str, budget: int = DEFAULT_BUDGET) -> Verdict:
    return run_goal(inputs, GoalRequest(GoalKind.REDUNDANCY, target), budget).verdict


def goal_workflow_consistency(inputs: VerificationInputs, budget: int = DEFAULT_BUDGET) -> Verdict:
    return run_goal(inputs, GoalRequest(GoalKind.WF_CONSISTENCY), budget).verdict


@dataclass
class GoalRunner:
    """Runs the goals of one invocation concurrently, reporting in request order"""
    budget: int = DEFAULT_BUDGET
    deterministic: bool = False
    reports: List[InconsistencyReport] = field(default_factory=list)

    async def run(self, inputs: VerificationInputs, requests: Sequence[GoalRequest]) -> List[InconsistencyReport]:
        base_packs()
        _enumeration_pack()
        tasks = [asyncio.to_thread(run_goal, inputs, request, self.budget, self.deterministic)
                 for request in requests]
        self.reports = list(await asyncio.gather(*tasks))
        return self.reports
