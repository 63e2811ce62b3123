"""
Predefined policy and workflow templates
Plus the generated corpus used to cross-check the engine against the oracle
"""

import random
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

from .domain import DomainSpec
from .spl import SplPolicyModel, parse_spl, rule_targets
from .verdicts import GoalKind, GoalRequest, VerificationInputs
from .wpdl import WorkflowModel, parse_workflow


class PolicyTemplates:
    """Collection of predefined SPL policies"""

    @staticmethod
    def permissive(name: str = "Permissive") -> str:
        """Template for a policy allowing every event"""
        return f"policy {name}() {{\n    ?Anything: true :: true;\n}}\n"

    @staticmethod
    def restrictive(name: str = "Restrictive") -> str:
        """Template for a policy denying every event"""
        return f"policy {name}() {{\n    ?Nothing: true :: false;\n}}\n"

    @staticmethod
    def never_applicable(name: str = "Idle") -> str:
        """Template for a policy whose applicability domain is empty"""
        return f"policy {name}() {{\n    ?Idle: false :: true;\n}}\n"

    @staticmethod
    def deny_action(action: str, name: str = "DenyAction") -> str:
        """Template for a policy denying one action and allowing the rest"""
        return f'policy {name}() {{\n    ?NoAction: true :: event.action != "{action}";\n}}\n'

    @staticmethod
    def private_style(action: str = "SendEmail", name: str = "Private") -> str:
        """Template for internal documents that only go to organisation members"""
        return (
            f"policy {name}(user set OrgUsers) {{\n"
            f"    object set IDocs;\n"
            f'    ?Mail: event.action = "{action}" & event.target IN IDocs :: event.par[1] IN OrgUsers;\n'
            f"}}\n"
        )

    @staticmethod
    def idempotent(action: str = "SendEmail", name: str = "Idempotent") -> str:
        """Template for a rule conjoined with itself"""
        return (
            f"policy {name}(user set OrgUsers) {{\n"
            f"    object set IDocs;\n"
            f'    Mail: event.action = "{action}" & event.target IN IDocs :: event.par[1] IN OrgUsers;\n'
            f"    ?Both: Mail AND Mail;\n"
            f"}}\n"
        )

    @staticmethod
    def disjoint(action: str = "SendEmail", other: str = "Print", name: str = "Office") -> str:
        """Template for two rules over disjoint actions"""
        return (
            f"policy {name}(user set OrgUsers) {{\n"
            f"    object set IDocs;\n"
            f'    Mail: event.action = "{action}" & event.target IN IDocs :: event.par[1] IN OrgUsers;\n'
            f'    Print: event.action = "{other}" :: event.actor IN OrgUsers;\n'
            f"    ?Office: Mail AND Print;\n"
            f"}}\n"
        )

    @staticmethod
    def either(action: str = "SendEmail", other: str = "Print", name: str = "Either") -> str:
        """Template for a disjunction with a negated branch"""
        return (
            f"policy {name}(user set OrgUsers) {{\n"
            f'    Mail: event.action = "{action}" :: event.par[1] IN OrgUsers;\n'
            f'    Print: event.action = "{other}" :: event.actor IN OrgUsers;\n'
            f"    ?Either: Mail OR NOT Print;\n"
            f"}}\n"
        )

    @staticmethod
    def staff_only(action: str = "Delete", name: str = "StaffOnly") -> str:
        """Template for a universally quantified rule over a local set"""
        return (
            f"policy {name}() {{\n"
            f"    user set Staff;\n"
            f'    ?Guard: FORALL U IN Staff {{ event.actor = U :: event.action != "{action}" }};\n'
            f"}}\n"
        )

    @staticmethod
    def any_staff(name: str = "AnyStaff") -> str:
        """Template for an existential whose domain ignores the bound variable"""
        return (
            f"policy {name}() {{\n"
            f"    user set Staff;\n"
            f"    ?Someone: EXIST U IN Staff {{ true :: event.actor = U }};\n"
            f"}}\n"
        )

    @staticmethod
    def time_window(name: str = "Window") -> str:
        """Template for a value parameter bounding event times"""
        return f"policy {name}(value Level) {{\n    ?Window: true :: event.time <= Level;\n}}\n"

    @staticmethod
    def performers_only(participant: str = "Clerk", name: str = "PerformersOnly") -> str:
        """Template for a policy allowing one participant set"""
        return f"policy {name}(user set {participant}) {{\n    ?Members: true :: event.actor IN {participant};\n}}\n"


class WorkflowTemplates:
    """Collection of predefined workflows"""

    @staticmethod
    def budget_approval(name: str = "BudgetApproval") -> str:
        """Template for the expense approval workflow with an XOR split"""
        return (
            f"workflow {name} {{\n"
            "    participant Clerk role;\n"
            "    participant Boss role;\n"
            "    data Budget = budget(Cost);\n"
            '    activity a0 { performer Clerk; action "Build"; target budget; split XOR t0, t1; }\n'
            '    activity a1 { performer Clerk; action "Approve"; target budget; }\n'
            '    activity a2 { performer Boss; action "Approve"; target budget; }\n'
            "    transition t0 from a0 to a1 when Cost < 1000;\n"
            "    transition t1 from a0 to a2 otherwise;\n"
            "    start a0;\n"
            "    end a1, a2;\n"
            "}\n"
        )

    @staticmethod
    def sequential_review(name: str = "Review") -> str:
        """Template for three activities in sequence"""
        return (
            f"workflow {name} {{\n"
            "    participant Clerk role;\n"
            "    participant Boss role;\n"
            '    activity draft { performer Clerk; action "Build"; target budget; }\n'
            '    activity check { performer Boss; action "Approve"; target budget; }\n'
            '    activity file { performer Clerk; action "Approve"; target budget; }\n'
            "    transition t0 from draft to check otherwise;\n"
            "    transition t1 from check to file otherwise;\n"
            "}\n"
        )

    @staticmethod
    def parallel_signoff(name: str = "Signoff") -> str:
        """Template for an AND split joined again through a dummy activity"""
        return (
            f"workflow {name} {{\n"
            "    participant Clerk role;\n"
            "    participant Boss role;\n"
            '    activity prepare { performer Clerk; action "Build"; target budget; }\n'
            '    activity left { performer Clerk; action "Approve"; target budget; }\n'
            '    activity right { performer Boss; action "Approve"; target budget; }\n'
            "    activity both dummy { join AND; }\n"
            '    activity finish { performer Boss; action "Build"; target budget; }\n'
            "    transition t0 from prepare to left otherwise;\n"
            "    transition t1 from prepare to right otherwise;\n"
            "    transition t2 from left to both otherwise;\n"
            "    transition t3 from right to both otherwise;\n"
            "    transition t4 from both to finish otherwise;\n"
            "}\n"
        )


# ---------------------------------------------------------------------------
# Generated corpus


@dataclass(frozen=True)
class CorpusCase:
    """Policies, an optional workflow and a domain to verify together"""
    name: str
    policies: Tuple[SplPolicyModel, ...]
    domain: DomainSpec
    workflow: Optional[WorkflowModel] = None
    targets: Tuple[str, ...] = field(default=())

    def inputs(self, assumption: str = "close", skolemize: bool = False) -> VerificationInputs:
        return VerificationInputs(self.policies, self.domain, self.workflow, assumption, skolemize)

    def requests(self) -> List[GoalRequest]:
        if self.workflow is not None:
            return [GoalRequest(GoalKind.WF_CONSISTENCY)]
        requests = [GoalRequest(GoalKind.INAPPLICABILITY), GoalRequest(GoalKind.MONOTONIC_DENY),
                    GoalRequest(GoalKind.MONOTONIC_ALLOW)]
        requests += [GoalRequest(GoalKind.REDUNDANCY, target) for target in self.targets]
        return requests


def _subset(rng: random.Random, universe: Sequence, minimum: int = 0) -> List:
    chosen = set(rng.sample(list(universe), rng.randint(minimum, len(universe))))
    return [v for v in universe if v in chosen]


def policy_domain(rng: random.Random, name: str) -> DomainSpec:
    """Random domain for the policy templates"""
    actors = _subset(rng, ["alice", "bob", "carol"], 1)
    return DomainSpec(
        name=name,
        actors=actors,
        actions=_subset(rng, ["SendEmail", "Print", "Delete"], 1),
        targets=_subset(rng, ["d1", "memo"], 1),
        params=["alice", "eve"],
        pars=1,
        horizon=rng.randint(1, 2),
        sets={"OrgUsers": _subset(rng, ["alice", "bob", "eve"]),
              "IDocs": _subset(rng, ["d1", "d2"]),
              "Staff": _subset(rng, actors)},
        data={"Level": [1, 2]},
    )


def workflow_domain(rng: random.Random, name: str) -> DomainSpec:
    """Random domain for the workflow templates"""
    actors = _subset(rng, ["ann", "bob", "carl", "dora"], 1)
    return DomainSpec(
        name=name,
        actors=actors,
        actions=["Build", "Approve"],
        targets=["budget"],
        horizon=rng.randint(1, 3),
        sets={"Clerk": _subset(rng, actors), "Boss": _subset(rng, actors)},
        data={"Cost": _subset(rng, [500, 1500], 1)},
    )


def policy_library() -> Dict[str, str]:
    return {
        "permissive": PolicyTemplates.permissive(),
        "restrictive": PolicyTemplates.restrictive(),
        "idle": PolicyTemplates.never_applicable(),
        "deny_print": PolicyTemplates.deny_action("Print"),
        "private": PolicyTemplates.private_style(),
        "idempotent": PolicyTemplates.idempotent(),
        "disjoint": PolicyTemplates.disjoint(),
        "either": PolicyTemplates.either(),
        "staff_only": PolicyTemplates.staff_only(),
        "any_staff": PolicyTemplates.any_staff(),
        "window": PolicyTemplates.time_window(),
    }


def workflow_policy_library() -> Dict[str, str]:
    return {
        "permissive": PolicyTemplates.permissive(),
        "deny_approve": PolicyTemplates.deny_action("Approve"),
        "deny_build": PolicyTemplates.deny_action("Build"),
        "clerks": PolicyTemplates.performers_only("Clerk"),
    }


def workflow_library() -> Dict[str, str]:
    return {
        "budget": WorkflowTemplates.budget_approval(),
        "review": WorkflowTemplates.sequential_review(),
        "signoff": WorkflowTemplates.parallel_signoff(),
    }


def generate_corpus(seed: int = 0, pairs: int = 50, triples: int = 12) -> List[CorpusCase]:
    """Deterministic (policy, domain) pairs and (policy, workflow, domain) triples"""
    rng = random.Random(seed)
    policies = {key: parse_spl(text) for key, text in policy_library().items()}
    workflow_policies = {key: parse_spl(text) for key, text in workflow_policy_library().items()}
    workflows = {key: parse_workflow(text) for key, text in workflow_library().items()}

    cases: List[CorpusCase] = []
    keys = sorted(policies)
    for i in range(pairs):
        key = keys[i % len(keys)]
        model = policies[key]
        cases.append(CorpusCase(f"{key}-{i}", (model,), policy_domain(rng, f"pd{i}"),
                                targets=tuple(rule_targets(model))))
    wf_keys, wp_keys = sorted(workflows), sorted(workflow_policies)
    for i in range(triples):
        workflow = workflows[wf_keys[i % len(wf_keys)]]
        model = workflow_policies[wp_keys[(i // len(wf_keys)) % len(wp_keys)]]
        cases.append(CorpusCase(f"{workflow.name}-{model.name}-{i}", (model,), workflow_domain(rng, f"wd{i}"),
                                workflow=workflow))
    return cases
