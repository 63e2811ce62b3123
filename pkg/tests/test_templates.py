"""
Tests for the policy and workflow templates and the generated corpus
"""

import pytest

from pcv.domain import GroundEvent
from pcv.spl import TriValue, evaluate_policy, parse_spl
from pcv.templates import (
    PolicyTemplates,
    WorkflowTemplates,
    generate_corpus,
    policy_library,
    workflow_library,
    workflow_policy_library,
)
from pcv.verdicts import GoalKind
from pcv.wpdl import parse_workflow


class TestTemplates:
    """Every template parses"""

    @pytest.mark.parametrize("key", sorted(policy_library()))
    def test_policy_library(self, key):
        assert parse_spl(policy_library()[key]).query

    @pytest.mark.parametrize("key", sorted(workflow_policy_library()))
    def test_workflow_policy_library(self, key):
        assert parse_spl(workflow_policy_library()[key]).query

    @pytest.mark.parametrize("key", sorted(workflow_library()))
    def test_workflow_library(self, key):
        assert parse_workflow(workflow_library()[key]).atomic_activities

    def test_names(self):
        assert parse_spl(PolicyTemplates.permissive("Open")).name == "Open"
        assert parse_workflow(WorkflowTemplates.budget_approval("Expenses")).name == "Expenses"

    def test_deny_action(self):
        model = parse_spl(PolicyTemplates.deny_action("Print"))
        assert evaluate_policy(model, GroundEvent("a", "Print", "t", (), 1), {}) is TriValue.DENY
        assert evaluate_policy(model, GroundEvent("a", "Read", "t", (), 1), {}) is TriValue.ALLOW

    def test_budget_template_matches_corpus(self, budget_workflow):
        model = parse_workflow(WorkflowTemplates.budget_approval())
        assert model.participants == budget_workflow.participants
        assert model.data == budget_workflow.data
        assert [(t.name, t.from_activity, t.to_activity, t.condition) for t in model.transitions] == \
            [(t.name, t.from_activity, t.to_activity, t.condition) for t in budget_workflow.transitions]


class TestCorpus:
    """Generated verification cases"""

    def test_deterministic(self):
        first, second = generate_corpus(seed=3), generate_corpus(seed=3)
        assert [c.name for c in first] == [c.name for c in second]
        assert [c.domain for c in first] == [c.domain for c in second]

    def test_sizes(self):
        cases = generate_corpus(pairs=5, triples=2)
        assert len(cases) == 7
        assert sum(1 for c in cases if c.workflow is not None) == 2

    def test_requests(self):
        cases = generate_corpus(pairs=len(policy_library()), triples=1)
        idempotent = next(c for c in cases if c.name.startswith("idempotent-"))
        labels = [r.label for r in idempotent.requests()]
        assert labels[:3] == ["inapplicability", "monotonic-deny", "monotonic-allow"]
        assert "redundancy=query.left" in labels
        workflow_case = cases[-1]
        assert [r.kind for r in workflow_case.requests()] == [GoalKind.WF_CONSISTENCY]

    def test_inputs(self):
        case = generate_corpus(pairs=1, triples=0)[0]
        inputs = case.inputs("open", skolemize=True)
        assert inputs.assumption == "open"
        assert inputs.skolemize
        assert inputs.policies == case.policies

    def test_domains_are_valid(self):
        for case in generate_corpus():
            assert case.domain.event_count() > 0
