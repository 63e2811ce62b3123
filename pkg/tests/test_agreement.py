"""
Engine and oracle agreement over the generated corpus
"""

import pytest

from pcv.goals import run_goal
from pcv.oracle import agrees, oracle_goal
from pcv.templates import generate_corpus
from pcv.verdicts import GoalKind, GoalRequest, VerdictKind

pytestmark = pytest.mark.slow

CASES = generate_corpus()
WORKFLOW_CASES = [case for case in CASES if case.workflow is not None]
EXISTENTIAL_CASES = [case for case in CASES if case.name.startswith("any_staff-")]


def _assert_agreement(inputs, requests):
    for request in requests:
        engine = run_goal(inputs, request).verdict
        oracle = oracle_goal(inputs, request)
        assert engine.kind is not VerdictKind.ERROR, engine.diagnostic
        assert agrees(engine, oracle), f"{request.label}: engine {engine.kind}, oracle {oracle.kind}"


@pytest.mark.parametrize("case", CASES, ids=lambda case: case.name)
def test_engine_agrees_with_oracle(case):
    _assert_agreement(case.inputs(), case.requests())


@pytest.mark.parametrize("case", WORKFLOW_CASES, ids=lambda case: case.name)
def test_open_assumption_agrees(case):
    _assert_agreement(case.inputs("open"), case.requests())


@pytest.mark.parametrize("case", EXISTENTIAL_CASES, ids=lambda case: case.name)
def test_skolemized_existentials_agree(case):
    _assert_agreement(case.inputs(skolemize=True), case.requests())


@pytest.mark.parametrize("case", WORKFLOW_CASES, ids=lambda case: case.name)
def test_open_assumption_dominates_close(case):
    request = GoalRequest(GoalKind.WF_CONSISTENCY)
    closed = run_goal(case.inputs("close"), request).verdict
    opened = run_goal(case.inputs("open"), request).verdict
    assert VerdictKind.ERROR not in (closed.kind, opened.kind)
    if closed.kind is VerdictKind.NO_INCONSISTENCY:
        assert opened.kind is VerdictKind.NO_INCONSISTENCY
