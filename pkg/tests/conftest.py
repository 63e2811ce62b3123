"""
Shared fixtures: corpus files, parsed models and small programs
"""

from pathlib import Path

import pytest

from pcv.domain import DomainSpec, load_domain
from pcv.kernel import build_enumeration_pack, kernel_packs
from pcv.rules import RuleProgram
from pcv.spl import load_policy
from pcv.verdicts import VerificationInputs
from pcv.wpdl import load_workflow

CORPUS = Path(__file__).resolve().parent.parent / "corpus"


@pytest.fixture
def corpus_dir() -> Path:
    return CORPUS


@pytest.fixture
def private_policy():
    return load_policy(CORPUS / "private.spl")


@pytest.fixture
def permissive_policy():
    return load_policy(CORPUS / "permissive.spl")


@pytest.fixture
def deny_approve_policy():
    return load_policy(CORPUS / "deny_approve.spl")


@pytest.fixture
def idempotent_policy():
    return load_policy(CORPUS / "idempotent.spl")


@pytest.fixture
def disjoint_policy():
    return load_policy(CORPUS / "disjoint.spl")


@pytest.fixture
def budget_workflow():
    return load_workflow(CORPUS / "budget.wf")


@pytest.fixture
def private_domain() -> DomainSpec:
    return load_domain(CORPUS / "private.dom")


@pytest.fixture
def nosend_domain() -> DomainSpec:
    return load_domain(CORPUS / "private_nosend.dom")


@pytest.fixture
def budget_domain() -> DomainSpec:
    return load_domain(CORPUS / "budget.dom")


@pytest.fixture
def office_domain() -> DomainSpec:
    """Smallest domain exercising both branches of the office policies"""
    return DomainSpec(
        name="office",
        actors=["alice"],
        actions=["SendEmail", "Print"],
        targets=["d1"],
        params=["alice", "eve"],
        pars=1,
        horizon=1,
        sets={"OrgUsers": ["alice"], "IDocs": ["d1"]},
    )


@pytest.fixture
def kernel_program() -> RuleProgram:
    return RuleProgram.compose(kernel_packs() + (build_enumeration_pack(),))


@pytest.fixture
def private_inputs(private_policy, private_domain) -> VerificationInputs:
    return VerificationInputs((private_policy,), private_domain)
