"""
Goal requests, verdicts and reports
Shared by the rule-based goals and the brute-force oracle
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Dict, List, Optional, Tuple

from pydantic import BaseModel

from .domain import DomainSpec
from .errors import ConfigError
from .spl import SplPolicyModel
from .wpdl import WorkflowModel

SCHEMA_VERSION = 1


class VerdictKind(str, Enum):
    INCONSISTENCY_FOUND = "inconsistency_found"
    NO_INCONSISTENCY = "no_inconsistency"
    ERROR = "error"


class SearchStatus(str, Enum):
    EXHAUSTED = "exhausted"
    WITNESS_FOUND = "witness_found"
    BUDGET_LIMITED = "budget_limited"
    ABORTED = "aborted"


class Witness(BaseModel):
    event: Optional[str] = None
    trace: Dict[str, str] = {}


class Verdict(BaseModel):
    kind: VerdictKind
    search: SearchStatus = SearchStatus.ABORTED
    witness: Optional[Witness] = None
    diagnostic: Optional[str] = None

    @classmethod
    def inconsistency(cls) -> "Verdict":
        return cls(kind=VerdictKind.INCONSISTENCY_FOUND, search=SearchStatus.EXHAUSTED)

    @classmethod
    def consistent(cls, witness: Optional[Witness] = None) -> "Verdict":
        return cls(kind=VerdictKind.NO_INCONSISTENCY, search=SearchStatus.WITNESS_FOUND, witness=witness)

    @classmethod
    def error(cls, diagnostic: str, search: SearchStatus = SearchStatus.ABORTED) -> "Verdict":
        return cls(kind=VerdictKind.ERROR, search=search, diagnostic=diagnostic)


class ReportStatistics(BaseModel):
    firings: int = 0
    choice_points: int = 0
    backtracks: int = 0
    elapsed: float = 0.0


class InconsistencyReport(BaseModel):
    schema_version: int = SCHEMA_VERSION
    goal: str
    policies: List[str]
    workflow: Optional[str] = None
    domain: str
    assumption: Optional[str] = None
    verdict: Verdict
    statistics: ReportStatistics = ReportStatistics()


# ---------------------------------------------------------------------------
# Goal requests


class GoalKind(str, Enum):
    INAPPLICABILITY = "inapplicability"
    MONOTONIC_DENY = "monotonic-deny"
    MONOTONIC_ALLOW = "monotonic-allow"
    REDUNDANCY = "redundancy"
    WF_CONSISTENCY = "wf-consistency"


@dataclass(frozen=True)
class GoalRequest:
    kind: GoalKind
    target: Optional[str] = None

    @classmethod
    def parse(cls, selector: str) -> "GoalRequest":
        """Read `inapplicability`, `redundancy=PATH`, ..."""
        name, _, target = selector.partition("=")
        try:
            kind = GoalKind(name.strip())
        except ValueError:
            raise ConfigError(f"unknown goal {name!r}") from None
        if kind is GoalKind.REDUNDANCY and not target:
            raise ConfigError("redundancy goal needs a rule name or path, as in redundancy=query.left")
        if kind is not GoalKind.REDUNDANCY and target:
            raise ConfigError(f"goal {name} takes no argument")
        return cls(kind, target or None)

    @property
    def label(self) -> str:
        return f"{self.kind.value}={self.target}" if self.target else self.kind.value


@dataclass(frozen=True)
class VerificationInputs:
    """Parsed inputs shared by every goal of one run"""
    policies: Tuple[SplPolicyModel, ...]
    domain: DomainSpec
    workflow: Optional[WorkflowModel] = None
    assumption: str = "close"
    skolemize: bool = False


def split_target(inputs: VerificationInputs, target: str) -> Tuple[int, str]:
    """`Policy:path` picks a policy by name; a bare path addresses the first policy"""
    if not inputs.policies:
        raise ConfigError("redundancy goal needs a policy")
    name, sep, path = target.partition(":")
    if not sep:
        return 0, target
    for index, model in enumerate(inputs.policies):
        if model.name == name:
            return index, path
    raise ConfigError(f"redundancy target names unknown policy {name}")
