"""
Run configuration for the pcv command
Environment defaults and the validated RunConfig
"""

import logging
import os
from typing import Any, Dict, List, Optional

from dotenv import find_dotenv, load_dotenv
from pydantic import BaseModel, field_validator, model_validator

from .core import DEFAULT_BUDGET
from .verdicts import GoalKind, GoalRequest

logger = logging.getLogger(__name__)

FORMATS = ("human", "structured")
ASSUMPTIONS = ("open", "close")


def load_defaults() -> Dict[str, Any]:
    """Defaults from the environment and a .env file in the working directory"""
    load_dotenv(find_dotenv(usecwd=True))
    defaults: Dict[str, Any] = {
        "budget": DEFAULT_BUDGET,
        "output": os.getenv("PCV_FORMAT", "human"),
        "assumption": os.getenv("PCV_ASSUME", "close"),
        "log_level": os.getenv("PCV_LOG_LEVEL", "WARNING").upper(),
    }
    budget = os.getenv("PCV_BUDGET")
    if budget:
        try:
            defaults["budget"] = int(budget)
        except ValueError:
            logger.warning(f"Ignoring PCV_BUDGET={budget!r}: not an integer")
    return defaults


class RunConfig(BaseModel):
    """Everything one `pcv check` invocation needs"""
    policies: List[str] = []
    workflow: Optional[str] = None
    domain: str
    goals: List[str]
    assumption: str = "close"
    budget: int = DEFAULT_BUDGET
    output: str = "human"
    oracle_check: bool = False
    dump_rules: bool = False
    skolemize: bool = False
    log_level: str = "WARNING"
    output_file: Optional[str] = None

    @field_validator("assumption")
    @classmethod
    def check_assumption(cls, value: str) -> str:
        if value not in ASSUMPTIONS:
            raise ValueError(f"assumption must be one of {', '.join(ASSUMPTIONS)}")
        return value

    @field_validator("output")
    @classmethod
    def check_output(cls, value: str) -> str:
        if value not in FORMATS:
            raise ValueError(f"format must be one of {', '.join(FORMATS)}")
        return value

    @field_validator("budget")
    @classmethod
    def check_budget(cls, value: int) -> int:
        if value < 1:
            raise ValueError("budget must be positive")
        return value

    @model_validator(mode="after")
    def check_goals(self) -> "RunConfig":
        if not self.goals:
            raise ValueError("at least one goal is required")
        requests = [GoalRequest.parse(goal) for goal in self.goals]
        if any(r.kind is GoalKind.WF_CONSISTENCY for r in requests) and not self.workflow:
            raise ValueError("workflow goals require a workflow path")
        return self

    @property
    def requests(self) -> List[GoalRequest]:
        return [GoalRequest.parse(goal) for goal in self.goals]

    @property
    def deterministic(self) -> bool:
        return self.output == "structured"
