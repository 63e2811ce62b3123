"""
Error types for the policy consistency verifier
"""

from typing import Optional


class PcvError(Exception):
    """Base class for every verifier error"""


class ProgramError(PcvError):
    """Malformed rule program or illegal engine usage"""


class BudgetExhausted(PcvError):
    """The step budget ran out before solving finished"""

    def __init__(self, firings: int):
        super().__init__(f"step budget exhausted after {firings} rule firings")
        self.firings = firings


class EvaluationError(PcvError):
    """A direct evaluation met a non-ground or unknown expression"""


class OracleError(PcvError):
    """The brute-force oracle cannot decide the requested goal"""


class ConfigError(PcvError):
    """Invalid run configuration"""


class SourceError(PcvError):
    """An input file problem with an optional position"""

    def __init__(self, message: str, path: Optional[str] = None,
                 line: Optional[int] = None, column: Optional[int] = None):
        self.message = message
        self.path = path
        self.line = line
        self.column = column
        super().__init__(self.describe())

    def describe(self) -> str:
        location = self.path or "<input>"
        if self.line is not None:
            location += f":{self.line}"
            if self.column is not None:
                location += f":{self.column}"
        return f"{location}: {self.message}"


class SplSyntaxError(SourceError):
    pass


class DuplicateRuleName(SourceError):
    pass


class MissingQueryRule(SourceError):
    pass


class UnboundSet(SourceError):
    pass


class CyclicRuleReference(SourceError):
    pass


class UnsupportedExpression(SourceError):
    pass


class WorkflowSyntaxError(SourceError):
    pass


class MissingStartActivity(SourceError):
    pass


class DanglingReference(SourceError):
    pass


class CyclicWorkflow(SourceError):
    pass


class LoopActivityUnsupported(SourceError):
    pass


class DomainError(SourceError):
    pass


class UnknownRuleTarget(SourceError):
    pass
