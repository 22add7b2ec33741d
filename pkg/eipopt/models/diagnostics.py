"""
Pydantic models for validation diagnostics.
"""

from enum import Enum
from typing import List, Optional

from pydantic import BaseModel, ConfigDict, Field


class Severity(str, Enum):
    """Diagnostic severity."""
    ERROR = "error"
    WARNING = "warning"


class DiagnosticCode(str, Enum):
    """Structural findings reported by validate()."""
    MISSING_START = "missing-start-event"
    MISSING_END = "missing-end-event"
    DANGLING_EDGE = "dangling-edge"
    SELF_LOOP = "self-loop"
    DUPLICATE_EDGE = "duplicate-edge"
    START_HAS_INPUT = "start-has-input"
    END_HAS_OUTPUT = "end-has-output"
    UNLABELLED_NODE = "unlabelled-node"
    DEAD_PATH = "dead-path"
    CONTRACT_UNSATISFIED = "contract-unsatisfied"
    NO_ALTERNATIVE_PATH = "no-alternative-path"


class Diagnostic(BaseModel):
    """A single validation finding."""
    model_config = ConfigDict(frozen=True)

    code: DiagnosticCode = Field(..., description="Finding category")
    severity: Severity = Field(Severity.ERROR)
    message: str = Field(..., description="Human-readable description")
    node_id: Optional[str] = Field(None, description="Offending node, if any")

    def __str__(self) -> str:
        where = f" [{self.node_id}]" if self.node_id else ""
        return f"{self.severity.value}: {self.code.value}{where}: {self.message}"


def has_errors(diagnostics: List[Diagnostic]) -> bool:
    """True when any diagnostic is an error (warnings keep a graph clean)."""
    return any(d.severity == Severity.ERROR for d in diagnostics)
