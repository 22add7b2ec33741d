"""
Pydantic models for optimization reports.

Reports serialize with camelCase aliases.
"""

from typing import List, Optional

from pydantic import BaseModel, ConfigDict, Field
from pydantic.alias_generators import to_camel

from eipopt.models.diagnostics import Diagnostic
from eipopt.models.metrics import EffectEstimate, ProcessMetrics


class _ReportModel(BaseModel):
    model_config = ConfigDict(frozen=True, alias_generator=to_camel, populate_by_name=True)


class AppliedStep(_ReportModel):
    """One rule application."""
    index: int = Field(..., ge=1)
    rule: str
    strategy: str
    fingerprint: str
    nodes: List[str] = Field(default_factory=list, description="Host ids of the match image")
    created: List[str] = Field(default_factory=list)
    deleted: List[str] = Field(default_factory=list)
    complexity_delta: int = Field(0, description="Change in model complexity")
    node_count_delta: int = Field(0, description="Change in node count")
    stage: Optional[int] = None
    effect: Optional[EffectEstimate] = None


class StageReport(_ReportModel):
    """Boundary record of one stage execution."""
    stage: int
    name: str
    rules: List[str] = Field(default_factory=list)
    first_step: int = 0
    step_count: int = 0
    converged: bool = True


class OptimizationReport(_ReportModel):
    """Full record of an optimize() run."""
    steps: List[AppliedStep] = Field(default_factory=list)
    stages: List[StageReport] = Field(default_factory=list)
    metrics_before: ProcessMetrics
    metrics_after: ProcessMetrics
    converged: bool = True
    diagnostics: List[Diagnostic] = Field(default_factory=list)

    def to_json_dict(self) -> dict:
        """Report document with the flat camelCase metric fields."""
        return {
            "complexityBefore": self.metrics_before.complexity,
            "complexityAfter": self.metrics_after.complexity,
            "latencyMsBefore": self.metrics_before.latency_ms,
            "latencyMsAfter": self.metrics_after.latency_ms,
            "throughputBefore": self.metrics_before.throughput_msg_per_s,
            "throughputAfter": self.metrics_after.throughput_msg_per_s,
            "converged": self.converged,
            "stages": [s.model_dump(mode="json", by_alias=True) for s in self.stages],
            "steps": [s.model_dump(mode="json", by_alias=True) for s in self.steps],
            "diagnostics": [d.model_dump(mode="json") for d in self.diagnostics],
        }
