"""
Pydantic models for cost-model results.
"""

from typing import Dict, Optional

from pydantic import BaseModel, ConfigDict, Field
from pydantic.alias_generators import to_camel


class ProcessMetrics(BaseModel):
    """Process-level cost figures. throughput None means unknown."""
    model_config = ConfigDict(frozen=True)

    complexity: int = Field(..., ge=0, description="Pattern node count")
    latency_ms: float = Field(0.0, ge=0.0, description="Critical Start->End path latency")
    throughput_msg_per_s: Optional[float] = Field(None, description="Bottleneck throughput")
    per_node_utilization: Optional[Dict[str, float]] = Field(
        None, description="Process throughput over node effective throughput"
    )

    def throughput_text(self) -> str:
        if self.throughput_msg_per_s is None:
            return "unknown"
        return f"{self.throughput_msg_per_s:g}"


class EffectEstimate(BaseModel):
    """Predicted effect of one rule application."""
    model_config = ConfigDict(frozen=True, alias_generator=to_camel, populate_by_name=True)

    delta_complexity: int = 0
    delta_latency_ms: float = 0.0
    delta_throughput_factor: Optional[float] = Field(None, description="post/pre throughput, None if unknown")
    notes: str = ""
