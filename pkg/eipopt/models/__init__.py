"""
Pydantic models for the EIP optimizer.
"""

from eipopt.models.pattern_graph import (
    PatternKind,
    NodeProperties,
    Contract,
    FailureStats,
    CostAnnotation,
    PatternNode,
    Edge,
    PatternGraph,
)
from eipopt.models.diagnostics import Diagnostic, DiagnosticCode, Severity
from eipopt.models.metrics import ProcessMetrics, EffectEstimate

__all__ = [
    "PatternKind",
    "NodeProperties",
    "Contract",
    "FailureStats",
    "CostAnnotation",
    "PatternNode",
    "Edge",
    "PatternGraph",
    "Diagnostic",
    "DiagnosticCode",
    "Severity",
    "ProcessMetrics",
    "EffectEstimate",
]
