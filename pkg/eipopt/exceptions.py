"""
Custom exceptions for the EIP optimizer.
"""

from typing import Optional


class EipOptError(Exception):
    """Base exception for all optimizer errors."""
    pass


class GraphError(EipOptError):
    """Structural problem with a pattern graph."""
    pass


class NodeNotFoundError(GraphError):
    """Referenced node id does not exist in the graph."""

    def __init__(self, node_id: str):
        super().__init__(f"no such node: {node_id}")
        self.node_id = node_id


class CyclicGraphError(GraphError):
    """Latency and throughput are only defined on acyclic graphs."""

    def __init__(self, message: str = "latency undefined on cyclic graph"):
        super().__init__(message)


class SchemaError(EipOptError):
    """Process-JSON document violates the schema."""

    def __init__(self, message: str, path: str = "$", node_id: Optional[str] = None):
        super().__init__(f"{path}: {message}")
        self.path = path
        self.node_id = node_id


class RuleConfigurationError(EipOptError):
    """Rule is misconfigured (unknown side-condition, bad parameter)."""
    pass


class RewriteError(EipOptError):
    """A rule application would violate the gluing conditions."""
    pass


class StaleMatchError(RewriteError):
    """Match was computed against a different graph revision."""

    def __init__(self, expected: str, actual: str):
        super().__init__(
            f"stale match: found on revision {expected[:12]}, applied to {actual[:12]}"
        )
        self.expected = expected
        self.actual = actual
