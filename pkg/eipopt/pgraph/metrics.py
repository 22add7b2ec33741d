"""
Structural metrics of process graphs.
"""

from eipopt.models.pattern_graph import PatternGraph


def model_complexity(graph: PatternGraph) -> int:
    """Count pattern nodes; events and external endpoints are excluded."""
    return sum(1 for node in graph.iter_nodes() if node.is_pattern)
