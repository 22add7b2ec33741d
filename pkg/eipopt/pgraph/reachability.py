"""
Forward and backward reachability over process graphs.
"""

from typing import Iterable, Set

import networkx as nx

from eipopt.models.pattern_graph import PatternGraph, PatternKind


def reachable_set(graph: PatternGraph, start: str) -> Set[str]:
    """
    Forward-reachability closure of start, including start.

    Raises:
        NodeNotFoundError: If start is not a node of graph.
    """
    graph.node(start)
    return nx.descendants(graph.to_networkx(), start) | {start}


def reverse_reachable_set(graph: PatternGraph, target: str) -> Set[str]:
    """Nodes from which target is reachable, including target."""
    graph.node(target)
    return nx.ancestors(graph.to_networkx(), target) | {target}


def live_nodes(graph: PatternGraph) -> Set[str]:
    """Nodes lying on some Start->End path."""
    return graph.memo("live", _live)


def _live(graph: PatternGraph) -> Set[str]:
    view = graph.to_networkx()
    from_start = _closure(view, _ids(graph, PatternKind.START_EVENT), nx.descendants)
    to_end = _closure(view, _ids(graph, PatternKind.END_EVENT), nx.ancestors)
    return from_start & to_end


def end_reachable(graph: PatternGraph) -> Set[str]:
    """Nodes from which some EndEvent is reachable."""
    return graph.memo("end-reachable", _end_reachable)


def _end_reachable(graph: PatternGraph) -> Set[str]:
    return _closure(graph.to_networkx(), _ids(graph, PatternKind.END_EVENT), nx.ancestors)


def _ids(graph: PatternGraph, kind: PatternKind) -> Iterable[str]:
    return [node.id for node in graph.nodes_of_kind(kind)]


def _closure(view: nx.DiGraph, roots: Iterable[str], step) -> Set[str]:
    result: Set[str] = set()
    for root in roots:
        result |= step(view, root) | {root}
    return result
