"""
Structural validation of process graphs.

validate() never raises; it reports every finding as a Diagnostic. Errors
make a graph ill-formed, warnings (dead paths, unsatisfied contracts) do not.
"""

import logging
from typing import List, Set

from eipopt.models.diagnostics import Diagnostic, DiagnosticCode, Severity
from eipopt.models.pattern_graph import PatternGraph, PatternKind
from eipopt.pgraph.reachability import live_nodes

logger = logging.getLogger(__name__)


def validate(graph: PatternGraph) -> List[Diagnostic]:
    """
    Check a graph for structural violations.

    Args:
        graph: Graph to check.

    Returns:
        Diagnostics in a stable order; empty when well-formed.
    """
    diagnostics: List[Diagnostic] = []
    diagnostics.extend(_check_events(graph))
    diagnostics.extend(_check_edges(graph))

    for node in graph.iter_nodes():
        if node.kind is None:
            diagnostics.append(Diagnostic(
                code=DiagnosticCode.UNLABELLED_NODE,
                message="node carries no pattern kind",
                node_id=node.id,
            ))

    if not any(d.severity == Severity.ERROR for d in diagnostics):
        diagnostics.extend(_check_dead_paths(graph))
        # local import: rules.contracts depends on the models only
        from eipopt.rules.contracts import contract_violations
        diagnostics.extend(contract_violations(graph))

    logger.debug(f"validate: {len(diagnostics)} diagnostics for {len(graph)} nodes")
    return diagnostics


def _check_events(graph: PatternGraph) -> List[Diagnostic]:
    found: List[Diagnostic] = []
    starts = graph.nodes_of_kind(PatternKind.START_EVENT)
    ends = graph.nodes_of_kind(PatternKind.END_EVENT)
    if not starts:
        found.append(Diagnostic(code=DiagnosticCode.MISSING_START, message="missing StartEvent"))
    if not ends:
        found.append(Diagnostic(code=DiagnosticCode.MISSING_END, message="missing EndEvent"))
    for start in starts:
        if graph.in_degree(start.id):
            found.append(Diagnostic(
                code=DiagnosticCode.START_HAS_INPUT,
                message="StartEvent must have in-degree 0",
                node_id=start.id,
            ))
    for end in ends:
        if graph.out_degree(end.id):
            found.append(Diagnostic(
                code=DiagnosticCode.END_HAS_OUTPUT,
                message="EndEvent must have out-degree 0",
                node_id=end.id,
            ))
    return found


def _check_edges(graph: PatternGraph) -> List[Diagnostic]:
    found: List[Diagnostic] = []
    seen: Set[tuple] = set()
    for edge in graph.edges:
        for endpoint in (edge.source, edge.target):
            if endpoint not in graph:
                found.append(Diagnostic(
                    code=DiagnosticCode.DANGLING_EDGE,
                    message=f"edge {edge.source}->{edge.target} references missing node {endpoint}",
                    node_id=endpoint,
                ))
        if edge.source == edge.target:
            found.append(Diagnostic(
                code=DiagnosticCode.SELF_LOOP,
                message=f"self-loop on {edge.source}",
                node_id=edge.source,
            ))
        if edge.key in seen:
            found.append(Diagnostic(
                code=DiagnosticCode.DUPLICATE_EDGE,
                message=f"duplicate edge {edge.source}->{edge.target}",
                node_id=edge.source,
            ))
        seen.add(edge.key)
    return found


def _check_dead_paths(graph: PatternGraph) -> List[Diagnostic]:
    live = live_nodes(graph)
    return [
        Diagnostic(
            code=DiagnosticCode.DEAD_PATH,
            severity=Severity.WARNING,
            message="node is not on any Start->End path",
            node_id=node.id,
        )
        for node in graph.iter_nodes()
        if node.id not in live
    ]
