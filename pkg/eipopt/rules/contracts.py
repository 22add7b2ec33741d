"""
Message-contract helpers.

Contracts follow full-message semantics: out_elements is the element set on
the outgoing message, in_elements the set the node requires. A node writes
out - in unless its configuration lists "writes" explicitly; read-only
nodes write nothing.
"""

from typing import FrozenSet, Iterable, List

from eipopt.models.diagnostics import Diagnostic, DiagnosticCode, Severity
from eipopt.models.pattern_graph import JOIN_KINDS, PatternGraph, PatternNode


def reads(node: PatternNode) -> FrozenSet[str]:
    return node.contract.in_elements


def writes(node: PatternNode) -> FrozenSet[str]:
    if node.properties.read_only:
        return frozenset()
    explicit = node.config.get("writes")
    if explicit is not None:
        return frozenset(name for name in explicit.split(",") if name)
    return node.contract.out_elements - node.contract.in_elements


def writes_all(nodes: Iterable[PatternNode]) -> FrozenSet[str]:
    result: FrozenSet[str] = frozenset()
    for node in nodes:
        result |= writes(node)
    return result


def available_for(graph: PatternGraph, node_id: str) -> List[FrozenSet[str]]:
    """
    Element sets offered to node_id, one per incoming edge, or a single
    union for join kinds. Undeclared predecessors contribute nothing.
    """
    node = graph.node(node_id)
    offers = [
        graph.node(source).contract.out_elements
        for source in graph.predecessors(node_id)
        if source in graph and graph.node(source).contract.declared
    ]
    if node.kind in JOIN_KINDS and offers:
        union: FrozenSet[str] = frozenset()
        for offer in offers:
            union |= offer
        return [union]
    return offers


def contract_violations(graph: PatternGraph) -> List[Diagnostic]:
    """Edges whose target requires elements its source does not provide."""
    found: List[Diagnostic] = []
    for node in graph.iter_nodes():
        required = node.contract.in_elements
        if not required:
            continue
        for offer in available_for(graph, node.id):
            missing = required - offer
            if missing:
                found.append(Diagnostic(
                    code=DiagnosticCode.CONTRACT_UNSATISFIED,
                    severity=Severity.WARNING,
                    message=f"missing elements {sorted(missing)}",
                    node_id=node.id,
                ))
                break
    return found
