"""
Graphviz DOT export of process graphs.
"""

import json
from typing import Dict, List

from eipopt.models.pattern_graph import (
    FORK_KINDS,
    JOIN_KINDS,
    PatternGraph,
    PatternKind,
    PatternNode,
)

_DEFAULT_NODE_ATTR = {"shape": "box", "style": "rounded", "fontname": "Helvetica"}


def _quote(text: str) -> str:
    """DOT double-quoted string; json escaping covers quotes, backslashes and newlines."""
    return json.dumps(text, ensure_ascii=False)


def _attr2str(default_attr: Dict[str, str], attr: Dict[str, str]) -> str:
    merged = dict(default_attr, **attr)
    return ", ".join(f"{name}={_quote(value)}" for name, value in merged.items())


def node_attr(node: PatternNode) -> Dict[str, str]:
    """Shape by role: events circles, endpoints plain boxes, forks and joins diamonds."""
    label = f"{node.label}\n{node.id}"
    delegated = node.config_list("delegated")
    if delegated:
        label += "\ndelegated: " + ", ".join(f"{d['kind']} {d['id']}" for d in delegated)
    attr = {"label": label}
    if node.kind in (PatternKind.START_EVENT, PatternKind.END_EVENT):
        attr.update(shape="circle", style="solid")
    elif node.kind == PatternKind.EXTERNAL_ENDPOINT:
        attr.update(shape="box", style="solid")
    elif node.kind in FORK_KINDS or node.kind in JOIN_KINDS - {PatternKind.AGGREGATOR}:
        attr.update(shape="diamond", style="solid")
    return attr


def export_dot(graph: PatternGraph, name: str = "process") -> str:
    """
    Render a graph as a DOT digraph.

    Node labels show kind and id; conditional edges carry their condition.
    """
    out: List[str] = [f"digraph {_quote(name)} {{", "  rankdir=LR;"]
    for node in graph.iter_nodes():
        out.append(f"  {_quote(node.id)} [{_attr2str(_DEFAULT_NODE_ATTR, node_attr(node))}];")
    for edge in graph.edges:
        attrs = f" [label={_quote(edge.condition)}]" if edge.condition is not None else ""
        out.append(f"  {_quote(edge.source)} -> {_quote(edge.target)}{attrs};")
    out.append("}")
    return "\n".join(out) + "\n"
