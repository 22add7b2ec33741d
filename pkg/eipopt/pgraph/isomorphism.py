"""
Label- and configuration-preserving graph isomorphism.
"""

from typing import Dict, FrozenSet, Iterable, Optional

from networkx.algorithms.isomorphism import DiGraphMatcher

from eipopt.models.pattern_graph import PatternGraph


def _node_matcher(ignore_keys: FrozenSet[str]):
    def same_node(left: dict, right: dict) -> bool:
        a, b = left["node"], right["node"]
        if a.kind != b.kind or a.custom_name != b.custom_name:
            return False
        config_a = {k: v for k, v in a.config.items() if k not in ignore_keys}
        config_b = {k: v for k, v in b.config.items() if k not in ignore_keys}
        return config_a == config_b
    return same_node


def _same_edge(left: dict, right: dict) -> bool:
    return left["conditions"] == right["conditions"]


def subgraph_isomorphic(
    g1: PatternGraph,
    g2: PatternGraph,
    ignore_keys: Iterable[str] = (),
) -> Optional[Dict[str, str]]:
    """
    Find a bijection g1 -> g2 preserving edges, kinds and configuration.

    Args:
        g1: First graph.
        g2: Second graph.
        ignore_keys: Configuration keys left out of the comparison.

    Returns:
        Node-id mapping from g1 to g2, or None when not isomorphic.
    """
    if len(g1) != len(g2) or len(g1.edges) != len(g2.edges):
        return None
    matcher = DiGraphMatcher(
        g1.to_networkx(),
        g2.to_networkx(),
        node_match=_node_matcher(frozenset(ignore_keys)),
        edge_match=_same_edge,
    )
    for mapping in matcher.isomorphisms_iter():
        return dict(mapping)
    return None
