"""
Double-pushout application with relabelling.

apply() deletes the images of L minus K, relabels K nodes through an
unlabelled intermediate graph, and glues in the fresh nodes, cloud copies and
edges of the rule's right side. Host nodes outside the match are untouched.
"""

import hashlib
import logging
from typing import Dict, List, Optional, Set, Tuple

from eipopt.engine.rule import CloudUse, Match, Ref, RightSide
from eipopt.exceptions import RewriteError, StaleMatchError
from eipopt.models.pattern_graph import Edge, PatternGraph, PatternNode
from eipopt.models.diagnostics import has_errors

logger = logging.getLogger(__name__)


def fresh_id(rule_name: str, fingerprint: str, role: str) -> str:
    """Content-addressed id of a node created by a rule application."""
    digest = hashlib.sha1(f"{fingerprint}:{role}".encode("utf-8")).hexdigest()
    return f"{rule_name}-{role}-{digest[:8]}"


def copy_id(original: str, fingerprint: str, copy: str) -> str:
    digest = hashlib.sha1(f"{fingerprint}:{copy}:{original}".encode("utf-8")).hexdigest()
    return f"{original}-{copy}-{digest[:6]}"


def apply(match: Match, graph: Optional[PatternGraph] = None, test_mode: bool = False) -> PatternGraph:
    """
    Apply a match and return the rewritten graph.

    Args:
        match: Match from find_matches.
        graph: Graph to rewrite; defaults to the graph the match was found in.
        test_mode: Re-validate the result and raise on structural errors.

    Returns:
        New graph value.

    Raises:
        StaleMatchError: graph is not the revision the match was found in.
        RewriteError: The right side is inconsistent with the match, or the
            result fails validation in test mode.
    """
    host = graph if graph is not None else match.host
    if host.revision != match.revision:
        raise StaleMatchError(match.revision, host.revision)

    rhs = match.rule.right(match)
    result = _Gluing(match, host, rhs).build()

    if test_mode:
        from eipopt.pgraph.validation import validate
        diagnostics = validate(result)
        if has_errors(diagnostics):
            details = "; ".join(str(d) for d in diagnostics)
            raise RewriteError(f"{match.rule.name} produced an invalid graph: {details}")
    return result


class _Gluing:
    """Builds the pushout object for one match."""

    def __init__(self, match: Match, host: PatternGraph, rhs: RightSide):
        self.match = match
        self.host = host
        self.rhs = rhs
        self.fresh_ids = {
            role: fresh_id(match.rule.name, match.fingerprint, role) for role in rhs.fresh
        }
        self.copy_ids: Dict[Tuple[str, str], Dict[str, str]] = {}

    def build(self) -> PatternGraph:
        interface = self.match.left.interface
        for name in self.rhs.relabel:
            if name not in interface or name not in self.match.node_map:
                raise RewriteError(f"{self.match.rule.name}: relabel of non-interface item {name}")
        for name in self.rhs.clouds:
            if name not in interface or name not in self.match.bindings:
                raise RewriteError(f"{self.match.rule.name}: cloud {name} is not preserved")

        deleted = set(self.match.deleted_nodes)
        removed_edges = self._removed_edges()

        # Pushout complement D: host minus L\K, K relabels pending.
        nodes: Dict[str, PatternNode] = {}
        pending = {self.match.node_map[name]: node for name, node in self.rhs.relabel.items()}
        for node_id, node in self.host.nodes.items():
            if node_id in deleted:
                continue
            nodes[node_id] = node.unlabelled() if node_id in pending else node
        edges: List[Edge] = [e for e in self.host.edges if e.key not in removed_edges]

        for host_id, replacement in pending.items():
            nodes[host_id] = replacement.model_copy(update={"id": host_id})
        for name, use in self._cloud_uses().items():
            if use.transform is not None:
                for node_id in self.match.bindings[name].nodes:
                    nodes[node_id] = use.transform(nodes[node_id]).model_copy(update={"id": node_id})

        for role, template in self.rhs.fresh.items():
            nodes[self.fresh_ids[role]] = template.model_copy(update={"id": self.fresh_ids[role]})
        for name, use in self._cloud_uses().items():
            for copy, transform in use.copies.items():
                edges.extend(self._add_copy(nodes, name, copy, transform))

        for source, target, condition in self.rhs.edges:
            for source_id in self._resolve(source):
                for target_id in self._resolve(target):
                    edges.append(Edge(source=source_id, target=target_id, condition=condition))

        result = PatternGraph(nodes=nodes, edges=tuple(_dedupe(edges)))
        logger.debug(
            f"{self.match.rule.name}: -{len(deleted)} +{len(self.fresh_ids)} nodes "
            f"({len(result)} total)"
        )
        return result

    def _cloud_uses(self) -> Dict[str, CloudUse]:
        uses = {
            name: self.rhs.clouds.get(name, CloudUse())
            for name in self.match.bindings
            if name in self.match.left.interface
        }
        return uses

    def _removed_edges(self) -> Set[Tuple[str, str, Optional[str]]]:
        removed = set(self.match.covered_edges)
        for name, use in self._cloud_uses().items():
            if not use.keep_internal_edges:
                continue
            members = set(self.match.bindings[name].nodes)
            for node_id in members:
                for edge in self.host.out_edges(node_id):
                    if edge.target in members:
                        removed.discard(edge.key)
        return removed

    def _add_copy(self, nodes: Dict[str, PatternNode], cloud: str, copy: str, transform) -> List[Edge]:
        binding = self.match.bindings[cloud]
        mapping = {
            node_id: copy_id(node_id, self.match.fingerprint, copy) for node_id in binding.nodes
        }
        self.copy_ids[(cloud, copy)] = mapping
        for node_id, new_id in mapping.items():
            original = self.host.node(node_id)
            node = transform(original) if transform is not None else original
            nodes[new_id] = node.model_copy(update={"id": new_id})
        return [
            Edge(source=mapping[e.source], target=mapping[e.target], condition=e.condition)
            for node_id in binding.nodes
            for e in self.host.out_edges(node_id)
            if e.target in mapping
        ]

    def _resolve(self, ref: Ref) -> List[str]:
        if ref.kind == Ref.NODE:
            if ref.name in self.fresh_ids:
                return [self.fresh_ids[ref.name]]
            if ref.name in self.match.node_map and ref.name in self.match.left.interface:
                return [self.match.node_map[ref.name]]
            raise RewriteError(f"{self.match.rule.name}: R references unknown node {ref.name}")
        if ref.kind == Ref.HOST:
            if ref.name in self.match.deleted_nodes or ref.name not in self.host:
                raise RewriteError(f"{self.match.rule.name}: R references deleted node {ref.name}")
            return [ref.name]
        binding = self.match.bindings.get(ref.name)
        if binding is None:
            raise RewriteError(f"{self.match.rule.name}: R references unknown cloud {ref.name}")
        members = binding.entries if ref.kind == Ref.ENTRY else binding.exits
        if not members:
            members = binding.nodes[:1] if ref.kind == Ref.ENTRY else binding.nodes[-1:]
        if ref.copy is None:
            if ref.name not in self.match.left.interface:
                raise RewriteError(f"{self.match.rule.name}: cloud {ref.name} is deleted")
            return list(members)
        mapping = self.copy_ids.get((ref.name, ref.copy))
        if mapping is None:
            raise RewriteError(f"{self.match.rule.name}: unknown copy {ref.copy} of {ref.name}")
        return [mapping[node_id] for node_id in members]


def _dedupe(edges: List[Edge]) -> List[Edge]:
    seen: Set[Tuple[str, str, Optional[str]]] = set()
    unique: List[Edge] = []
    for edge in edges:
        if edge.key not in seen:
            seen.add(edge.key)
            unique.append(edge)
    return unique
