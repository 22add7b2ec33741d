"""
Match enumeration for rewrite rules.

Backtracking search over the rule's L in its declared search order:
concrete nodes are extended from already-bound neighbours, clouds are bound
by their registered binders. Every candidate is checked for injectivity,
kind agreement, edge presence, cloud convexity and attachment, side-
conditions and the dangling condition. Results are sorted by fingerprint.
"""

import logging
from typing import Dict, FrozenSet, Iterator, List, Optional, Set, Tuple

import networkx as nx

from eipopt.engine import conditions
from eipopt.engine.clouds import get_binder
from eipopt.engine.conditions import MatchContext
from eipopt.engine.rule import (
    CloudBinding,
    CloudParam,
    EdgePattern,
    LeftSide,
    Match,
    NodePattern,
    RewriteRule,
)
from eipopt.models.optimizer import RuleParameters
from eipopt.models.pattern_graph import PatternGraph

logger = logging.getLogger(__name__)

EdgeKey = Tuple[str, str, Optional[str]]


def find_matches(
    rule: RewriteRule,
    graph: PatternGraph,
    params: Optional[RuleParameters] = None,
) -> List[Match]:
    """
    Find all matches of rule in graph.

    Args:
        rule: Rule to match.
        graph: Host graph.
        params: Thresholds for guards and binders; defaults from settings.

    Returns:
        Matches sorted by fingerprint, without duplicates.

    Raises:
        RuleConfigurationError: Unknown side-condition or binder identifier.
    """
    params = params or RuleParameters.from_settings()
    found: Dict[str, Match] = {}
    for left in rule.left_sides(graph, params):
        left.check_well_formed(rule.name)
        _resolve_identifiers(left)
        searcher = _Search(rule, left, graph, params)
        for match in searcher.run():
            found.setdefault(match.fingerprint, match)
    matches = [found[key] for key in sorted(found)]
    logger.debug(f"{rule.name}: {len(matches)} matches")
    return matches


def _resolve_identifiers(left: LeftSide) -> None:
    for expression in left.guards:
        conditions.resolve(expression)
    for pattern in left.nodes:
        for expression in pattern.guards:
            conditions.resolve(expression)
    for cloud in left.clouds:
        get_binder(cloud.binder)
        for expression in cloud.side_conditions:
            conditions.resolve(expression)


class _Search:
    """Backtracking state for one left side."""

    def __init__(self, rule: RewriteRule, left: LeftSide, host: PatternGraph, params: RuleParameters):
        self.rule = rule
        self.left = left
        self.host = host
        self.params = params
        self.order = left.search_order()
        self.ctx = MatchContext(host, params, left.params)
        self.used: Set[str] = set()
        self.bound_names: Set[str] = set()

    # ------------------------------------------------------------------

    def run(self) -> Iterator[Match]:
        if not self.host.nodes:
            return
        yield from self._extend(0)

    def _extend(self, position: int) -> Iterator[Match]:
        if position == len(self.order):
            match = self._complete()
            if match is not None:
                yield match
            return
        name = self.order[position]
        pattern = self.left.node_pattern(name)
        if pattern is not None:
            yield from self._extend_node(position, pattern)
        else:
            cloud = self.left.cloud_param(name)
            yield from self._extend_cloud(position, cloud)

    def _extend_node(self, position: int, pattern: NodePattern) -> Iterator[Match]:
        if pattern.name in self.ctx.node_map:
            if self._node_ok(pattern, self.ctx.node_map[pattern.name]):
                yield from self._extend(position + 1)
            return
        for candidate in self._candidates(pattern.name):
            if candidate in self.used or not self._node_ok(pattern, candidate):
                continue
            self._bind(pattern.name, candidate)
            yield from self._extend(position + 1)
            self._unbind(pattern.name, candidate)

    def _extend_cloud(self, position: int, cloud: CloudParam) -> Iterator[Match]:
        binder = get_binder(cloud.binder)
        for nodes, determined in list(binder(self.ctx, cloud)):
            binding = self._admit_cloud(cloud, nodes, determined)
            if binding is None:
                continue
            newly = [name for name in determined if name not in self.ctx.node_map]
            for name in newly:
                self._bind(name, determined[name])
            self.ctx.bindings[cloud.name] = binding
            self.used.update(nodes)
            if self._cloud_conditions_hold(cloud, nodes) and self._determined_ok(newly):
                yield from self._extend(position + 1)
            self.used.difference_update(nodes)
            del self.ctx.bindings[cloud.name]
            for name in newly:
                self._unbind(name, determined[name])

    # ------------------------------------------------------------------
    # Node checks
    # ------------------------------------------------------------------

    def _candidates(self, name: str) -> List[str]:
        pools: List[Set[str]] = []
        for edge in self.left.edges:
            if edge.source == name and edge.target in self.ctx.node_map:
                pools.append(set(self.host.predecessors(self.ctx.node_map[edge.target])))
            elif edge.target == name and edge.source in self.ctx.node_map:
                pools.append(set(self.host.successors(self.ctx.node_map[edge.source])))
        if not pools:
            return list(self.host.nodes)
        allowed = set.intersection(*pools)
        return [node_id for node_id in self.host.nodes if node_id in allowed]

    def _node_ok(self, pattern: NodePattern, host_id: str) -> bool:
        node = self.host.node(host_id)
        if node.kind is None:
            return False
        if pattern.kinds is not None and node.kind not in pattern.kinds:
            return False
        if not self._edges_ok(pattern.name, host_id):
            return False
        if pattern.group is not None and not self._group_order_ok(pattern, host_id):
            return False
        self.ctx.node_map[pattern.name] = host_id
        try:
            return all(conditions.holds(g, self.ctx, [node]) for g in pattern.guards)
        finally:
            if pattern.name not in self.bound_names:
                del self.ctx.node_map[pattern.name]

    def _edges_ok(self, name: str, host_id: str) -> bool:
        for edge in self.left.edges:
            if edge.source == name and edge.target in self.ctx.node_map:
                if not self._edge_present(edge, host_id, self.ctx.node_map[edge.target]):
                    return False
            if edge.target == name and edge.source in self.ctx.node_map:
                if not self._edge_present(edge, self.ctx.node_map[edge.source], host_id):
                    return False
        return True

    def _edge_present(self, pattern: EdgePattern, source: str, target: str) -> bool:
        return any(pattern.accepts(e) for e in self.host.edges_between(source, target))

    def _group_order_ok(self, pattern: NodePattern, host_id: str) -> bool:
        for other in self.left.nodes:
            if other.name == pattern.name:
                break
            if other.group == pattern.group and other.name in self.ctx.node_map:
                if not self.ctx.node_map[other.name] < host_id:
                    return False
        return True

    def _determined_ok(self, names: List[str]) -> bool:
        for name in names:
            pattern = self.left.node_pattern(name)
            if pattern is not None and not self._node_ok(pattern, self.ctx.node_map[name]):
                return False
        return True

    def _bind(self, name: str, host_id: str) -> None:
        self.ctx.node_map[name] = host_id
        self.bound_names.add(name)
        self.used.add(host_id)

    def _unbind(self, name: str, host_id: str) -> None:
        del self.ctx.node_map[name]
        self.bound_names.discard(name)
        self.used.discard(host_id)

    # ------------------------------------------------------------------
    # Cloud checks
    # ------------------------------------------------------------------

    def _admit_cloud(
        self, cloud: CloudParam, nodes: Tuple[str, ...], determined: Dict[str, str]
    ) -> Optional[CloudBinding]:
        members = set(nodes)
        if not nodes or len(members) != len(nodes):
            return None
        if len(nodes) > self.params.cloud_size_cap:
            return None
        if members & self.used:
            return None
        determined_ids = list(determined.values())
        if len(set(determined_ids)) != len(determined_ids):
            return None
        for name, host_id in determined.items():
            if name in self.ctx.node_map:
                if self.ctx.node_map[name] != host_id:
                    return None
            elif host_id in self.used or host_id in members:
                return None
        if cloud.group is not None and not self._cloud_group_ok(cloud, nodes):
            return None

        attachments = set()
        for name in cloud.boundary:
            host_id = self.ctx.node_map.get(name, determined.get(name))
            if host_id is None:
                return None
            attachments.add(host_id)

        entries: List[str] = []
        exits: List[str] = []
        for node_id in nodes:
            outside_in = [p for p in self.host.predecessors(node_id) if p not in members]
            outside_out = [s for s in self.host.successors(node_id) if s not in members]
            if any(p not in attachments for p in outside_in + outside_out):
                return None
            if outside_in:
                entries.append(node_id)
            if outside_out:
                exits.append(node_id)

        if not self._connected(members) or not self._convex(members):
            return None
        return CloudBinding(tuple(nodes), tuple(entries), tuple(exits))

    def _cloud_group_ok(self, cloud: CloudParam, nodes: Tuple[str, ...]) -> bool:
        for other in self.left.clouds:
            if other.name == cloud.name:
                break
            if other.group == cloud.group and other.name in self.ctx.bindings:
                if not self.ctx.bindings[other.name].nodes[0] < nodes[0]:
                    return False
        return True

    def _connected(self, members: Set[str]) -> bool:
        return nx.is_weakly_connected(self.host.to_networkx().subgraph(members))

    def _convex(self, members: Set[str]) -> bool:
        """No path leaves the members and comes back."""
        view = self.host.to_networkx()
        below = set().union(*(nx.descendants(view, m) for m in members)) - members
        above = set().union(*(nx.ancestors(view, m) for m in members)) - members
        return not below & above

    def _cloud_conditions_hold(self, cloud: CloudParam, nodes: Tuple[str, ...]) -> bool:
        bound = [self.host.node(node_id) for node_id in nodes]
        return all(conditions.holds(expr, self.ctx, bound) for expr in cloud.side_conditions)

    # ------------------------------------------------------------------
    # Completion
    # ------------------------------------------------------------------

    def _complete(self) -> Optional[Match]:
        for edge in self.left.edges:
            source = self.ctx.node_map.get(edge.source)
            target = self.ctx.node_map.get(edge.target)
            if source is None or target is None or not self._edge_present(edge, source, target):
                return None
        if not all(conditions.holds(expr, self.ctx, []) for expr in self.left.guards):
            return None
        covered = self._covered_edges()
        match = Match(
            self.rule, self.left, self.host, self.ctx.node_map, self.ctx.bindings, covered
        )
        if not self._dangling_free(match):
            logger.debug(f"{self.rule.name}: rejected {match.fingerprint[:10]} (dangling condition)")
            return None
        return match

    def _covered_edges(self) -> FrozenSet[EdgeKey]:
        covered: Set[EdgeKey] = set()
        for edge in self.left.edges:
            source = self.ctx.node_map[edge.source]
            target = self.ctx.node_map[edge.target]
            for host_edge in self.host.edges_between(source, target):
                if edge.accepts(host_edge):
                    covered.add(host_edge.key)
        for binding in self.ctx.bindings.values():
            for node_id in binding.nodes:
                covered.update(e.key for e in self.host.in_edges(node_id))
                covered.update(e.key for e in self.host.out_edges(node_id))
        return frozenset(covered)

    def _dangling_free(self, match: Match) -> bool:
        for node_id in match.deleted_nodes:
            incident = self.host.in_edges(node_id) + self.host.out_edges(node_id)
            if any(edge.key not in match.covered_edges for edge in incident):
                return False
        return True
