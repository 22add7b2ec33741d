"""
Analytic process cost model.

Latency is the critical Start->End path over node latencies. Throughput is
the minimum effective throughput of the traversed pattern nodes; a
replication group of n copies counts once with min(n * t, fork, join).
Unmeasured throughput propagates as unknown, except for the generated fork,
join and aggregator of a parallel block, which are assumed not to limit.
"""

import logging
from collections import defaultdict
from typing import Dict, List, Optional, Tuple

import networkx as nx

from eipopt.exceptions import CyclicGraphError
from eipopt.models.metrics import ProcessMetrics
from eipopt.models.pattern_graph import PatternGraph, PatternKind
from eipopt.pgraph.metrics import model_complexity
from eipopt.pgraph.reachability import live_nodes

logger = logging.getLogger(__name__)

REPLICATION_GROUP = "replicationGroup"
GROUP_ROLE = "groupRole"
BLOCK_ROLE = "blockRole"


def critical_path_latency(graph: PatternGraph) -> float:
    """
    Longest path latency, summing node latencies.

    Raises:
        CyclicGraphError: The graph has a cycle.
    """
    view = graph.to_networkx()
    if not nx.is_directed_acyclic_graph(view):
        raise CyclicGraphError()
    longest: Dict[str, float] = {}
    for node_id in nx.topological_sort(view):
        incoming = [longest[p] for p in view.predecessors(node_id)]
        longest[node_id] = graph.node(node_id).cost.latency_ms + max(incoming, default=0.0)
    ends = [node.id for node in graph.nodes_of_kind(PatternKind.END_EVENT)]
    if ends:
        return max(longest[node_id] for node_id in ends)
    return max(longest.values(), default=0.0)


def effective_throughputs(graph: PatternGraph) -> Tuple[Optional[Dict[str, float]], List[str]]:
    """
    Effective throughput per traversed pattern node.

    Returns:
        (throughputs, unmeasured ids); throughputs is None when any
        traversed node lacks a measurement.
    """
    has_events = graph.nodes_of_kind(PatternKind.START_EVENT) and graph.nodes_of_kind(PatternKind.END_EVENT)
    traversed = live_nodes(graph) if has_events else set(graph.nodes)

    groups: Dict[str, Dict[str, List[str]]] = defaultdict(lambda: defaultdict(list))
    effective: Dict[str, float] = {}
    unmeasured: List[str] = []
    for node in graph.iter_nodes():
        if node.id not in traversed or not node.is_pattern:
            continue
        group = node.config.get(REPLICATION_GROUP)
        if group is not None:
            groups[group][node.config.get(GROUP_ROLE, "member")].append(node.id)
            continue
        if node.throughput is None:
            if BLOCK_ROLE not in node.config:
                unmeasured.append(node.id)
        else:
            effective[node.id] = node.throughput

    for members in groups.values():
        values = [graph.node(node_id).throughput for node_id in members["member"]]
        if any(value is None for value in values):
            unmeasured.extend(n for n in members["member"] if graph.node(n).throughput is None)
            continue
        if not values:
            continue
        replicas = len({graph.node(n).config.get("replica", "1") for n in members["member"]})
        caps = [replicas * min(values)]
        for role in ("fork", "join"):
            caps.extend(
                graph.node(n).throughput for n in members[role] if graph.node(n).throughput is not None
            )
        bound = min(caps)
        for node_id in members["member"] + members["fork"] + members["join"]:
            effective[node_id] = bound

    if unmeasured:
        return None, sorted(unmeasured)
    return effective, []


def process_metrics(graph: PatternGraph) -> ProcessMetrics:
    """
    Compute complexity, latency and throughput of a process.

    Raises:
        CyclicGraphError: latency undefined on cyclic graph.
    """
    latency = critical_path_latency(graph)
    effective, unmeasured = effective_throughputs(graph)
    throughput: Optional[float] = None
    utilization: Optional[Dict[str, float]] = None
    if effective:
        throughput = min(effective.values())
        utilization = {node_id: throughput / value for node_id, value in sorted(effective.items())}
    elif unmeasured:
        logger.debug(f"Throughput unknown: {len(unmeasured)} unmeasured nodes")
    return ProcessMetrics(
        complexity=model_complexity(graph),
        latency_ms=latency,
        throughput_msg_per_s=throughput,
        per_node_utilization=utilization,
    )
