"""
Cloud binders.

A binder enumerates host subgraphs for a cloud parameter, given the partial
match built so far, and may bind the L nodes the cloud determines. Binders
yield (ordered node ids, {L name: host id}) pairs; the matcher checks
disjointness, size, connectivity, boundary attachment and convexity.
"""

from typing import Callable, Dict, Iterable, Iterator, List, Optional, Set, Tuple

import networkx as nx

from eipopt.engine.conditions import MatchContext
from eipopt.engine.rule import CloudParam
from eipopt.exceptions import RuleConfigurationError
from eipopt.models.pattern_graph import PatternGraph, PatternKind, PatternNode
from eipopt.pgraph.reachability import end_reachable

Candidate = Tuple[Tuple[str, ...], Dict[str, str]]
CloudBinder = Callable[[MatchContext, CloudParam], Iterable[Candidate]]

CLOUD_BINDERS: Dict[str, CloudBinder] = {}


def cloud_binder(name: str) -> Callable[[CloudBinder], CloudBinder]:
    """Register a binder under name."""
    def register(fn: CloudBinder) -> CloudBinder:
        CLOUD_BINDERS[name] = fn
        return fn
    return register


def get_binder(name: str) -> CloudBinder:
    try:
        return CLOUD_BINDERS[name]
    except KeyError:
        raise RuleConfigurationError(f"unknown cloud binder: {name}") from None


# ============================================================================
# Chain Helpers
# ============================================================================

def is_link(graph: PatternGraph, node: PatternNode) -> bool:
    """Pattern node with channel cardinality 1:1."""
    return node.is_pattern and graph.in_degree(node.id) == 1 and graph.out_degree(node.id) == 1


def walk_chain(
    graph: PatternGraph,
    first: str,
    member: Callable[[PatternNode], bool],
    limit: int,
    forward: bool = True,
) -> List[str]:
    """Follow 1:1 members from first (inclusive) forward or backward."""
    chain: List[str] = []
    current: Optional[str] = first
    while current is not None and len(chain) < limit and current not in chain:
        node = graph.node(current)
        if not (is_link(graph, node) and member(node)):
            break
        chain.append(current)
        nxt = graph.successors(current) if forward else graph.predecessors(current)
        current = nxt[0] if len(nxt) == 1 else None
    return chain


def maximal_runs(
    graph: PatternGraph,
    member: Callable[[PatternNode], bool],
) -> Iterator[Tuple[Tuple[str, ...], str, str]]:
    """
    Maximal chains of adjacent 1:1 member nodes.

    Yields (run, predecessor, successor) in host node order.
    """
    def linked(node_id: str) -> bool:
        node = graph.node(node_id)
        return is_link(graph, node) and member(node)

    visited: Set[str] = set()
    for node in graph.iter_nodes():
        if node.id in visited or not linked(node.id):
            continue
        head = node.id
        while True:
            (previous,) = graph.predecessors(head)
            if previous in visited or previous == node.id or not linked(previous):
                break
            head = previous
        run: List[str] = []
        current = head
        while current not in visited and linked(current):
            visited.add(current)
            run.append(current)
            (current,) = graph.successors(current)
        (predecessor,) = graph.predecessors(run[0])
        (successor,) = graph.successors(run[-1])
        yield tuple(run), predecessor, successor


def run_binder(member: Callable[[MatchContext, PatternNode], bool]) -> CloudBinder:
    """Binder over maximal runs; boundary = (predecessor, successor), both determined."""
    def bind(ctx: MatchContext, cloud: CloudParam) -> Iterator[Candidate]:
        before, after = cloud.boundary
        for run, predecessor, successor in maximal_runs(ctx.host, lambda n: member(ctx, n)):
            yield run, {before: predecessor, after: successor}
    return bind


# ============================================================================
# Generic Binders
# ============================================================================

@cloud_binder("branch")
def bind_branch(ctx: MatchContext, cloud: CloudParam) -> Iterator[Candidate]:
    """
    One branch of a fork region: everything reachable from one fork successor
    up to (excluding) the join. boundary = (fork, join); the join may be
    determined here or already bound.
    """
    fork_name, join_name = cloud.boundary
    fork = ctx.node_map[fork_name]
    join_kinds = set(cloud.options.get("join_kinds", [PatternKind.JOIN_ROUTER]))
    bound_join = ctx.node_map.get(join_name)
    view = ctx.host.to_networkx()

    for start in ctx.host.successors(fork):
        if bound_join is not None:
            candidates = [bound_join]
        else:
            candidates = [
                node_id for node_id in nx.bfs_tree(view, start)
                if ctx.host.node(node_id).kind in join_kinds and node_id != start
            ]
        for join in candidates:
            region = _region_between(ctx.host, start, fork, join)
            if region is None:
                continue
            yield region, ({} if bound_join is not None else {join_name: join})


def _region_between(graph: PatternGraph, start: str, fork: str, join: str) -> Optional[Tuple[str, ...]]:
    if start in (fork, join):
        return None
    view = nx.restricted_view(graph.to_networkx(), [join], [])
    order = list(nx.bfs_tree(view, start))
    seen = set(order)
    if fork in seen:
        return None
    for node_id in order:
        if graph.node(node_id).kind in (PatternKind.START_EVENT, PatternKind.END_EVENT):
            return None
        if any(p not in seen and p != fork for p in graph.predecessors(node_id)):
            return None
    if not any(join in graph.successors(node_id) for node_id in order):
        return None
    return tuple(order)


@cloud_binder("chain-prefix")
def bind_chain_prefix(ctx: MatchContext, cloud: CloudParam) -> Iterator[Candidate]:
    """
    Every prefix of a 1:1 chain starting at a successor of boundary[0];
    determines boundary[1] as the node following the prefix.
    """
    anchor_name, next_name = cloud.boundary
    anchor = ctx.node_map[anchor_name]
    for start in ctx.host.successors(anchor):
        chain = walk_chain(ctx.host, start, lambda n: True, ctx.params.cloud_size_cap)
        for length in range(1, len(chain) + 1):
            prefix = tuple(chain[:length])
            (following,) = ctx.host.successors(prefix[-1])
            yield prefix, {next_name: following}


@cloud_binder("dead-region")
def bind_dead_region(ctx: MatchContext, cloud: CloudParam) -> Iterator[Candidate]:
    """Successor of boundary[0] from which no EndEvent is reachable, with all its descendants."""
    (anchor_name,) = cloud.boundary
    anchor = ctx.node_map[anchor_name]
    live = end_reachable(ctx.host)
    view = ctx.host.to_networkx()
    for start in ctx.host.successors(anchor):
        if start in live:
            continue
        region = nx.descendants(view, start) | {start}
        if anchor in region:
            continue
        sub = view.subgraph(region)
        if nx.is_directed_acyclic_graph(sub):
            ordered = tuple(nx.lexicographical_topological_sort(sub))
        else:
            ordered = tuple(nx.bfs_tree(sub, start))
        yield ordered, {}
