"""
Parallelization rules.

sequence-to-parallel replicates a bottleneck sub-sequence behind a balancing
fork; merge-parallel undoes a replication whose fork or join limits it.
hetero-parallel runs independent parts of a chain side by side and
hetero-merge sequentializes such a block again.
"""

import logging
from typing import Any, Dict, FrozenSet, Iterable, Iterator, List, Optional, Tuple

from eipopt.cost.bottlenecks import detect_bottlenecks, parallel_factor
from eipopt.engine.clouds import Candidate, cloud_binder, is_link, run_binder
from eipopt.engine.conditions import MatchContext, side_condition
from eipopt.engine.rule import (
    CloudParam,
    CloudUse,
    EdgePattern,
    LeftSide,
    Match,
    NodePattern,
    Ref,
    RewriteRule,
    RightSide,
)
from eipopt.exceptions import RuleConfigurationError
from eipopt.models.optimizer import RuleParameters, Strategy
from eipopt.models.pattern_graph import (
    Contract,
    CostAnnotation,
    NodeProperties,
    PatternGraph,
    PatternKind,
    PatternNode,
)
from eipopt.rules.contracts import reads, writes

logger = logging.getLogger(__name__)

REPLICATION_GROUP = "replicationGroup"
REPLICA = "replica"
PARALLEL_BLOCK = "parallelBlock"
PARALLEL_PART = "parallelPart"
BLOCK_ROLE = "blockRole"

# Nodes carrying any of these are already placed by another rewrite.
PLACEMENT_KEYS = (
    PARALLEL_BLOCK,
    REPLICATION_GROUP,
    "claimed",
    "claimRestore",
    "batchMode",
    "hoisted",
)

PARALLELIZABLE_KINDS = frozenset({
    PatternKind.CONTENT_ENRICHER,
    PatternKind.MESSAGE_TRANSLATOR,
    PatternKind.MESSAGE_ENCODER,
    PatternKind.MESSAGE_SIGNER,
    PatternKind.CUSTOM,
})


def _unplaced(node: PatternNode) -> bool:
    return not any(key in node.config for key in PLACEMENT_KEYS)


def _contract(elements: Optional[FrozenSet[str]]) -> Contract:
    if elements is None:
        return Contract()
    return Contract(in_elements=elements, out_elements=elements)


def _declared_out(node: PatternNode) -> Optional[FrozenSet[str]]:
    return node.contract.out_elements if node.contract.declared else None


# ============================================================================
# Binders
# ============================================================================

@cloud_binder("bottleneck-run")
def bind_bottleneck_run(ctx: MatchContext, cloud: CloudParam) -> Iterator[Candidate]:
    """Bottleneck sub-sequences whose replication factor equals the variant's n."""
    before, after = cloud.boundary
    for run in detect_bottlenecks(ctx.host, ctx.params, member=_unplaced):
        if not ctx.variant.get("explicit"):
            if parallel_factor(ctx.host, run, ctx.params) != ctx.variant["n"]:
                continue
        (predecessor,) = ctx.host.predecessors(run[0])
        (successor,) = ctx.host.successors(run[-1])
        yield tuple(run), {before: predecessor, after: successor}


def _parallelizable(ctx: MatchContext, node: PatternNode) -> bool:
    return (
        node.kind in PARALLELIZABLE_KINDS
        and node.properties.side_effect_free
        and node.contract.declared
        and _unplaced(node)
    )


cloud_binder("independent-run")(run_binder(_parallelizable))


@cloud_binder("parallel-group")
def bind_parallel_group(ctx: MatchContext, cloud: CloudParam) -> Iterator[Candidate]:
    """One part of a parallel block: the chain of block members behind a fork output."""
    fork_name, join_name = cloud.boundary
    fork = ctx.node(fork_name)
    block = fork.config.get(PARALLEL_BLOCK)
    for start in ctx.host.successors(fork.id):
        chain: List[str] = []
        current = start
        while current not in chain:
            node = ctx.host.node(current)
            if node.config.get(PARALLEL_BLOCK) != block or BLOCK_ROLE in node.config:
                break
            if not is_link(ctx.host, node):
                chain = []
                break
            chain.append(current)
            (current,) = ctx.host.successors(current)
        if chain:
            yield tuple(chain), {join_name: current}


# ============================================================================
# Side Conditions
# ============================================================================

def _branch_peak(ctx: MatchContext) -> Optional[float]:
    measured = [
        node.throughput
        for name in ctx.bindings
        for node in ctx.cloud(name)
        if node.throughput is not None
    ]
    return max(measured) if measured else None


@side_condition("fork-join-not-limiting")
def _fork_join_not_limiting(ctx: MatchContext, nodes: List[PatternNode], args: Tuple[str, ...]) -> bool:
    """Generated fork and join would not cap the branches they enclose."""
    peak = _branch_peak(ctx)
    if peak is None:
        return True
    for value in (ctx.params.fork_throughput, ctx.params.join_throughput):
        if value is not None and value < peak:
            return False
    return True


@side_condition("limiting-parallel")
def _limiting_parallel(ctx: MatchContext, nodes: List[PatternNode], args: Tuple[str, ...]) -> bool:
    """The bound fork F or join J is slower than the fastest branch node."""
    peak = _branch_peak(ctx)
    if peak is None:
        return False
    for name in ("F", "J"):
        value = ctx.node(name).throughput
        if value is not None and value < peak:
            return True
    return False


@side_condition("same-block")
def _same_block(ctx: MatchContext, nodes: List[PatternNode], args: Tuple[str, ...]) -> bool:
    block = ctx.node("F").config.get(PARALLEL_BLOCK)
    return all(ctx.node(name).config.get(PARALLEL_BLOCK) == block for name in ("J", "A"))


def dependency_groups(nodes: List[PatternNode]) -> List[List[int]]:
    """
    Partition a chain into groups that must stay sequential.

    Two nodes share a group when the later one reads an element the earlier
    one writes, or both write the same element. Groups are ordered by their
    first member; members keep chain order.
    """
    parent = list(range(len(nodes)))

    def find(i: int) -> int:
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for j, later in enumerate(nodes):
        for i in range(j):
            earlier = nodes[i]
            if reads(later) & writes(earlier) or writes(later) & writes(earlier):
                parent[find(j)] = find(i)

    groups: Dict[int, List[int]] = {}
    for index in range(len(nodes)):
        groups.setdefault(find(index), []).append(index)
    return sorted(groups.values(), key=lambda members: members[0])


@side_condition("parallel-partition")
def _parallel_partition(ctx: MatchContext, nodes: List[PatternNode], args: Tuple[str, ...]) -> bool:
    chain = ctx.cloud("R")
    groups = dependency_groups(chain)
    if len(groups) < 2:
        return False
    offered = _declared_out(ctx.node("P"))
    if offered is None:
        return False
    produced: FrozenSet[str] = frozenset()
    for members in groups:
        previous = offered
        for index in members:
            if not chain[index].contract.in_elements <= previous:
                return False
            previous = chain[index].contract.out_elements
        produced |= previous
    successor = ctx.node("S")
    return not successor.contract.declared or successor.contract.in_elements <= produced


# ============================================================================
# Sequence to Parallel
# ============================================================================

class SequenceToParallelRule(RewriteRule):
    """
    Replicate a bottleneck sub-sequence n times behind a BalancingFork.

    n defaults to floor(neighbour average / bottleneck throughput) clamped
    to the configured bounds; an explicit n may be given as rule parameter.
    """

    RULE_NAME = "sequence-to-parallel"
    STRATEGY_TAG = Strategy.OS3
    DESCRIPTION = "Parallelize a bottleneck sub-sequence"
    REQUIRES_COST_DATA = True

    def get_default_parameters(self) -> Dict[str, Any]:
        return {"n": None}

    def validate_parameters(self) -> None:
        n = self.parameters["n"]
        if n is not None and int(n) < 2:
            raise RuleConfigurationError(f"{self.RULE_NAME}: parallelization factor must be >= 2, got {n}")

    def left_sides(self, graph: PatternGraph, params: RuleParameters) -> Iterable[LeftSide]:
        runs = detect_bottlenecks(graph, params, member=_unplaced)
        if not runs:
            return
        explicit = self.parameters["n"]
        if explicit is not None:
            yield self._left(int(explicit), True, params)
            return
        factors = {parallel_factor(graph, run, params) for run in runs}
        for n in sorted(f for f in factors if f is not None):
            yield self._left(n, False, params)

    def _left(self, n: int, explicit: bool, params: RuleParameters) -> LeftSide:
        return LeftSide(
            nodes=(NodePattern(name="P"), NodePattern(name="S")),
            clouds=(
                CloudParam(
                    name="SSQ", binder="bottleneck-run", boundary=("P", "S"),
                    determines=("P", "S"), side_conditions=("measured",),
                ),
            ),
            interface=frozenset({"P", "S", "SSQ"}),
            guards=("fork-join-not-limiting",),
            order=("SSQ",),
            params={
                "n": n,
                "explicit": explicit,
                "fork": params.fork_throughput,
                "join": params.join_throughput,
            },
        )

    def right(self, match: Match) -> RightSide:
        n = int(match.params["n"])
        group = match.fingerprint[:10]
        run = match.cloud_ids("SSQ")
        predecessor, successor = match.node("P"), match.node("S")

        def replica(index: int):
            return lambda node: node.with_config(**{REPLICATION_GROUP: group, REPLICA: str(index)})

        rhs = RightSide()
        rhs.clouds["SSQ"] = CloudUse(
            transform=replica(1),
            copies={f"r{k}": replica(k) for k in range(2, n + 1)},
        )
        fork = rhs.add_fresh(
            "fork",
            PatternKind.BALANCING_FORK,
            properties=NodeProperties(configuration={REPLICATION_GROUP: group, "groupRole": "fork"}),
            contract=_contract(_declared_out(predecessor)),
            cost=CostAnnotation(throughput_msg_per_s=match.params["fork"]),
        )
        join = rhs.add_fresh(
            "join",
            PatternKind.JOIN_ROUTER,
            properties=NodeProperties(configuration={REPLICATION_GROUP: group, "groupRole": "join"}),
            contract=_contract(_declared_out(match.host.node(run[-1]))),
            cost=CostAnnotation(throughput_msg_per_s=match.params["join"]),
        )
        rhs.connect(Ref.node("P"), fork, match.edge_condition(predecessor.id, run[0]))
        rhs.connect(fork, Ref.entry("SSQ"))
        rhs.connect(Ref.exit("SSQ"), join)
        for k in range(2, n + 1):
            rhs.connect(fork, Ref.entry("SSQ", f"r{k}"))
            rhs.connect(Ref.exit("SSQ", f"r{k}"), join)
        rhs.connect(join, Ref.node("S"), match.edge_condition(run[-1], successor.id))
        return rhs


# ============================================================================
# Merge Parallel
# ============================================================================

def _strip_replication(node: PatternNode) -> PatternNode:
    return node.with_config(**{REPLICATION_GROUP: None, REPLICA: None})


class MergeParallelRule(RewriteRule):
    """Collapse n isomorphic branches behind a limiting fork or join into one."""

    RULE_NAME = "merge-parallel"
    STRATEGY_TAG = Strategy.OS3
    DESCRIPTION = "Merge a limiting parallelization"
    REQUIRES_COST_DATA = True

    def left_sides(self, graph: PatternGraph, params: RuleParameters) -> Iterable[LeftSide]:
        widths = sorted({
            graph.out_degree(node.id)
            for node in graph.nodes_of_kind(PatternKind.BALANCING_FORK)
            if graph.in_degree(node.id) == 1 and graph.out_degree(node.id) >= 2
        })
        for n in widths:
            yield self._left(n)

    def _left(self, n: int) -> LeftSide:
        branches = [f"B{i}" for i in range(1, n + 1)]
        clouds = [
            CloudParam(name="B1", binder="branch", boundary=("F", "J"), determines=("J",), group="replica")
        ]
        clouds += [
            CloudParam(
                name=name, binder="branch", boundary=("F", "J"),
                side_conditions=(f"isomorphic-to(B1, {REPLICA})",), group="replica",
            )
            for name in branches[1:]
        ]
        return LeftSide(
            nodes=(
                NodePattern(name="P"),
                NodePattern(
                    name="F",
                    kinds=frozenset({PatternKind.BALANCING_FORK}),
                    guards=("in-degree(1)", f"out-degree({n})"),
                ),
                NodePattern(
                    name="J",
                    kinds=frozenset({PatternKind.JOIN_ROUTER}),
                    guards=(f"in-degree({n})", "out-degree(1)"),
                ),
                NodePattern(name="S"),
            ),
            edges=(EdgePattern(source="P", target="F"), EdgePattern(source="J", target="S")),
            clouds=tuple(clouds),
            interface=frozenset({"P", "S", "B1"}),
            guards=("limiting-parallel",),
            order=tuple(["F", "P"] + branches + ["S"]),
            params={"n": n},
        )

    def right(self, match: Match) -> RightSide:
        rhs = RightSide()
        rhs.clouds["B1"] = CloudUse(transform=_strip_replication)
        rhs.connect(Ref.node("P"), Ref.entry("B1"), match.condition("P", "F"))
        rhs.connect(Ref.exit("B1"), Ref.node("S"), match.condition("J", "S"))
        return rhs


# ============================================================================
# Heterogeneous Parallel
# ============================================================================

class HeteroParallelRule(RewriteRule):
    """
    Run the independent parts of a chain in parallel.

    The chain is partitioned into dependency groups; each group becomes a
    branch between a Multicast and a JoinRouter, and an Aggregator combines
    the branch results.
    """

    RULE_NAME = "hetero-parallel"
    STRATEGY_TAG = Strategy.OS3
    DESCRIPTION = "Parallelize independent heterogeneous sub-sequences"

    def left_sides(self, graph: PatternGraph, params: RuleParameters) -> Iterable[LeftSide]:
        yield LeftSide(
            nodes=(NodePattern(name="P"), NodePattern(name="S")),
            clouds=(
                CloudParam(name="R", binder="independent-run", boundary=("P", "S"), determines=("P", "S")),
            ),
            interface=frozenset({"P", "S", "R"}),
            guards=("parallel-partition", "fork-join-not-limiting"),
            order=("R",),
            params={"fork": params.fork_throughput, "join": params.join_throughput},
        )

    def right(self, match: Match) -> RightSide:
        chain = match.cloud("R")
        groups = dependency_groups(chain)
        block = match.fingerprint[:10]
        position = {node.id: index for index, node in enumerate(chain)}
        predecessor, successor = match.node("P"), match.node("S")

        combined: FrozenSet[str] = frozenset()
        for members in groups:
            combined |= chain[members[-1]].contract.out_elements

        rhs = RightSide()
        rhs.clouds["R"] = CloudUse(
            transform=lambda node: node.with_config(**{
                PARALLEL_BLOCK: block,
                PARALLEL_PART: str(position[node.id]),
                "independence": "verified",
            }),
            keep_internal_edges=False,
        )

        def block_node(role: str, kind: PatternKind, elements, throughput=None) -> Ref:
            return rhs.add_fresh(
                role,
                kind,
                properties=NodeProperties(configuration={PARALLEL_BLOCK: block, BLOCK_ROLE: role}),
                contract=_contract(elements),
                cost=CostAnnotation(throughput_msg_per_s=throughput),
            )

        fork = block_node("fork", PatternKind.MULTICAST, _declared_out(predecessor), match.params["fork"])
        join = block_node("join", PatternKind.JOIN_ROUTER, combined, match.params["join"])
        aggregate = block_node("aggregate", PatternKind.AGGREGATOR, combined)

        rhs.connect(Ref.node("P"), fork, match.edge_condition(predecessor.id, chain[0].id))
        for members in groups:
            refs = [Ref.host(chain[index].id) for index in members]
            rhs.chain(fork, *refs, join)
        rhs.chain(join, aggregate)
        rhs.connect(aggregate, Ref.node("S"), match.edge_condition(chain[-1].id, successor.id))
        return rhs


# ============================================================================
# Heterogeneous Merge
# ============================================================================

def _leave_block(node: PatternNode) -> PatternNode:
    return node.with_config(**{PARALLEL_BLOCK: None, PARALLEL_PART: None, "independence": None})


class HeteroMergeRule(RewriteRule):
    """Sequentialize a parallel block whose fork or join is limiting."""

    RULE_NAME = "hetero-merge"
    STRATEGY_TAG = Strategy.OS3
    DESCRIPTION = "Merge heterogeneous parallel branches"
    REQUIRES_COST_DATA = True

    def left_sides(self, graph: PatternGraph, params: RuleParameters) -> Iterable[LeftSide]:
        widths = sorted({
            graph.out_degree(node.id)
            for node in graph.nodes_of_kind(PatternKind.MULTICAST)
            if node.config.get(BLOCK_ROLE) == "fork" and graph.out_degree(node.id) >= 2
        })
        for g in widths:
            yield self._left(g)

    def _left(self, g: int) -> LeftSide:
        parts = [f"G{i}" for i in range(1, g + 1)]
        clouds = [
            CloudParam(
                name=name, binder="parallel-group", boundary=("F", "J"),
                determines=("J",), side_conditions=("annotated(independence)",), group="part",
            )
            for name in parts
        ]
        return LeftSide(
            nodes=(
                NodePattern(name="P"),
                NodePattern(
                    name="F",
                    kinds=frozenset({PatternKind.MULTICAST}),
                    guards=(f"annotated({PARALLEL_BLOCK})", "in-degree(1)", f"out-degree({g})"),
                ),
                NodePattern(
                    name="J",
                    kinds=frozenset({PatternKind.JOIN_ROUTER}),
                    guards=(f"in-degree({g})", "out-degree(1)"),
                ),
                NodePattern(
                    name="A",
                    kinds=frozenset({PatternKind.AGGREGATOR}),
                    guards=("in-degree(1)", "out-degree(1)"),
                ),
                NodePattern(name="S"),
            ),
            edges=(
                EdgePattern(source="P", target="F"),
                EdgePattern(source="J", target="A"),
                EdgePattern(source="A", target="S"),
            ),
            clouds=tuple(clouds),
            interface=frozenset(["P", "S"] + parts),
            guards=("same-block", "limiting-parallel"),
            order=tuple(["F", "P"] + parts + ["A", "S"]),
            params={"g": g},
        )

    def right(self, match: Match) -> RightSide:
        g = int(match.params["g"])
        members: List[PatternNode] = []
        rhs = RightSide()
        for i in range(1, g + 1):
            members.extend(match.cloud(f"G{i}"))
            rhs.clouds[f"G{i}"] = CloudUse(transform=_leave_block, keep_internal_edges=False)
        members.sort(key=lambda node: (int(node.config.get(PARALLEL_PART, "0")), node.id))

        refs = [Ref.host(node.id) for node in members]
        rhs.connect(Ref.node("P"), refs[0], match.condition("P", "F"))
        rhs.chain(*refs)
        rhs.connect(refs[-1], Ref.node("S"), match.condition("A", "S"))
        return rhs
