"""
Process simplification rules.

Structural rewrites that reduce model complexity and latency: redundant
sub-process removal, dead-path removal, sibling combination and removal of
unnecessary fork paths.
"""

import logging
from typing import FrozenSet, Iterable, List, Tuple

from eipopt.engine.clouds import is_link
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
from eipopt.models.optimizer import RuleParameters, Strategy
from eipopt.models.pattern_graph import (
    Contract,
    NodeProperties,
    PatternGraph,
    PatternKind,
    PatternNode,
)
from eipopt.pgraph.isomorphism import subgraph_isomorphic
from eipopt.pgraph.reachability import reachable_set
from eipopt.rules.base import json_list
from eipopt.rules.contracts import reads, writes_all

logger = logging.getLogger(__name__)

CONTEXT = "context"
ANNOTATIONS = ("parallelBlock", "replicationGroup")


def _unannotated(graph: PatternGraph, kinds: FrozenSet[PatternKind]) -> List[PatternNode]:
    return [
        node for node in graph.nodes_of_kind(*kinds)
        if not any(key in node.config for key in ANNOTATIONS)
    ]


# ============================================================================
# Side Conditions
# ============================================================================

@side_condition("redundancy-benefit")
def _redundancy_benefit(ctx: MatchContext, nodes: List[PatternNode], args: Tuple[str, ...]) -> bool:
    removed = len(ctx.cloud_ids("SG2")) + 2
    return removed > int(ctx.variant["n"]) + int(ctx.variant["m"])


@side_condition("longest-common-prefix")
def _longest_common_prefix(ctx: MatchContext, nodes: List[PatternNode], args: Tuple[str, ...]) -> bool:
    k = int(ctx.variant["k"])
    followers = [ctx.node(f"N{i}") for i in range(1, k + 1)]
    if not all(is_link(ctx.host, n) and n.properties.side_effect_free for n in followers):
        return True
    if len(ctx.cloud_ids("C1")) >= ctx.params.cloud_size_cap:
        return True
    first = ctx.host.subgraph(ctx.cloud_ids("C1") + (followers[0].id,))
    for i in range(2, k + 1):
        other = ctx.host.subgraph(ctx.cloud_ids(f"C{i}") + (followers[i - 1].id,))
        if subgraph_isomorphic(first, other) is None:
            return True
    return False


@side_condition("siblings-hoistable")
def _siblings_hoistable(ctx: MatchContext, nodes: List[PatternNode], args: Tuple[str, ...]) -> bool:
    return not (writes_all(ctx.cloud("C1")) & reads(ctx.node("F")))


@side_condition("writes-unused")
def _writes_unused(ctx: MatchContext, nodes: List[PatternNode], args: Tuple[str, ...]) -> bool:
    """Nothing downstream of the join reads what the removed branch writes."""
    written = writes_all(ctx.cloud("SG2"))
    if not written:
        return True
    downstream = reachable_set(ctx.host, ctx.node_map["J"])
    return not any(reads(ctx.host.node(node_id)) & written for node_id in downstream)


# ============================================================================
# Redundant Sub-process
# ============================================================================

def _carry_context(node: PatternNode) -> PatternNode:
    if not node.contract.declared:
        return node
    return node.with_contract(
        in_elements=node.contract.in_elements | {CONTEXT},
        out_elements=node.contract.out_elements | {CONTEXT},
    )


class RedundantSubprocessRule(RewriteRule):
    """
    Collapse two isomorphic side-effect-free branches between an
    unconditional fork and a join into one.

    Each predecessor of the fork gets a ContentEnricher adding its context
    to the message; each successor of the join is reached through a
    ContentBasedRouter on that context.
    """

    RULE_NAME = "redundant-subprocess"
    STRATEGY_TAG = Strategy.OS1
    DESCRIPTION = "Remove a redundant copy of the same sub-process"

    def left_sides(self, graph: PatternGraph, params: RuleParameters) -> Iterable[LeftSide]:
        in_degrees = sorted({
            graph.in_degree(node.id)
            for node in _unannotated(graph, frozenset({PatternKind.MULTICAST}))
            if graph.out_degree(node.id) == 2 and graph.in_degree(node.id) > 0
        })
        out_degrees = sorted({
            graph.out_degree(node.id)
            for node in graph.nodes_of_kind(PatternKind.JOIN_ROUTER)
            if graph.in_degree(node.id) == 2 and graph.out_degree(node.id) > 0
        })
        for n in in_degrees:
            for m in out_degrees:
                yield self._left(n, m)

    def _left(self, n: int, m: int) -> LeftSide:
        preds = [f"P{i}" for i in range(1, n + 1)]
        succs = [f"S{j}" for j in range(1, m + 1)]
        nodes = [
            NodePattern(
                name="F",
                kinds=frozenset({PatternKind.MULTICAST}),
                guards=("unannotated", f"in-degree({n})", "out-degree(2)"),
            ),
            NodePattern(
                name="J",
                kinds=frozenset({PatternKind.JOIN_ROUTER}),
                guards=("in-degree(2)", f"out-degree({m})"),
            ),
        ]
        nodes += [NodePattern(name=p, group="pred") for p in preds]
        nodes += [NodePattern(name=s, group="succ") for s in succs]
        return LeftSide(
            nodes=tuple(nodes),
            edges=tuple(
                [EdgePattern(source=p, target="F") for p in preds]
                + [EdgePattern(source="J", target=s) for s in succs]
            ),
            clouds=(
                CloudParam(
                    name="SG1", binder="branch", boundary=("F", "J"), determines=("J",),
                    side_conditions=("side-effect-free",), group="branch",
                ),
                CloudParam(
                    name="SG2", binder="branch", boundary=("F", "J"),
                    side_conditions=("isomorphic-to(SG1)", "side-effect-free"), group="branch",
                ),
            ),
            interface=frozenset(preds + succs + ["SG1"]),
            guards=("redundancy-benefit",),
            order=tuple(["F", "SG1", "SG2"] + preds + succs),
            params={"n": n, "m": m},
        )

    def right(self, match: Match) -> RightSide:
        n, m = int(match.params["n"]), int(match.params["m"])
        binding = match.bindings["SG1"]
        entry = match.host.node(binding.entries[0])
        exit_out: FrozenSet[str] = frozenset()
        for node_id in binding.exits:
            exit_out |= _carry_context(match.host.node(node_id)).contract.out_elements

        rhs = RightSide()
        rhs.clouds["SG1"] = CloudUse(transform=_carry_context)

        pred_ids = [match.node_map[f"P{i}"] for i in range(1, n + 1)]
        for i, pred_id in enumerate(pred_ids, start=1):
            contract = Contract()
            if entry.contract.declared:
                contract = Contract(
                    in_elements=entry.contract.in_elements,
                    out_elements=entry.contract.in_elements | {CONTEXT},
                )
            enricher = rhs.add_fresh(
                f"ce{i}",
                PatternKind.CONTENT_ENRICHER,
                properties=NodeProperties(configuration={"contextOf": pred_id, "writes": CONTEXT}),
                contract=contract,
            )
            rhs.connect(Ref.node(f"P{i}"), enricher, match.condition(f"P{i}", "F"))
            rhs.connect(enricher, Ref.entry("SG1"))

        join = match.node("J")
        route_condition = f"{CONTEXT} in {json_list(pred_ids)}"
        for j in range(1, m + 1):
            contract = Contract()
            if join.contract.declared:
                contract = Contract(
                    in_elements=exit_out | {CONTEXT},
                    out_elements=join.contract.out_elements,
                )
            router = rhs.add_fresh(
                f"cbr{j}",
                PatternKind.CONTENT_BASED_ROUTER,
                properties=NodeProperties(configuration={"routeOn": CONTEXT}),
                contract=contract,
            )
            rhs.connect(Ref.exit("SG1"), router)
            rhs.connect(router, Ref.node(f"S{j}"), route_condition)
        return rhs


# ============================================================================
# Dead Path
# ============================================================================

class DeadPathRule(RewriteRule):
    """Delete a pure, endpoint-free region from which no EndEvent is reachable."""

    RULE_NAME = "dead-path"
    STRATEGY_TAG = Strategy.OS1
    DESCRIPTION = "Unreachable sub-graph elimination"

    def left_sides(self, graph: PatternGraph, params: RuleParameters) -> Iterable[LeftSide]:
        yield LeftSide(
            nodes=(NodePattern(name="A", guards=("end-reachable",)),),
            clouds=(
                CloudParam(
                    name="D",
                    binder="dead-region",
                    boundary=("A",),
                    side_conditions=(
                        "side-effect-free",
                        "no-endpoint",
                        "no-endpoint-reachable",
                        "end-unreachable",
                    ),
                ),
            ),
            interface=frozenset({"A"}),
        )

    def right(self, match: Match) -> RightSide:
        return RightSide()


# ============================================================================
# Combine Siblings
# ============================================================================

SIBLING_FORKS = frozenset({PatternKind.MULTICAST, PatternKind.CONTENT_BASED_ROUTER})


class CombineSiblingsRule(RewriteRule):
    """
    Hoist the common side-effect-free chain prefix of every child of a fork
    before the fork, keeping a single copy.
    """

    RULE_NAME = "combine-siblings"
    STRATEGY_TAG = Strategy.OS1
    DESCRIPTION = "Combine isomorphic sibling patterns"

    def left_sides(self, graph: PatternGraph, params: RuleParameters) -> Iterable[LeftSide]:
        arities = sorted({
            graph.out_degree(node.id)
            for node in _unannotated(graph, SIBLING_FORKS)
            if graph.out_degree(node.id) >= 2 and graph.in_degree(node.id) == 1
        })
        for k in arities:
            yield self._left(k)

    def _left(self, k: int) -> LeftSide:
        children = [f"C{i}" for i in range(1, k + 1)]
        followers = [f"N{i}" for i in range(1, k + 1)]
        clouds = []
        for i, (cloud, follower) in enumerate(zip(children, followers), start=1):
            conditions = ("side-effect-free",) if i == 1 else ("isomorphic-to(C1)", "side-effect-free")
            clouds.append(CloudParam(
                name=cloud, binder="chain-prefix", boundary=("F", follower),
                determines=(follower,), side_conditions=conditions, group="sibling",
            ))
        return LeftSide(
            nodes=(
                NodePattern(name="P"),
                NodePattern(
                    name="F",
                    kinds=SIBLING_FORKS,
                    guards=("unannotated", "in-degree(1)", f"out-degree({k})"),
                ),
            ) + tuple(NodePattern(name=f) for f in followers),
            edges=(EdgePattern(source="P", target="F"),),
            clouds=tuple(clouds),
            interface=frozenset(["P", "F", "C1"] + followers),
            guards=("longest-common-prefix", "siblings-hoistable"),
            order=tuple(["F", "P"] + children),
            params={"k": k},
        )

    def right(self, match: Match) -> RightSide:
        k = int(match.params["k"])
        rhs = RightSide()
        fork = match.node("F")
        if fork.contract.declared:
            rhs.relabel["F"] = fork.with_contract(
                out_elements=fork.contract.out_elements | writes_all(match.cloud("C1"))
            )
        rhs.connect(Ref.node("P"), Ref.entry("C1"), match.condition("P", "F"))
        rhs.connect(Ref.exit("C1"), Ref.node("F"))
        for i in range(1, k + 1):
            head = match.bindings[f"C{i}"].nodes[0]
            rhs.connect(Ref.node("F"), Ref.node(f"N{i}"), match.edge_condition(match.node_map["F"], head))
        return rhs


# ============================================================================
# Unnecessary Fork Path
# ============================================================================

class UnnecessaryForkPathRule(RewriteRule):
    """
    Remove a fork path whose work never reaches the rest of the process.

    Two modes: the path contains no endpoint and nothing downstream reads its
    writes, or the path is read-only (it may reach endpoints transitively).
    A fork left with a single path is dissolved together with its join.
    """

    RULE_NAME = "unnecessary-fork-path"
    STRATEGY_TAG = Strategy.OS1
    DESCRIPTION = "Remove unnecessary fork paths"

    MODES = {
        "no-endpoint": ("side-effect-free", "no-endpoint", "writes-unused"),
        "transitive-endpoint": ("side-effect-free", "read-only"),
    }

    def left_sides(self, graph: PatternGraph, params: RuleParameters) -> Iterable[LeftSide]:
        forks = _unannotated(graph, frozenset({PatternKind.MULTICAST}))
        degrees = {graph.out_degree(node.id) for node in forks}
        for mode, conditions in self.MODES.items():
            if 2 in degrees:
                yield self._dissolve(mode, conditions)
            if any(d >= 3 for d in degrees):
                yield self._prune(mode, conditions)

    def _dissolve(self, mode: str, conditions: Tuple[str, ...]) -> LeftSide:
        return LeftSide(
            nodes=(
                NodePattern(name="P"),
                NodePattern(
                    name="F",
                    kinds=frozenset({PatternKind.MULTICAST}),
                    guards=("unannotated", "in-degree(1)", "out-degree(2)"),
                ),
                NodePattern(
                    name="J",
                    kinds=frozenset({PatternKind.JOIN_ROUTER}),
                    guards=("in-degree(2)", "out-degree(1)"),
                ),
                NodePattern(name="S"),
            ),
            edges=(EdgePattern(source="P", target="F"), EdgePattern(source="J", target="S")),
            clouds=(
                CloudParam(name="SG1", binder="branch", boundary=("F", "J"), determines=("J",)),
                CloudParam(name="SG2", binder="branch", boundary=("F", "J"), side_conditions=conditions),
            ),
            interface=frozenset({"P", "S", "SG1"}),
            order=("F", "P", "SG1", "SG2", "S"),
            params={"mode": mode, "shape": "dissolve"},
        )

    def _prune(self, mode: str, conditions: Tuple[str, ...]) -> LeftSide:
        return LeftSide(
            nodes=(
                NodePattern(
                    name="F",
                    kinds=frozenset({PatternKind.MULTICAST}),
                    guards=("unannotated", "out-degree-at-least(3)"),
                ),
                NodePattern(name="J", kinds=frozenset({PatternKind.JOIN_ROUTER})),
            ),
            clouds=(
                CloudParam(
                    name="SG2", binder="branch", boundary=("F", "J"),
                    determines=("J",), side_conditions=conditions,
                ),
            ),
            interface=frozenset({"F", "J"}),
            order=("F", "SG2"),
            params={"mode": mode, "shape": "prune"},
        )

    def right(self, match: Match) -> RightSide:
        rhs = RightSide()
        if match.params["shape"] == "dissolve":
            rhs.connect(Ref.node("P"), Ref.entry("SG1"), match.condition("P", "F"))
            rhs.connect(Ref.exit("SG1"), Ref.node("S"), match.condition("J", "S"))
        return rhs
