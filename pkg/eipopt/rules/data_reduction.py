"""
Data reduction and placement rules.

Rules that shrink the messages or the number of messages flowing through a
process (early filter, early mapping, claim check, early split, early
aggregation) and the endpoint pushdown that moves a leading or trailing
filter or mapping into the adjacent endpoint.
"""

import json
import logging
from typing import Any, Dict, FrozenSet, Iterable, Iterator, List, Optional, Tuple

from eipopt.cost.bottlenecks import detect_bottlenecks
from eipopt.engine.clouds import Candidate, cloud_binder, run_binder, walk_chain
from eipopt.engine.conditions import MatchContext, side_condition
from eipopt.engine.dpo import fresh_id
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
    FILTER_KINDS,
    JOIN_KINDS,
    NON_PATTERN_KINDS,
    Contract,
    NodeProperties,
    PatternGraph,
    PatternKind,
    PatternNode,
)
from eipopt.pgraph.reachability import reachable_set
from eipopt.rules.contracts import reads, writes

logger = logging.getLogger(__name__)

PATTERN_KINDS = frozenset(PatternKind) - NON_PATTERN_KINDS
HOISTED = "hoisted"
CLAIMED = "claimed"
BATCH_MODE = "batchMode"


def _flag(node: PatternNode, key: str) -> bool:
    return node.config.get(key) == "true"


def _passing(elements: Optional[FrozenSet[str]]) -> Contract:
    if elements is None:
        return Contract()
    return Contract(in_elements=elements, out_elements=elements)


def _declared_out(node: PatternNode) -> Optional[FrozenSet[str]]:
    return node.contract.out_elements if node.contract.declared else None


# ============================================================================
# Early Filter
# ============================================================================

@side_condition("filterable")
def _filterable(ctx: MatchContext, nodes: List[PatternNode], args: Tuple[str, ...]) -> bool:
    """
    V needs a strict, non-empty subset of what U emits, and neither V's
    output nor anything downstream of V uses the difference.
    """
    upstream, target = ctx.node("U"), ctx.node("V")
    if len(ctx.host.edges_between(upstream.id, target.id)) != 1:
        return False
    offered = upstream.contract.out_elements
    required = target.contract.in_elements
    if not required or not required < offered:
        return False
    dropped = offered - required
    if dropped & target.contract.out_elements:
        return False
    downstream = reachable_set(ctx.host, target.id)
    return not any(reads(ctx.host.node(node_id)) & dropped for node_id in downstream)


class EarlyFilterRule(RewriteRule):
    """
    Filter out message elements as soon as no later pattern uses them.

    Inserts a ContentFilter in front of the first consumer that needs only
    part of the message, or narrows an adjacent ContentFilter instead.
    """

    RULE_NAME = "early-filter"
    STRATEGY_TAG = Strategy.OS2
    DESCRIPTION = "Insert or move a filter early"

    CONSUMER_KINDS = PATTERN_KINDS - FILTER_KINDS - JOIN_KINDS

    def left_sides(self, graph: PatternGraph, params: RuleParameters) -> Iterable[LeftSide]:
        for variant, upstream in (
            ("insert", NodePattern(name="U", kinds=PATTERN_KINDS - {PatternKind.CONTENT_FILTER})),
            ("insert", NodePattern(
                name="U", kinds=frozenset({PatternKind.CONTENT_FILTER}), guards=("out-degree-at-least(2)",)
            )),
            ("move", NodePattern(
                name="U", kinds=frozenset({PatternKind.CONTENT_FILTER}), guards=("out-degree(1)",)
            )),
        ):
            yield LeftSide(
                nodes=(upstream, NodePattern(name="V", kinds=self.CONSUMER_KINDS)),
                edges=(EdgePattern(source="U", target="V"),),
                interface=frozenset({"U", "V"}),
                guards=("filterable",),
                params={"variant": variant},
            )

    def right(self, match: Match) -> RightSide:
        upstream, target = match.node("U"), match.node("V")
        rhs = RightSide()
        condition = match.condition("U", "V")
        if match.params["variant"] == "move":
            rhs.relabel["U"] = upstream.with_contract(out_elements=target.contract.in_elements)
            rhs.connect(Ref.node("U"), Ref.node("V"), condition)
            return rhs
        content_filter = rhs.add_fresh(
            "filter",
            PatternKind.CONTENT_FILTER,
            properties=NodeProperties(configuration={"filterFor": target.id}),
            contract=Contract(
                in_elements=upstream.contract.out_elements,
                out_elements=target.contract.in_elements,
            ),
        )
        rhs.connect(Ref.node("U"), content_filter, condition)
        rhs.connect(content_filter, Ref.node("V"))
        return rhs


# ============================================================================
# Early Mapping
# ============================================================================

MAPPING_BARRIERS = frozenset({
    PatternKind.SPLITTER,
    PatternKind.AGGREGATOR,
    PatternKind.CLAIM_CHECK,
    PatternKind.THROTTLER,
})


@cloud_binder("mapping-prefix")
def bind_mapping_prefix(ctx: MatchContext, cloud: CloudParam) -> Iterator[Candidate]:
    """
    Longest chain in front of the mapping P1 that the mapping can be moved
    across; determines the node W feeding the chain.
    """
    before, mapping_name = cloud.boundary
    mapping = ctx.node(mapping_name)
    mapped = mapping.contract.out_elements

    def crossable(node: PatternNode) -> bool:
        return (
            node.properties.side_effect_free
            and node.contract.declared
            and node.kind not in MAPPING_BARRIERS
            and not (writes(node) & mapped)
        )

    (last,) = ctx.host.predecessors(mapping.id)
    backward = walk_chain(ctx.host, last, crossable, ctx.params.cloud_size_cap, forward=False)
    chain = list(reversed(backward))
    for start in range(len(chain)):
        candidate = chain[start:]
        (feeder,) = ctx.host.predecessors(candidate[0])
        if not mapping.contract.in_elements <= ctx.host.node(feeder).contract.out_elements:
            continue
        available = set(mapped)
        ok = True
        for node_id in candidate:
            node = ctx.host.node(node_id)
            if not node.contract.in_elements <= available:
                ok = False
                break
            available |= writes(node)
        if ok:
            yield tuple(candidate), {before: feeder}
            return


@side_condition("element-reducing")
def _element_reducing(ctx: MatchContext, nodes: List[PatternNode], args: Tuple[str, ...]) -> bool:
    for node in nodes:
        predecessors = ctx.host.predecessors(node.id)
        if len(predecessors) != 1 or not node.contract.declared:
            return False
        source = ctx.host.node(predecessors[0])
        if not source.contract.declared:
            return False
        if len(node.contract.out_elements) >= len(source.contract.out_elements):
            return False
    return True


class EarlyMappingRule(RewriteRule):
    """
    Move an element-reducing MessageTranslator in front of the chain that
    precedes it, so that the chain processes the smaller message. A trailing
    ContentFilter drops what the chain adds, when it adds anything.
    """

    RULE_NAME = "early-mapping"
    STRATEGY_TAG = Strategy.OS2
    DESCRIPTION = "Move an element-reducing mapping early"

    def left_sides(self, graph: PatternGraph, params: RuleParameters) -> Iterable[LeftSide]:
        yield LeftSide(
            nodes=(
                NodePattern(
                    name="P1",
                    kinds=frozenset({PatternKind.MESSAGE_TRANSLATOR}),
                    guards=("in-degree(1)", "out-degree(1)", f"unannotated({HOISTED})", "element-reducing"),
                ),
                NodePattern(name="W"),
                NodePattern(name="Y"),
            ),
            edges=(EdgePattern(source="P1", target="Y"),),
            clouds=(
                CloudParam(
                    name="X", binder="mapping-prefix", boundary=("W", "P1"), determines=("W",),
                    side_conditions=("element-set-untouched(P1)",),
                ),
            ),
            interface=frozenset({"W", "X", "P1", "Y"}),
            order=("P1", "X", "Y"),
        )

    def right(self, match: Match) -> RightSide:
        mapping = match.node("P1")
        mapped = mapping.contract.out_elements
        chain = match.cloud_ids("X")
        carried: Dict[str, FrozenSet[str]] = {}
        available = frozenset(mapped)
        for node in match.cloud("X"):
            available = available | writes(node)
            carried[node.id] = available
        added = available - mapped

        rhs = RightSide()
        rhs.relabel["P1"] = mapping.with_config(**{HOISTED: "true"})
        rhs.clouds["X"] = CloudUse(transform=lambda node: node.with_contract(out_elements=carried[node.id]))
        rhs.connect(Ref.node("W"), Ref.node("P1"), match.edge_condition(match.node_map["W"], chain[0]))
        rhs.connect(Ref.node("P1"), Ref.entry("X"))
        condition = match.condition("P1", "Y")
        if added:
            trailing = rhs.add_fresh(
                "filter",
                PatternKind.CONTENT_FILTER,
                properties=NodeProperties(configuration={"filterFor": mapping.id}),
                contract=Contract(in_elements=carried[chain[-1]], out_elements=mapped),
            )
            rhs.connect(Ref.exit("X"), trailing)
            rhs.connect(trailing, Ref.node("Y"), condition)
        else:
            rhs.connect(Ref.exit("X"), Ref.node("Y"), condition)
        return rhs


# ============================================================================
# Early Claim Check
# ============================================================================

def _claimable(ctx: MatchContext, node: PatternNode) -> bool:
    return (
        not node.properties.message_access
        and node.kind != PatternKind.CLAIM_CHECK
        and CLAIMED not in node.config
        and "claimRestore" not in node.config
    )


cloud_binder("message-free-run")(run_binder(_claimable))


class EarlyClaimCheckRule(RewriteRule):
    """
    Store the payload in a claim check while a run of patterns that never
    touch the payload executes, and restore it afterwards.
    """

    RULE_NAME = "early-claim-check"
    STRATEGY_TAG = Strategy.OS2
    DESCRIPTION = "Claim check around payload-free patterns"

    def left_sides(self, graph: PatternGraph, params: RuleParameters) -> Iterable[LeftSide]:
        yield LeftSide(
            nodes=(NodePattern(name="P"), NodePattern(name="S")),
            clouds=(
                CloudParam(
                    name="R", binder="message-free-run", boundary=("P", "S"),
                    determines=("P", "S"), side_conditions=("message-access-free",),
                ),
            ),
            interface=frozenset({"P", "S", "R"}),
            order=("R",),
        )

    def right(self, match: Match) -> RightSide:
        predecessor, successor = match.node("P"), match.node("S")
        run = match.cloud_ids("R")
        offered = _declared_out(predecessor)
        rhs = RightSide()
        rhs.clouds["R"] = CloudUse(transform=lambda node: node.with_config(**{CLAIMED: "true"}))
        claim = rhs.add_fresh(
            "claim",
            PatternKind.CLAIM_CHECK,
            properties=NodeProperties(configuration={"claimFor": run[0]}),
            contract=(
                Contract(in_elements=offered, out_elements=frozenset({"claim"}))
                if offered is not None else Contract()
            ),
        )
        restore = rhs.add_fresh(
            "restore",
            PatternKind.CONTENT_ENRICHER,
            properties=NodeProperties(
                configuration={"claimRestore": fresh_id(self.RULE_NAME, match.fingerprint, "claim")}
            ),
            contract=(
                Contract(in_elements=frozenset({"claim"}), out_elements=offered)
                if offered is not None else Contract()
            ),
        )
        rhs.connect(Ref.node("P"), claim, match.edge_condition(predecessor.id, run[0]))
        rhs.connect(claim, Ref.entry("R"))
        rhs.connect(Ref.exit("R"), restore)
        rhs.connect(restore, Ref.node("S"), match.edge_condition(run[-1], successor.id))
        return rhs


# ============================================================================
# Early Split
# ============================================================================

def _segmented(node: PatternNode) -> bool:
    return (node.cost.segment_count_in or 0) > 1 and BATCH_MODE not in node.config


@cloud_binder("segment-bottleneck")
def bind_segment_bottleneck(ctx: MatchContext, cloud: CloudParam) -> Iterator[Candidate]:
    before, after = cloud.boundary
    for run in detect_bottlenecks(ctx.host, ctx.params, member=_segmented):
        (predecessor,) = ctx.host.predecessors(run[0])
        (successor,) = ctx.host.successors(run[-1])
        yield tuple(run), {before: predecessor, after: successor}


def _single_segment(node: PatternNode) -> PatternNode:
    return node.with_cost(segment_count_in=1, segment_count_out=1)


class EarlySplitRule(RewriteRule):
    """
    Split many-segment messages before a segment bottleneck.

    An adjacent upstream Splitter is retargeted, an adjacent downstream
    Splitter is moved in front of the bottleneck; otherwise a Splitter and an
    Aggregator re-building the segments are inserted around it.
    """

    RULE_NAME = "early-split"
    STRATEGY_TAG = Strategy.OS2
    DESCRIPTION = "Split messages before a segment bottleneck"
    REQUIRES_COST_DATA = True

    def left_sides(self, graph: PatternGraph, params: RuleParameters) -> Iterable[LeftSide]:
        if not detect_bottlenecks(graph, params, member=_segmented):
            return
        splitter = frozenset({PatternKind.SPLITTER})
        others = frozenset(PatternKind) - splitter

        def left(variant: str, before: NodePattern, after: NodePattern, extra=()) -> LeftSide:
            return LeftSide(
                nodes=(before, after) + tuple(extra),
                edges=(EdgePattern(source="S", target="T"),) if extra else (),
                clouds=(
                    CloudParam(
                        name="SSQ", binder="segment-bottleneck", boundary=("P", "S"), determines=("P", "S"),
                    ),
                ),
                interface=frozenset({"P", "S", "SSQ"} | {n.name for n in extra}),
                order=("SSQ",) + tuple(n.name for n in extra),
                params={"variant": variant},
            )

        yield left("retarget", NodePattern(name="P", kinds=splitter), NodePattern(name="S"))
        yield left(
            "move",
            NodePattern(name="P", kinds=others),
            NodePattern(name="S", kinds=splitter, guards=("in-degree(1)", "out-degree(1)")),
            (NodePattern(name="T"),),
        )
        yield left(
            "insert",
            NodePattern(name="P", kinds=others),
            NodePattern(name="S", kinds=others),
        )

    def right(self, match: Match) -> RightSide:
        variant = match.params["variant"]
        run = match.cloud_ids("SSQ")
        first = match.host.node(run[0])
        split_on = json.dumps(sorted(first.contract.in_elements))
        predecessor, successor = match.node("P"), match.node("S")
        enter = match.edge_condition(predecessor.id, run[0])
        leave = match.edge_condition(run[-1], successor.id)

        rhs = RightSide()
        rhs.clouds["SSQ"] = CloudUse(transform=_single_segment)
        if variant == "retarget":
            rhs.relabel["P"] = predecessor.with_config(splitOn=split_on)
            rhs.connect(Ref.node("P"), Ref.entry("SSQ"), enter)
            rhs.connect(Ref.exit("SSQ"), Ref.node("S"), leave)
        elif variant == "move":
            rhs.relabel["S"] = successor.with_config(splitOn=split_on)
            rhs.connect(Ref.node("P"), Ref.node("S"), enter)
            rhs.connect(Ref.node("S"), Ref.entry("SSQ"))
            rhs.connect(Ref.exit("SSQ"), Ref.node("T"), match.condition("S", "T"))
        else:
            split = rhs.add_fresh(
                "split",
                PatternKind.SPLITTER,
                properties=NodeProperties(configuration={"splitOn": split_on}),
                contract=_passing(_declared_out(predecessor)),
            )
            rebuild = rhs.add_fresh(
                "aggregate",
                PatternKind.AGGREGATOR,
                properties=NodeProperties(configuration={"aggregateFor": run[0]}),
                contract=_passing(_declared_out(match.host.node(run[-1]))),
            )
            rhs.connect(Ref.node("P"), split, enter)
            rhs.connect(split, Ref.entry("SSQ"))
            rhs.connect(Ref.exit("SSQ"), rebuild)
            rhs.connect(rebuild, Ref.node("S"), leave)
        return rhs


# ============================================================================
# Early Aggregation
# ============================================================================

def _batchable(ctx: MatchContext, node: PatternNode) -> bool:
    return _flag(node, "batchCapable") and node.throughput is not None and BATCH_MODE not in node.config


cloud_binder("batch-region")(run_binder(_batchable))


class EarlyAggregationRule(RewriteRule):
    """Process a batch-capable region on aggregated micro-batches."""

    RULE_NAME = "early-aggregation"
    STRATEGY_TAG = Strategy.OS2
    DESCRIPTION = "Micro-batch a batch-capable region"
    REQUIRES_COST_DATA = True

    def left_sides(self, graph: PatternGraph, params: RuleParameters) -> Iterable[LeftSide]:
        yield LeftSide(
            nodes=(NodePattern(name="P"), NodePattern(name="S")),
            clouds=(
                CloudParam(
                    name="R", binder="batch-region", boundary=("P", "S"),
                    determines=("P", "S"), side_conditions=("measured",),
                ),
            ),
            interface=frozenset({"P", "S", "R"}),
            order=("R",),
        )

    def right(self, match: Match) -> RightSide:
        region = match.cloud("R")
        predecessor, successor = match.node("P"), match.node("S")
        config: Dict[str, Any] = {"aggregateFor": region[0].id}
        limits = [int(node.config["maxBatchSize"]) for node in region if "maxBatchSize" in node.config]
        if limits:
            config["batchSize"] = str(min(limits))

        rhs = RightSide()
        rhs.clouds["R"] = CloudUse(transform=lambda node: node.with_config(**{BATCH_MODE: "true"}))
        batch = rhs.add_fresh(
            "aggregate",
            PatternKind.AGGREGATOR,
            properties=NodeProperties(configuration=config),
            contract=_passing(_declared_out(predecessor)),
        )
        unbatch = rhs.add_fresh(
            "split",
            PatternKind.SPLITTER,
            properties=NodeProperties(configuration={"splitFor": region[0].id}),
            contract=_passing(_declared_out(region[-1])),
        )
        rhs.connect(Ref.node("P"), batch, match.edge_condition(predecessor.id, region[0].id))
        rhs.connect(batch, Ref.entry("R"))
        rhs.connect(Ref.exit("R"), unbatch)
        rhs.connect(unbatch, Ref.node("S"), match.edge_condition(region[-1].id, successor.id))
        return rhs


# ============================================================================
# Pushdown to Endpoint
# ============================================================================

PUSHDOWN_KINDS = frozenset({
    PatternKind.CONTENT_FILTER,
    PatternKind.MESSAGE_FILTER,
    PatternKind.MESSAGE_TRANSLATOR,
})


def delegate(endpoint: PatternNode, pattern: PatternNode, first: bool) -> PatternNode:
    """Record pattern in the endpoint's ordered "delegated" list."""
    entry = {"id": pattern.id, "kind": pattern.label}
    delegated = endpoint.config_list("delegated")
    delegated = delegated + [entry] if first else [entry] + delegated
    return endpoint.with_config(delegated=json.dumps(delegated, sort_keys=True))


class PushdownEndpointRule(RewriteRule):
    """
    Delegate the first pattern after a sender (or the last one before a
    receiver) to the endpoint itself.
    """

    RULE_NAME = "pushdown-endpoint"
    STRATEGY_TAG = Strategy.OS4
    DESCRIPTION = "Pushdown to endpoints"

    def left_sides(self, graph: PatternGraph, params: RuleParameters) -> Iterable[LeftSide]:
        pattern = NodePattern(name="P", kinds=PUSHDOWN_KINDS, guards=("in-degree(1)", "out-degree(1)"))
        capable = "config-equals(delegationCapable, true)"
        yield LeftSide(
            nodes=(
                NodePattern(
                    name="E",
                    kinds=frozenset({PatternKind.EXTERNAL_ENDPOINT}),
                    guards=(capable, "out-degree(1)"),
                ),
                pattern,
                NodePattern(name="X"),
            ),
            edges=(EdgePattern(source="E", target="P"), EdgePattern(source="P", target="X")),
            interface=frozenset({"E", "X"}),
            params={"side": "first"},
        )
        yield LeftSide(
            nodes=(
                NodePattern(
                    name="E",
                    kinds=frozenset({PatternKind.EXTERNAL_ENDPOINT}),
                    guards=(capable, "in-degree(1)"),
                ),
                pattern,
                NodePattern(name="X"),
            ),
            edges=(EdgePattern(source="X", target="P"), EdgePattern(source="P", target="E")),
            interface=frozenset({"E", "X"}),
            params={"side": "last"},
        )

    def right(self, match: Match) -> RightSide:
        endpoint, pattern = match.node("E"), match.node("P")
        rhs = RightSide()
        if match.params["side"] == "first":
            updated = delegate(endpoint, pattern, first=True)
            if pattern.contract.declared:
                updated = updated.with_contract(out_elements=pattern.contract.out_elements)
            rhs.relabel["E"] = updated
            rhs.connect(Ref.node("E"), Ref.node("X"), match.condition("P", "X"))
        else:
            updated = delegate(endpoint, pattern, first=False)
            if pattern.contract.declared:
                updated = updated.with_contract(in_elements=pattern.contract.in_elements)
            rhs.relabel["E"] = updated
            rhs.connect(Ref.node("X"), Ref.node("E"), match.condition("X", "P"))
        return rhs
