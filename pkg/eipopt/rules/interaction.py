"""
Interaction rules.

Rules that reduce the interaction with failing or overloaded endpoints:
suppress calls to an endpoint that keeps failing, retry it after a cool-down
and reduce the pace or number of requests sent to a limited endpoint.
"""

import json
import logging
from typing import Iterable, List, Optional, Tuple

from eipopt.engine.conditions import MatchContext, side_condition
from eipopt.engine.rule import EdgePattern, LeftSide, Match, NodePattern, Ref, RewriteRule, RightSide
from eipopt.models.diagnostics import Diagnostic, DiagnosticCode, Severity
from eipopt.models.optimizer import RuleParameters, Strategy
from eipopt.models.pattern_graph import (
    CALL_KINDS,
    NON_PATTERN_KINDS,
    Contract,
    FailureStats,
    NodeProperties,
    PatternGraph,
    PatternKind,
    PatternNode,
)

logger = logging.getLogger(__name__)

SUPPRESSED = "suppressed"
REDUCED = "reduced"
ALTERNATIVE_CONDITIONS = frozenset({"exception", "error", "fallback"})
SUPPRESSION_KEYS = (
    SUPPRESSED,
    "normalCondition",
    "normalTarget",
    "alternativeTarget",
    "alternativeCondition",
    "alternativeAdded",
)


def _consecutive_failures(node: PatternNode) -> int:
    stats = node.cost.failure_stats
    return stats.consecutive_failures if stats is not None else 0


def _failure_rate(node: PatternNode) -> float:
    stats = node.cost.failure_stats
    return stats.failure_rate if stats is not None else 0.0


def _has_exception_edge(graph: PatternGraph, node_id: str) -> bool:
    return any(edge.condition in ALTERNATIVE_CONDITIONS for edge in graph.out_edges(node_id))


def _stored(condition: Optional[str]) -> str:
    return "" if condition is None else condition


def _restored(value: Optional[str]) -> Optional[str]:
    return value or None


@side_condition("failing")
def _failing(ctx: MatchContext, nodes: List[PatternNode], args: Tuple[str, ...]) -> bool:
    threshold = ctx.params.failure_threshold
    return all(
        _consecutive_failures(node) >= threshold and node.config.get(SUPPRESSED) != "true"
        for node in nodes
    )


@side_condition("alternative-configured")
def _alternative_configured(ctx: MatchContext, nodes: List[PatternNode], args: Tuple[str, ...]) -> bool:
    call, alternative = ctx.node("P1"), ctx.node("A")
    return (
        call.config.get("alternative") == alternative.id
        and not _has_exception_edge(ctx.host, call.id)
        and not ctx.host.has_edge(call.id, alternative.id)
    )


@side_condition("suppression-targets")
def _suppression_targets(ctx: MatchContext, nodes: List[PatternNode], args: Tuple[str, ...]) -> bool:
    call = ctx.node("P1")
    return (
        call.config.get("normalTarget") == ctx.node("N").id
        and call.config.get("alternativeTarget") == ctx.node("A").id
    )


# ============================================================================
# Ignore / Retry Failing Endpoint
# ============================================================================

class IgnoreFailingEndpointRule(RewriteRule):
    """
    Route around an endpoint call that keeps failing.

    The normal continuation of the call is suppressed and the exception (or
    configured alternative) path becomes the unconditional continuation.
    Everything needed to undo the rerouting is kept in the call's
    configuration.
    """

    RULE_NAME = "ignore-failing-endpoint"
    STRATEGY_TAG = Strategy.OS5
    DESCRIPTION = "Ignore a failing endpoint"
    REQUIRES_COST_DATA = True

    def left_sides(self, graph: PatternGraph, params: RuleParameters) -> Iterable[LeftSide]:
        call = NodePattern(name="P1", kinds=CALL_KINDS, guards=("failing",))
        normal = EdgePattern(
            source="P1", target="N", excluded=ALTERNATIVE_CONDITIONS | {SUPPRESSED},
        )
        yield LeftSide(
            nodes=(call, NodePattern(name="N"), NodePattern(name="A")),
            edges=(normal, EdgePattern(source="P1", target="A", conditions=ALTERNATIVE_CONDITIONS)),
            interface=frozenset({"P1", "N", "A"}),
            order=("P1", "A", "N"),
            params={"variant": "exception-edge"},
        )
        if not any("alternative" in node.config for node in graph.nodes_of_kind(*CALL_KINDS)):
            return
        yield LeftSide(
            nodes=(call, NodePattern(name="N"), NodePattern(name="A")),
            edges=(normal,),
            interface=frozenset({"P1", "N", "A"}),
            guards=("alternative-configured",),
            params={"variant": "configured"},
        )

    def right(self, match: Match) -> RightSide:
        call = match.node("P1")
        normal_target, alternative_target = match.node("N"), match.node("A")
        normal_condition = match.condition("P1", "N")
        config = {
            SUPPRESSED: "true",
            "normalCondition": _stored(normal_condition),
            "normalTarget": normal_target.id,
            "alternativeTarget": alternative_target.id,
        }
        if match.params["variant"] == "configured":
            config["alternativeAdded"] = "true"
        else:
            config["alternativeCondition"] = _stored(match.condition("P1", "A"))

        logger.info(
            f"Suppressing {call.id} after {_consecutive_failures(call)} consecutive failures, "
            f"continuing at {alternative_target.id}"
        )
        rhs = RightSide()
        rhs.relabel["P1"] = call.with_config(**config)
        rhs.connect(Ref.node("P1"), Ref.node("N"), SUPPRESSED)
        rhs.connect(Ref.node("P1"), Ref.node("A"))
        return rhs

    def diagnose(self, graph: PatternGraph, params: RuleParameters) -> List[Diagnostic]:
        findings = []
        for node in graph.nodes_of_kind(*CALL_KINDS):
            if _consecutive_failures(node) < params.failure_threshold or node.config.get(SUPPRESSED) == "true":
                continue
            if _has_exception_edge(graph, node.id) or "alternative" in node.config:
                continue
            findings.append(Diagnostic(
                code=DiagnosticCode.NO_ALTERNATIVE_PATH,
                severity=Severity.WARNING,
                message=(
                    f"{_consecutive_failures(node)} consecutive failures but no exception path "
                    f"or configured alternative"
                ),
                node_id=node.id,
            ))
        return findings


class RetryFailingEndpointRule(RewriteRule):
    """
    Restore the routing of a suppressed call once its cool-down has elapsed
    and record the updated retry configuration.
    """

    RULE_NAME = "retry-failing-endpoint"
    STRATEGY_TAG = Strategy.OS5
    DESCRIPTION = "Retry a suppressed endpoint"

    def left_sides(self, graph: PatternGraph, params: RuleParameters) -> Iterable[LeftSide]:
        marker = params.cooldown_marker
        yield LeftSide(
            nodes=(
                NodePattern(
                    name="P1",
                    kinds=CALL_KINDS,
                    guards=(f"config-equals({SUPPRESSED}, true)", f"config-equals({marker}, true)"),
                ),
                NodePattern(name="N"),
                NodePattern(name="A"),
            ),
            edges=(
                EdgePattern(source="P1", target="N", conditions=frozenset({SUPPRESSED})),
                EdgePattern(source="P1", target="A", conditional=False),
            ),
            interface=frozenset({"P1", "N", "A"}),
            guards=("suppression-targets",),
            params={"marker": marker, "threshold": params.failure_threshold},
        )

    def right(self, match: Match) -> RightSide:
        call = match.node("P1")
        config = call.config
        previous = json.loads(config["retryConfiguration"]) if "retryConfiguration" in config else {}
        retry = {
            "retryCount": int(previous.get("retryCount", 0)) + 1,
            "threshold": match.params["threshold"],
        }
        cleared = {key: None for key in SUPPRESSION_KEYS + (match.params["marker"],)}
        restored = call.with_config(retryConfiguration=json.dumps(retry, sort_keys=True), **cleared)
        stats = call.cost.failure_stats or FailureStats()
        restored = restored.with_cost(failure_stats=stats.model_copy(update={"consecutive_failures": 0}))

        logger.info(f"Retrying {call.id} (attempt {retry['retryCount']})")
        rhs = RightSide()
        rhs.relabel["P1"] = restored
        rhs.connect(Ref.node("P1"), Ref.node("N"), _restored(config.get("normalCondition")))
        if config.get("alternativeAdded") != "true":
            rhs.connect(Ref.node("P1"), Ref.node("A"), _restored(config.get("alternativeCondition")))
        return rhs


# ============================================================================
# Reduce Requests
# ============================================================================

@side_condition("overloaded")
def _overloaded(ctx: MatchContext, nodes: List[PatternNode], args: Tuple[str, ...]) -> bool:
    return all(
        node.config.get(REDUCED) != "true"
        and (
            node.config.get("messageLimited") == "true"
            or _failure_rate(node) > ctx.params.failure_rate_threshold
        )
        for node in nodes
    )


@side_condition("accepts-multi-messages")
def _accepts_multi_messages(ctx: MatchContext, nodes: List[PatternNode], args: Tuple[str, ...]) -> bool:
    expected = not (args and args[0] == "false")
    return all((node.config.get("acceptsMultiMessages") == "true") == expected for node in nodes)


@side_condition("no-pattern-successor")
def _no_pattern_successor(ctx: MatchContext, nodes: List[PatternNode], args: Tuple[str, ...]) -> bool:
    return all(
        not any(ctx.host.node(s).is_pattern for s in ctx.host.successors(node.id))
        for node in nodes
    )


class ReduceRequestsRule(RewriteRule):
    """
    Reduce the pace or number of messages sent to a limited endpoint call.

    A Throttler is placed in front of the call; when the endpoint accepts
    multi-messages an Aggregator bundles the requests instead.
    """

    RULE_NAME = "reduce-requests"
    STRATEGY_TAG = Strategy.OS5
    DESCRIPTION = "Reduce requests to a limited endpoint"
    REQUIRES_COST_DATA = True

    def left_sides(self, graph: PatternGraph, params: RuleParameters) -> Iterable[LeftSide]:
        def call(*guards: str) -> NodePattern:
            return NodePattern(name="P1", kinds=CALL_KINDS, guards=("in-degree(1)", "overloaded") + guards)

        feeder = EdgePattern(source="X", target="P1")
        yield LeftSide(
            nodes=(call("accepts-multi-messages(false)"), NodePattern(name="X")),
            edges=(feeder,),
            interface=frozenset({"X", "P1"}),
            params={"variant": "throttle"},
        )
        yield LeftSide(
            nodes=(
                call("accepts-multi-messages"),
                NodePattern(name="X"),
                NodePattern(name="N", kinds=frozenset(PatternKind) - NON_PATTERN_KINDS),
            ),
            edges=(feeder, EdgePattern(source="P1", target="N")),
            interface=frozenset({"X", "P1", "N"}),
            params={"variant": "aggregate"},
        )
        yield LeftSide(
            nodes=(call("accepts-multi-messages", "no-pattern-successor"), NodePattern(name="X")),
            edges=(feeder,),
            interface=frozenset({"X", "P1"}),
            params={"variant": "aggregate"},
        )

    def right(self, match: Match) -> RightSide:
        source, target = match.node("X"), match.node("P1")
        offered = source.contract.out_elements
        contract = Contract(in_elements=offered, out_elements=offered)
        rhs = RightSide()
        rhs.relabel["P1"] = target.with_config(**{REDUCED: "true"})
        if match.params["variant"] == "throttle":
            reducer = rhs.add_fresh(
                "throttle",
                PatternKind.THROTTLER,
                properties=NodeProperties(configuration={"throttleFor": target.id}),
                contract=contract,
            )
        else:
            reducer = rhs.add_fresh(
                "aggregate",
                PatternKind.AGGREGATOR,
                properties=NodeProperties(configuration={"aggregateFor": target.id}),
                contract=contract,
            )
            if "N" in match.node_map:
                rhs.relabel["N"] = match.node("N").with_config(multiMessage="true")
                rhs.connect(Ref.node("P1"), Ref.node("N"), match.condition("P1", "N"))
        rhs.connect(Ref.node("X"), reducer, match.condition("X", "P1"))
        rhs.connect(reducer, Ref.node("P1"))
        return rhs
