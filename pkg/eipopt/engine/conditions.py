"""
Side-condition registry.

Side-conditions are referenced from rules by identifier, optionally with
arguments naming other L items: "isomorphic-to(SG1)". Rule modules register
their own conditions with the side_condition decorator; unknown identifiers
raise RuleConfigurationError when a rule is matched.
"""

import re
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import networkx as nx

from eipopt.exceptions import RuleConfigurationError
from eipopt.models.optimizer import RuleParameters
from eipopt.models.pattern_graph import CALL_KINDS, PatternGraph, PatternKind, PatternNode

_EXPRESSION = re.compile(r"^\s*([A-Za-z][\w-]*)\s*(?:\(([^()]*)\))?\s*$")

ENDPOINT_KINDS = CALL_KINDS | {PatternKind.EXTERNAL_ENDPOINT}
ANNOTATION_KEYS = ("parallelBlock", "replicationGroup")


class MatchContext:
    """Partial match state handed to binders and side-conditions."""

    def __init__(
        self,
        host: PatternGraph,
        params: RuleParameters,
        variant: Dict[str, object],
        node_map: Optional[Dict[str, str]] = None,
        bindings: Optional[Dict[str, object]] = None,
    ):
        self.host = host
        self.params = params
        self.variant = variant
        self.node_map: Dict[str, str] = dict(node_map or {})
        self.bindings: Dict[str, object] = dict(bindings or {})

    def node(self, name: str) -> PatternNode:
        return self.host.node(self.node_map[name])

    def cloud_ids(self, name: str) -> Tuple[str, ...]:
        return self.bindings[name].nodes  # type: ignore[attr-defined]

    def cloud(self, name: str) -> List[PatternNode]:
        return [self.host.node(node_id) for node_id in self.cloud_ids(name)]

    def bound(self, name: str) -> bool:
        return name in self.node_map or name in self.bindings


SideCondition = Callable[[MatchContext, List[PatternNode], Tuple[str, ...]], bool]

SIDE_CONDITIONS: Dict[str, SideCondition] = {}


def side_condition(name: str) -> Callable[[SideCondition], SideCondition]:
    """Register a side-condition under name."""
    def register(fn: SideCondition) -> SideCondition:
        SIDE_CONDITIONS[name] = fn
        return fn
    return register


def parse_expression(expression: str) -> Tuple[str, Tuple[str, ...]]:
    found = _EXPRESSION.match(expression)
    if not found:
        raise RuleConfigurationError(f"malformed side-condition: {expression!r}")
    name, raw_args = found.group(1), found.group(2)
    args = tuple(a.strip() for a in raw_args.split(",") if a.strip()) if raw_args else ()
    return name, args


def resolve(expression: str) -> Tuple[SideCondition, Tuple[str, ...]]:
    name, args = parse_expression(expression)
    try:
        return SIDE_CONDITIONS[name], args
    except KeyError:
        raise RuleConfigurationError(f"unknown side-condition: {name}") from None


def holds(expression: str, ctx: MatchContext, nodes: Sequence[PatternNode]) -> bool:
    fn, args = resolve(expression)
    return fn(ctx, list(nodes), args)


# ============================================================================
# Built-in Conditions
# ============================================================================

@side_condition("side-effect-free")
def _side_effect_free(ctx: MatchContext, nodes: List[PatternNode], args: Tuple[str, ...]) -> bool:
    return all(node.properties.side_effect_free for node in nodes)


@side_condition("read-only")
def _read_only(ctx: MatchContext, nodes: List[PatternNode], args: Tuple[str, ...]) -> bool:
    return all(node.properties.read_only for node in nodes)


@side_condition("message-access-free")
def _message_access_free(ctx: MatchContext, nodes: List[PatternNode], args: Tuple[str, ...]) -> bool:
    return all(not node.properties.message_access for node in nodes)


@side_condition("no-endpoint")
def _no_endpoint(ctx: MatchContext, nodes: List[PatternNode], args: Tuple[str, ...]) -> bool:
    return all(node.kind not in ENDPOINT_KINDS for node in nodes)


@side_condition("no-endpoint-reachable")
def _no_endpoint_reachable(ctx: MatchContext, nodes: List[PatternNode], args: Tuple[str, ...]) -> bool:
    view = ctx.host.to_networkx()
    reached = {node.id for node in nodes}
    for node in nodes:
        reached |= nx.descendants(view, node.id)
    return all(ctx.host.node(node_id).kind not in ENDPOINT_KINDS for node_id in reached)


@side_condition("end-unreachable")
def _end_unreachable(ctx: MatchContext, nodes: List[PatternNode], args: Tuple[str, ...]) -> bool:
    from eipopt.pgraph.reachability import end_reachable
    live = end_reachable(ctx.host)
    return all(node.id not in live for node in nodes)


@side_condition("unannotated")
def _unannotated(ctx: MatchContext, nodes: List[PatternNode], args: Tuple[str, ...]) -> bool:
    keys = args or ANNOTATION_KEYS
    return all(key not in node.config for node in nodes for key in keys)


@side_condition("config-equals")
def _config_equals(ctx: MatchContext, nodes: List[PatternNode], args: Tuple[str, ...]) -> bool:
    key, value = args
    return all(node.config.get(key) == value for node in nodes)


@side_condition("measured")
def _measured(ctx: MatchContext, nodes: List[PatternNode], args: Tuple[str, ...]) -> bool:
    return all(node.throughput is not None for node in nodes)


@side_condition("isomorphic-to")
def _isomorphic_to(ctx: MatchContext, nodes: List[PatternNode], args: Tuple[str, ...]) -> bool:
    from eipopt.pgraph.isomorphism import subgraph_isomorphic
    other, ignored = args[0], args[1:]
    mine = ctx.host.subgraph(node.id for node in nodes)
    theirs = ctx.host.subgraph(ctx.cloud_ids(other))
    return subgraph_isomorphic(theirs, mine, ignore_keys=ignored) is not None


@side_condition("element-set-untouched")
def _element_set_untouched(ctx: MatchContext, nodes: List[PatternNode], args: Tuple[str, ...]) -> bool:
    from eipopt.rules.contracts import writes_all
    (anchor,) = args
    return not (writes_all(nodes) & ctx.node(anchor).contract.out_elements)


@side_condition("in-degree")
def _in_degree(ctx: MatchContext, nodes: List[PatternNode], args: Tuple[str, ...]) -> bool:
    expected = int(args[0])
    return all(ctx.host.in_degree(node.id) == expected for node in nodes)


@side_condition("out-degree")
def _out_degree(ctx: MatchContext, nodes: List[PatternNode], args: Tuple[str, ...]) -> bool:
    expected = int(args[0])
    return all(ctx.host.out_degree(node.id) == expected for node in nodes)


@side_condition("out-degree-at-least")
def _out_degree_at_least(ctx: MatchContext, nodes: List[PatternNode], args: Tuple[str, ...]) -> bool:
    minimum = int(args[0])
    return all(ctx.host.out_degree(node.id) >= minimum for node in nodes)


@side_condition("annotated")
def _annotated(ctx: MatchContext, nodes: List[PatternNode], args: Tuple[str, ...]) -> bool:
    return all(key in node.config for node in nodes for key in args)


@side_condition("end-reachable")
def _end_reachable(ctx: MatchContext, nodes: List[PatternNode], args: Tuple[str, ...]) -> bool:
    from eipopt.pgraph.reachability import end_reachable
    live = end_reachable(ctx.host)
    return all(node.id in live for node in nodes)
