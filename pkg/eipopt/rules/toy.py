"""
Minimal rules for exercising the rewrite engine.
"""

from typing import Iterable, List, Tuple

from eipopt.engine.conditions import MatchContext, side_condition
from eipopt.engine.rule import EdgePattern, LeftSide, Match, NodePattern, Ref, RewriteRule, RightSide
from eipopt.models.optimizer import RuleParameters, Strategy
from eipopt.models.pattern_graph import PatternGraph, PatternKind, PatternNode


@side_condition("config-differs")
def _config_differs(ctx: MatchContext, nodes: List[PatternNode], args: Tuple[str, ...]) -> bool:
    key, value = args
    return all(node.config.get(key) != value for node in nodes)


class ForkEliminationRule(RewriteRule):
    """A -> F -> B becomes A -> B for an unconditional single-successor Multicast F."""

    RULE_NAME = "fork-elimination"
    STRATEGY_TAG = Strategy.OS1
    DESCRIPTION = "Remove a single-successor fork"
    ENABLED_BY_DEFAULT = False

    def left_sides(self, graph: PatternGraph, params: RuleParameters) -> Iterable[LeftSide]:
        yield LeftSide(
            nodes=(
                NodePattern(
                    name="F",
                    kinds=frozenset({PatternKind.MULTICAST}),
                    guards=("in-degree(1)", "out-degree(1)"),
                ),
                NodePattern(name="A"),
                NodePattern(name="B"),
            ),
            edges=(
                EdgePattern(source="A", target="F"),
                EdgePattern(source="F", target="B", conditional=False),
            ),
            interface=frozenset({"A", "B"}),
        )

    def right(self, match: Match) -> RightSide:
        rhs = RightSide()
        rhs.connect(Ref.node("A"), Ref.node("B"), match.condition("A", "F"))
        return rhs


class IdentityRule(RewriteRule):
    """L = K = R over a single node of the given kind."""

    RULE_NAME = "identity"
    STRATEGY_TAG = Strategy.OS1
    ENABLED_BY_DEFAULT = False

    def __init__(self, kind: PatternKind = PatternKind.CONTENT_ENRICHER):
        self.kind = kind
        super().__init__()

    def left_sides(self, graph: PatternGraph, params: RuleParameters) -> Iterable[LeftSide]:
        yield LeftSide(
            nodes=(NodePattern(name="P", kinds=frozenset({self.kind})),),
            interface=frozenset({"P"}),
        )

    def right(self, match: Match) -> RightSide:
        return RightSide()


class RelabelRule(RewriteRule):
    """Rewrite one configuration property: p -> p' on every node where it differs."""

    STRATEGY_TAG = Strategy.OS1
    ENABLED_BY_DEFAULT = False

    def __init__(self, key: str, value: str):
        self.key = key
        self.value = value
        super().__init__({"key": key, "value": value})

    @property
    def name(self) -> str:
        return f"relabel-{self.key}-{self.value}"

    def left_sides(self, graph: PatternGraph, params: RuleParameters) -> Iterable[LeftSide]:
        yield LeftSide(
            nodes=(NodePattern(name="P", guards=(f"config-differs({self.key}, {self.value})",)),),
            interface=frozenset({"P"}),
        )

    def right(self, match: Match) -> RightSide:
        rhs = RightSide()
        rhs.relabel["P"] = match.node("P").with_config(**{self.key: self.value})
        return rhs
