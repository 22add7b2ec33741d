"""
Unit tests for the rewrite engine.

Tests matching, DPO application, fresh ids and fixed-point iteration using
the minimal rules in eipopt.rules.toy.
"""

import itertools
import random

import pytest

from eipopt.engine import (
    CloudParam,
    LeftSide,
    NodePattern,
    RewriteRule,
    RightSide,
    apply,
    apply_to_fixpoint,
    find_matches,
    fresh_id,
)
from eipopt.engine import conditions
from eipopt.engine.clouds import bind_branch, cloud_binder
from eipopt.engine.conditions import MatchContext
from eipopt.engine.rule import Match
from eipopt.exceptions import RewriteError, RuleConfigurationError, StaleMatchError
from eipopt.models.diagnostics import has_errors
from eipopt.models.optimizer import Strategy
from eipopt.models.pattern_graph import PatternKind
from eipopt.pgraph import model_complexity, validate
from eipopt.rules.catalog import (
    rule_early_filter,
    rule_ignore_failing_endpoint,
    rule_pushdown_to_endpoint,
    rule_reduce_requests,
    rule_retry_failing_endpoint,
)
from eipopt.rules.toy import ForkEliminationRule, IdentityRule, RelabelRule
from tests.builders import enricher, linear_process, make_graph, make_node, random_process


def multicast(node_id):
    return make_node(node_id, PatternKind.MULTICAST)


class UnknownConditionRule(RewriteRule):
    RULE_NAME = "unknown-condition"
    STRATEGY_TAG = Strategy.OS1

    def left_sides(self, graph, params):
        yield LeftSide(nodes=(NodePattern(name="P", guards=("no-such-condition",)),), interface=frozenset({"P"}))

    def right(self, match):
        return RightSide()


class RelabelDeletedRule(RewriteRule):
    RULE_NAME = "relabel-deleted"
    STRATEGY_TAG = Strategy.OS1

    def left_sides(self, graph, params):
        yield LeftSide(
            nodes=(NodePattern(name="P", kinds=frozenset({PatternKind.CONTENT_ENRICHER})),),
            interface=frozenset(),
        )

    def right(self, match):
        rhs = RightSide()
        rhs.relabel["P"] = match.node("P")
        return rhs


class TestForkElimination:
    """Tests for single-successor fork removal."""

    def test_removes_fork(self, params):
        """Test A -> F -> B becomes A -> B."""
        graph = linear_process(enricher("a"), multicast("f"), enricher("b"))
        matches = find_matches(ForkEliminationRule(), graph, params)
        assert len(matches) == 1
        assert matches[0].node_map == {"F": "f", "A": "a", "B": "b"}

        result = apply(matches[0], graph)
        assert "f" not in result
        assert result.has_edge("a", "b")
        assert model_complexity(result) == model_complexity(graph) - 1
        assert validate(result) == []

    def test_keeps_incoming_condition(self, params):
        """Test that the A -> F condition moves to A -> B."""
        router = make_node("r", PatternKind.CONTENT_BASED_ROUTER)
        graph = make_graph(
            [make_node("start", PatternKind.START_EVENT), router, multicast("f"), enricher("b"),
             enricher("c"), make_node("end", PatternKind.END_EVENT)],
            [("start", "r"), ("r", "f", "x > 1"), ("r", "c", "otherwise"), ("f", "b"), ("b", "end"), ("c", "end")],
        )
        result = apply(find_matches(ForkEliminationRule(), graph, params)[0], graph)
        assert result.edges_between("r", "b")[0].condition == "x > 1"

    def test_two_successors_do_not_match(self, params):
        """Test that a real fork is left alone."""
        graph = make_graph(
            [make_node("start", PatternKind.START_EVENT), multicast("f"), enricher("a"), enricher("b"),
             make_node("end", PatternKind.END_EVENT)],
            [("start", "f"), ("f", "a"), ("f", "b"), ("a", "end"), ("b", "end")],
        )
        assert find_matches(ForkEliminationRule(), graph, params) == []

    def test_conditional_out_edge_does_not_match(self, params):
        """Test that the fork output must be unconditional."""
        graph = make_graph(
            [make_node("start", PatternKind.START_EVENT), multicast("f"), make_node("end", PatternKind.END_EVENT)],
            [("start", "f"), ("f", "end", "flag")],
        )
        assert find_matches(ForkEliminationRule(), graph, params) == []


class TestApply:
    """Tests for DPO application."""

    def test_identity_leaves_graph_unchanged(self, params):
        """Test that L = K = R reproduces the host."""
        graph = linear_process(enricher("a", config={"source": "db"}))
        match = find_matches(IdentityRule(), graph, params)[0]
        result = apply(match, graph)
        assert result.nodes == graph.nodes
        assert set(result.edges) == set(graph.edges)

    def test_relabel_keeps_id_and_edges(self, params):
        """Test that relabelling rewrites configuration in place."""
        graph = linear_process(enricher("a"))
        rule = RelabelRule("mode", "fast")
        match = next(m for m in find_matches(rule, graph, params) if m.node_map["P"] == "a")
        result = apply(match, graph)
        assert result.node("a").config["mode"] == "fast"
        assert "mode" not in result.node("start").config
        assert set(result.edges) == set(graph.edges)

    def test_stale_match(self, params):
        """Test that a match cannot be applied to another revision."""
        graph = linear_process(enricher("a"), multicast("f"), enricher("b"))
        match = find_matches(ForkEliminationRule(), graph, params)[0]
        other = graph.with_node(enricher("a", config={"changed": "yes"}))
        with pytest.raises(StaleMatchError):
            apply(match, other)

    def test_relabel_of_deleted_item(self, params):
        """Test that relabelling outside the interface is rejected."""
        graph = make_graph([enricher("a")], [])
        match = find_matches(RelabelDeletedRule(), graph, params)[0]
        with pytest.raises(RewriteError, match="non-interface"):
            apply(match, graph)

    def test_unknown_side_condition(self, params):
        """Test that unknown condition identifiers are configuration errors."""
        with pytest.raises(RuleConfigurationError, match="no-such-condition"):
            find_matches(UnknownConditionRule(), linear_process(enricher("a")), params)

    def test_fresh_ids_are_deterministic(self):
        """Test content-addressed fresh ids."""
        first = fresh_id("early-filter", "abc123", "filter")
        assert first == fresh_id("early-filter", "abc123", "filter")
        assert first.startswith("early-filter-filter-")
        assert len(first.rsplit("-", 1)[1]) == 8
        assert first != fresh_id("early-filter", "abc124", "filter")

    def test_matches_sorted_by_fingerprint(self, params):
        """Test deterministic match order."""
        graph = linear_process(enricher("a"), enricher("b"), enricher("c"))
        matches = find_matches(IdentityRule(), graph, params)
        assert [m.fingerprint for m in matches] == sorted(m.fingerprint for m in matches)
        assert {m.node_map["P"] for m in matches} == {"a", "b", "c"}


@cloud_binder("listed")
def bind_listed(ctx, cloud):
    yield tuple(cloud.options["nodes"]), {}


class ListedCloudRule(RewriteRule):
    """A multicast and a join around a fixed cloud."""

    RULE_NAME = "listed-cloud"
    STRATEGY_TAG = Strategy.OS1

    def __init__(self, members):
        self.members = list(members)
        super().__init__()

    def left_sides(self, graph, params):
        yield LeftSide(
            nodes=(
                NodePattern(name="A", kinds=frozenset({PatternKind.MULTICAST})),
                NodePattern(name="B", kinds=frozenset({PatternKind.JOIN_ROUTER})),
            ),
            clouds=(CloudParam(name="C", binder="listed", boundary=("A", "B"), options={"nodes": self.members}),),
            interface=frozenset({"A", "B", "C"}),
        )

    def right(self, match):
        return RightSide()


class TestCloudAdmission:
    """Tests for the connectivity and convexity checks on bound clouds."""

    def diamond(self):
        """start -> a -> (x | y) -> b -> end."""
        return make_graph(
            [make_node("start", PatternKind.START_EVENT), multicast("a"), enricher("x"), enricher("y"),
             make_node("b", PatternKind.JOIN_ROUTER), make_node("end", PatternKind.END_EVENT)],
            [("start", "a"), ("a", "x"), ("a", "y"), ("x", "b"), ("y", "b"), ("b", "end")],
        )

    def test_single_branch_admitted(self, params):
        """Test that one branch between the attachments binds."""
        matches = find_matches(ListedCloudRule(["x"]), self.diamond(), params)
        assert len(matches) == 1
        assert matches[0].bindings["C"].nodes == ("x",)

    def test_disconnected_cloud_rejected(self, params):
        """Test that two parallel branches do not form one cloud."""
        assert find_matches(ListedCloudRule(["x", "y"]), self.diamond(), params) == []

    def test_path_through_attachment_rejected(self, params):
        """Test that a cloud left and re-entered through an outside node is not convex."""
        graph = make_graph(
            [make_node("start", PatternKind.START_EVENT), multicast("a"), enricher("x"), enricher("y"),
             make_node("b", PatternKind.JOIN_ROUTER)],
            [("start", "a"), ("a", "x"), ("x", "y"), ("x", "b"), ("b", "y")],
        )
        assert find_matches(ListedCloudRule(["x", "y"]), graph, params) == []

    def test_convex_chain_admitted(self, params):
        """Test that the same chain binds once the detour is gone."""
        graph = make_graph(
            [make_node("start", PatternKind.START_EVENT), multicast("a"), enricher("x"), enricher("y"),
             make_node("b", PatternKind.JOIN_ROUTER), make_node("end", PatternKind.END_EVENT)],
            [("start", "a"), ("a", "x"), ("x", "y"), ("x", "b"), ("b", "end")],
        )
        matches = find_matches(ListedCloudRule(["x", "y"]), graph, params)
        assert [m.bindings["C"].nodes for m in matches] == [("x", "y")]


class TestBranchBinder:
    """Tests for fork-region branches and endpoint reachability."""

    def context(self, graph, params, **node_map):
        return MatchContext(graph, params, {}, node_map)

    def test_branches_stop_at_join(self, params):
        """Test that each branch is the region from a fork successor up to the join."""
        graph = make_graph(
            [multicast("f"), enricher("x1"), enricher("x2"), enricher("y"),
             make_node("j", PatternKind.JOIN_ROUTER), enricher("after")],
            [("f", "x1"), ("x1", "x2"), ("x2", "j"), ("f", "y"), ("y", "j"), ("j", "after")],
        )
        cloud = CloudParam(name="SG", binder="branch", boundary=("F", "J"), determines=("J",))
        found = list(bind_branch(self.context(graph, params, F="f"), cloud))
        assert found == [(("x1", "x2"), {"J": "j"}), (("y",), {"J": "j"})]

    def test_branch_with_outside_entry_rejected(self, params):
        """Test that a region entered from outside the fork is not a branch."""
        graph = make_graph(
            [enricher("p"), multicast("f"), enricher("x1"), enricher("x2"), enricher("y"),
             make_node("j", PatternKind.JOIN_ROUTER)],
            [("p", "f"), ("p", "x2"), ("f", "x1"), ("x1", "x2"), ("x2", "j"), ("f", "y"), ("y", "j")],
        )
        cloud = CloudParam(name="SG", binder="branch", boundary=("F", "J"), determines=("J",))
        found = list(bind_branch(self.context(graph, params, F="f"), cloud))
        assert found == [(("y",), {"J": "j"})]

    def test_endpoint_reachability(self, params):
        """Test that endpoints downstream of the nodes are found."""
        graph = make_graph(
            [enricher("a"), enricher("b"), make_node("e", PatternKind.EXTERNAL_ENDPOINT), enricher("c")],
            [("a", "b"), ("b", "e"), ("c", "b")],
        )
        ctx = self.context(graph, params)
        assert not conditions.holds("no-endpoint-reachable", ctx, [graph.node("a")])
        assert not conditions.holds("no-endpoint-reachable", ctx, [graph.node("e")])
        assert conditions.holds("no-endpoint-reachable", ctx, [])
        other = make_graph([enricher("a"), enricher("b")], [("a", "b")])
        assert conditions.holds("no-endpoint-reachable", self.context(other, params), [other.node("a")])


class TestFixpoint:
    """Tests for apply_to_fixpoint()."""

    def test_converges(self, params):
        """Test that a chain of forks is fully removed."""
        graph = linear_process(enricher("a"), multicast("f1"), multicast("f2"), enricher("b"))
        result = apply_to_fixpoint([ForkEliminationRule()], graph, params=params)
        assert result.converged
        assert len(result.steps) == 2
        assert [s.index for s in result.steps] == [1, 2]
        assert all(s.complexity_delta == -1 for s in result.steps)
        assert all(s.node_count_delta == -1 for s in result.steps)
        assert result.graph.has_edge("a", "b")

    def test_unpacks_as_pair(self, params):
        """Test tuple unpacking of the result."""
        graph, steps = apply_to_fixpoint([ForkEliminationRule()], linear_process(enricher("a")), params=params)
        assert steps == []
        assert "a" in graph

    def test_budget_exhaustion_is_reported(self, params):
        """Test budget stop for rules that undo each other (benefit guards prevent this for parallelize/merge)."""
        graph = linear_process(enricher("a"))
        rules = [RelabelRule("mode", "a"), RelabelRule("mode", "b")]
        result = apply_to_fixpoint(rules, graph, budget=10, params=params)
        assert not result.converged
        assert len(result.steps) == 10

    def test_budget_must_be_positive(self, params):
        """Test that a zero budget is rejected."""
        with pytest.raises(ValueError):
            apply_to_fixpoint([IdentityRule()], linear_process(enricher("a")), budget=0, params=params)

    def test_first_index(self, params):
        """Test step numbering offset."""
        graph = linear_process(enricher("a"), multicast("f"), enricher("b"))
        result = apply_to_fixpoint([ForkEliminationRule()], graph, params=params, first_index=5)
        assert result.steps[0].index == 5
        assert result.steps[0].rule == "fork-elimination"
        assert result.steps[0].deleted == ["f"]


CLOUD_FREE_RULES = {
    "early-filter": rule_early_filter,
    "pushdown-endpoint": rule_pushdown_to_endpoint,
    "ignore-failing-endpoint": rule_ignore_failing_endpoint,
    "retry-failing-endpoint": rule_retry_failing_endpoint,
    "reduce-requests": rule_reduce_requests,
    "fork-elimination": ForkEliminationRule,
    "identity": IdentityRule,
    "relabel": lambda: RelabelRule("mode", "fast"),
}


def random_host(seed, params):
    """Random process; one failing call is suppressed and cooled down so retries have work."""
    graph = random_process(random.Random(seed))
    suppressions = find_matches(rule_ignore_failing_endpoint(), graph, params)
    if suppressions:
        graph = apply(suppressions[0], graph)
        call = graph.node(suppressions[0].node_map["P1"])
        graph = graph.with_node(call.with_config(cooldownElapsed="true"))
    return graph


def brute_force_matches(rule, graph, params):
    """Fingerprints of every injective, kind-preserving assignment satisfying L."""
    found = set()
    for left in rule.left_sides(graph, params):
        assert not left.clouds
        pools = [
            [n.id for n in graph.iter_nodes() if n.kind is not None and (p.kinds is None or n.kind in p.kinds)]
            for p in left.nodes
        ]
        for assignment in itertools.product(*pools):
            if len(set(assignment)) != len(assignment):
                continue
            node_map = {p.name: host_id for p, host_id in zip(left.nodes, assignment)}
            covered = set()
            present = True
            for edge in left.edges:
                accepted = [
                    e for e in graph.edges_between(node_map[edge.source], node_map[edge.target])
                    if edge.accepts(e)
                ]
                present = present and bool(accepted)
                covered.update(e.key for e in accepted)
            if not present:
                continue
            if any(
                a.group is not None and a.group == b.group and not node_map[a.name] < node_map[b.name]
                for i, a in enumerate(left.nodes)
                for b in left.nodes[i + 1:]
            ):
                continue
            ctx = MatchContext(graph, params, left.params, node_map)
            if not all(
                conditions.holds(g, ctx, [graph.node(node_map[p.name])]) for p in left.nodes for g in p.guards
            ):
                continue
            if not all(conditions.holds(g, ctx, []) for g in left.guards):
                continue
            match = Match(rule, left, graph, node_map, {}, frozenset(covered))
            incident = [
                e for node_id in match.deleted_nodes for e in graph.in_edges(node_id) + graph.out_edges(node_id)
            ]
            if any(e.key not in match.covered_edges for e in incident):
                continue
            found.add(match.fingerprint)
    return found


class TestRandomGraphs:
    """Seeded random processes checked against a brute-force oracle."""

    @pytest.mark.parametrize("seed", range(500))
    @pytest.mark.parametrize("rule_name", sorted(CLOUD_FREE_RULES))
    def test_matches_agree_with_oracle(self, rule_name, seed, params):
        """Test that every and only the valid occurrences are matched."""
        rule = CLOUD_FREE_RULES[rule_name]()
        graph = random_host(seed, params)
        matches = find_matches(rule, graph, params)
        assert {m.fingerprint for m in matches} == brute_force_matches(rule, graph, params)
        for match in matches:
            assert len(set(match.node_map.values())) == len(match.node_map)
            for pattern in match.left.nodes:
                assert pattern.kinds is None or match.node(pattern.name).kind in pattern.kinds

    @pytest.mark.parametrize("seed", range(300))
    @pytest.mark.parametrize("rule_name", sorted(CLOUD_FREE_RULES))
    def test_application_is_safe(self, rule_name, seed, params):
        """Test that applying any match keeps the graph valid and only touches its image."""
        rule = CLOUD_FREE_RULES[rule_name]()
        graph = random_host(seed, params)
        for match in find_matches(rule, graph, params):
            result = apply(match, graph)
            assert not has_errors(validate(result))
            image = set(match.image)
            untouched = set(graph.nodes) - image
            assert all(result.node(node_id) == graph.node(node_id) for node_id in untouched)
            outside = {e.key for e in graph.edges if e.source in untouched and e.target in untouched}
            assert outside <= {e.key for e in result.edges}
            deleted = set(graph.nodes) - set(result.nodes)
            assert deleted <= set(match.deleted_nodes)
            assert all(graph.node(node_id).properties.side_effect_free for node_id in deleted)
