"""
Unit tests for the parallelization rules.
"""

import pytest

from eipopt.cost.effects import estimate_effect
from eipopt.cost.model import process_metrics
from eipopt.engine import apply, apply_to_fixpoint, find_matches
from eipopt.exceptions import RuleConfigurationError
from eipopt.models.optimizer import RuleParameters
from eipopt.models.pattern_graph import PatternKind
from eipopt.optimizer import optimize
from eipopt.pgraph import model_complexity
from eipopt.rules.catalog import (
    rule_heterogeneous_merge,
    rule_heterogeneous_parallel,
    rule_merge_parallel,
    rule_sequence_to_parallel,
)
from eipopt.rules.parallelization import dependency_groups
from tests.builders import enricher, linear_process, make_node, with_events


def bottleneck_process():
    """Throughputs 200, 50, 60, 200: n2 and n3 form the bottleneck."""
    return linear_process(
        enricher("n1", throughput=200.0),
        enricher("n2", throughput=50.0, config={"step": "a"}),
        enricher("n3", throughput=60.0, config={"step": "b"}),
        enricher("n4", throughput=200.0),
    )


def replicated_block(n, k, fork_throughput=10.0):
    """p -> BalancingFork -> n identical branches of k nodes -> join -> s."""
    nodes = [
        enricher("p", throughput=500.0),
        make_node("f", PatternKind.BALANCING_FORK, throughput=fork_throughput),
        make_node("j", PatternKind.JOIN_ROUTER),
        enricher("s", throughput=500.0),
    ]
    edges = [("p", "f"), ("j", "s")]
    for i in range(1, n + 1):
        ids = [f"b{i}_{j}" for j in range(1, k + 1)]
        nodes += [
            enricher(node_id, throughput=50.0, config={"replicationGroup": "g", "replica": str(i), "step": str(j)})
            for j, node_id in enumerate(ids, start=1)
        ]
        edges += [("f", ids[0])] + list(zip(ids, ids[1:])) + [(ids[-1], "j")]
    return with_events(nodes, edges, "p", "s")


def independent_chain(throughput=None):
    """p offers {a}; x and y both only read a and write distinct elements."""
    nodes = [
        make_node("p", PatternKind.MESSAGE_FILTER, read_only=True, ins={"a"}, outs={"a"}),
        enricher("x", ins={"a"}, outs={"a", "x"}, throughput=throughput),
        enricher("y", ins={"a"}, outs={"a", "y"}, throughput=throughput),
        enricher("s"),
    ]
    return linear_process(*nodes)


class TestSequenceToParallel:
    """Tests for bottleneck replication."""

    def test_derived_factor(self, params):
        """Test n = floor(200 / 50) = 4 replicas of the two-node run."""
        graph = bottleneck_process()
        (match,) = find_matches(rule_sequence_to_parallel(), graph, params)
        assert match.params["n"] == 4
        assert match.cloud_ids("SSQ") == ("n2", "n3")

        result = apply(match, graph, test_mode=True)
        assert model_complexity(result) - model_complexity(graph) == (4 - 1) * 2 + 2
        (fork,) = result.nodes_of_kind(PatternKind.BALANCING_FORK)
        assert result.out_degree(fork.id) == 4
        assert result.predecessors(fork.id) == ["n1"]
        (join,) = result.nodes_of_kind(PatternKind.JOIN_ROUTER)
        assert result.successors(join.id) == ["n4"]

    def test_throughput_improves(self, params):
        """Test that four replicas lift the bottleneck to 200 msg/s."""
        graph = bottleneck_process()
        result = apply_to_fixpoint([rule_sequence_to_parallel()], graph, params=params)
        assert result.converged
        assert len(result.steps) == 1
        assert process_metrics(graph).throughput_msg_per_s == 50.0
        assert process_metrics(result.graph).throughput_msg_per_s == 200.0

    def test_explicit_factor(self, params):
        """Test a fixed parallelization factor."""
        graph = bottleneck_process()
        (match,) = find_matches(rule_sequence_to_parallel(3), graph, params)
        result = apply(match, graph)
        assert model_complexity(result) == model_complexity(graph) + (3 - 1) * 2 + 2

    def test_factor_below_two_rejected(self):
        """Test parameter validation."""
        with pytest.raises(RuleConfigurationError):
            rule_sequence_to_parallel(1)

    def test_limiting_fork_blocks(self):
        """Test that a slow runtime fork prevents replication."""
        params = RuleParameters(fork_throughput=30.0)
        assert find_matches(rule_sequence_to_parallel(), bottleneck_process(), params) == []

    def test_unmeasured_process_untouched(self, params):
        """Test that missing cost data means no bottleneck."""
        graph = linear_process(enricher("a"), enricher("b"))
        assert find_matches(rule_sequence_to_parallel(), graph, params) == []

    def test_max_parallel_clamps(self):
        """Test that the factor never exceeds max_parallel."""
        params = RuleParameters(max_parallel=3)
        (match,) = find_matches(rule_sequence_to_parallel(), bottleneck_process(), params)
        assert match.params["n"] == 3


class TestMergeParallel:
    """Tests for merging a limiting replication."""

    def test_round_trip_with_sequence_to_parallel(self, params):
        """Test that merging a throttled replication restores the sequence."""
        graph = bottleneck_process()
        parallel = apply_to_fixpoint([rule_sequence_to_parallel()], graph, params=params).graph
        (fork,) = parallel.nodes_of_kind(PatternKind.BALANCING_FORK)
        throttled = parallel.with_node(fork.with_cost(throughput_msg_per_s=40.0))

        result = apply_to_fixpoint([rule_merge_parallel()], throttled, params=params)
        assert len(result.steps) == 1
        assert set(result.graph.nodes) == set(graph.nodes)
        assert result.graph.node("n2").config == {"step": "a"}
        assert result.graph.has_edge("n1", "n2") and result.graph.has_edge("n3", "n4")

    def test_fast_fork_not_merged(self, params):
        """Test that a non-limiting fork is kept."""
        graph = replicated_block(2, 2, fork_throughput=1000.0)
        assert find_matches(rule_merge_parallel(), graph, params) == []

    @pytest.mark.parametrize("n", [2, 3, 4])
    @pytest.mark.parametrize("k", [1, 2, 3, 4])
    def test_closed_form_matches_application(self, n, k, params):
        """Test complexity change -((n-1)k + 2) against the applied rewrite."""
        graph = replicated_block(n, k)
        matches = find_matches(rule_merge_parallel(), graph, params)
        assert matches
        after = apply(matches[0], graph)
        estimate = estimate_effect("merge-parallel", matches[0], graph, after)
        assert estimate.delta_complexity == -((n - 1) * k + 2)
        assert model_complexity(after) - model_complexity(graph) == estimate.delta_complexity
        assert "(n-1)k + 2" in estimate.notes


class TestHeteroParallel:
    """Tests for heterogeneous parallelization and its inverse."""

    def test_dependency_groups(self):
        """Test partitioning by read/write dependencies."""
        a = enricher("a", ins={"m"}, outs={"m", "x"})
        b = enricher("b", ins={"x"}, outs={"x", "y"})
        c = enricher("c", ins={"m"}, outs={"m", "z"})
        assert dependency_groups([a, b, c]) == [[0, 1], [2]]

    def test_independent_nodes_parallelized(self, params):
        """Test the fork, join and aggregator around two branches."""
        graph = independent_chain()
        (match,) = find_matches(rule_heterogeneous_parallel(), graph, params)
        result = apply(match, graph, test_mode=True)

        assert model_complexity(result) - model_complexity(graph) == 3
        assert estimate_effect("hetero-parallel", match, graph, result).delta_complexity == 3
        (fork,) = result.nodes_of_kind(PatternKind.MULTICAST)
        assert set(result.successors(fork.id)) == {"x", "y"}
        (aggregate,) = result.nodes_of_kind(PatternKind.AGGREGATOR)
        assert result.successors(aggregate.id) == ["s"]
        assert result.node("x").config["parallelBlock"] == fork.config["parallelBlock"]
        assert result.node("x").config["independence"] == "verified"

    def test_dependent_chain_not_parallelized(self, params):
        """Test that a chain with a single dependency group is left alone."""
        graph = linear_process(
            make_node("p", PatternKind.MESSAGE_FILTER, read_only=True, ins={"a"}, outs={"a"}),
            enricher("x", ins={"a"}, outs={"a", "x"}),
            enricher("y", ins={"x"}, outs={"a", "x", "y"}),
            enricher("s"),
        )
        assert find_matches(rule_heterogeneous_parallel(), graph, params) == []

    def test_block_is_not_parallelized_again(self, params):
        """Test that annotated block members are skipped."""
        result = apply_to_fixpoint([rule_heterogeneous_parallel()], independent_chain(), params=params)
        assert result.converged
        assert len(result.steps) == 1

    def test_merge_limiting_block(self, params):
        """Test that a slow join sequentializes the block again."""
        graph = independent_chain(throughput=100.0)
        parallel = apply_to_fixpoint([rule_heterogeneous_parallel()], graph, params=params).graph
        (join,) = parallel.nodes_of_kind(PatternKind.JOIN_ROUTER)
        throttled = parallel.with_node(join.with_cost(throughput_msg_per_s=10.0))

        (match,) = find_matches(rule_heterogeneous_merge(), throttled, params)
        result = apply(match, throttled, test_mode=True)
        assert model_complexity(result) == model_complexity(graph)
        assert estimate_effect("hetero-merge", match, throttled, result).delta_complexity == -3
        assert result.successors("p") == ["x"]
        assert result.successors("x") == ["y"]
        assert result.successors("y") == ["s"]
        assert result.node("x").config == {}

    def test_fast_block_kept(self, params):
        """Test that an unlimited block is not merged."""
        parallel = apply_to_fixpoint(
            [rule_heterogeneous_parallel()], independent_chain(throughput=100.0), params=params
        ).graph
        assert find_matches(rule_heterogeneous_merge(), parallel, params) == []


def test_replicated_block_shape():
    """Test the helper graph used by the merge tests."""
    graph = replicated_block(3, 2)
    assert model_complexity(graph) == 3 * 2 + 4


class TestStagedRun:
    """Tests for parallelization rules inside a full optimizer run."""

    def test_no_group_both_merged_and_created(self, full_config):
        """Test that a merged replication is re-parallelized once and then left alone."""
        graph = replicated_block(2, 1)
        result, report = optimize(graph, full_config)
        assert report.converged

        merges = [s for s in report.steps if s.rule == "merge-parallel"]
        replications = [s for s in report.steps if s.rule == "sequence-to-parallel"]
        merged = {
            graph.node(node_id).config.get("replicationGroup")
            for step in merges
            for node_id in step.deleted
            if node_id in graph
        } - {None}
        created = {
            result.node(node_id).config.get("replicationGroup")
            for step in replications
            for node_id in step.created
            if node_id in result
        } - {None}
        assert merged == {"g"}
        assert created
        assert not merged & created
        created_ids = {node_id for step in replications for node_id in step.created}
        assert not any(created_ids & set(step.deleted) for step in merges)

        _, again = optimize(result, full_config)
        assert again.steps == []
