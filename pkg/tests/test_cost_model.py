"""
Unit tests for the cost model, bottleneck detection and effect estimation.
"""

import pytest

from eipopt.cost.bottlenecks import detect_bottlenecks, neighbour_average, parallel_factor
from eipopt.cost.effects import estimate_effect
from eipopt.cost.model import critical_path_latency, effective_throughputs, process_metrics
from eipopt.engine import apply, find_matches
from eipopt.exceptions import CyclicGraphError
from eipopt.models.optimizer import RuleParameters
from eipopt.models.pattern_graph import PatternKind
from eipopt.rules.catalog import rule_combine_siblings, rule_dead_path_removal
from tests.builders import enricher, linear_process, make_graph, make_node, with_events


def throughputs(*values):
    return linear_process(*[enricher(f"n{i}", throughput=v) for i, v in enumerate(values, start=1)])


class TestLatency:
    """Tests for critical path latency."""

    def test_linear_sum(self):
        """Test that a sequence adds up."""
        graph = linear_process(enricher("a", latency=3), enricher("b", latency=4.5))
        assert critical_path_latency(graph) == 7.5

    def test_parallel_branches_take_max(self):
        """Test that the slower branch dominates."""
        nodes = [
            make_node("f", PatternKind.MULTICAST, latency=1),
            enricher("slow", latency=10),
            enricher("fast", latency=2),
            make_node("j", PatternKind.JOIN_ROUTER, latency=1),
        ]
        graph = with_events(nodes, [("f", "slow"), ("f", "fast"), ("slow", "j"), ("fast", "j")], "f", "j")
        assert critical_path_latency(graph) == 12

    def test_italy_latency(self, italy_graph):
        """Test the invoice-routing critical path."""
        assert critical_path_latency(italy_graph) == 67

    def test_cycle_raises(self):
        """Test that latency is undefined on cyclic graphs."""
        graph = make_graph(
            [make_node("start", PatternKind.START_EVENT), enricher("a"), enricher("b"),
             make_node("end", PatternKind.END_EVENT)],
            [("start", "a"), ("a", "b"), ("b", "a"), ("b", "end")],
        )
        with pytest.raises(CyclicGraphError):
            process_metrics(graph)


class TestThroughput:
    """Tests for effective throughput."""

    def test_minimum_of_nodes(self):
        """Test that the slowest pattern limits the process."""
        metrics = process_metrics(throughputs(100.0, 40.0, 80.0))
        assert metrics.throughput_msg_per_s == 40.0
        assert metrics.per_node_utilization == {"n1": 0.4, "n2": 1.0, "n3": 0.5}

    def test_unmeasured_is_unknown(self, italy_graph):
        """Test that a single unmeasured node makes throughput unknown."""
        metrics = process_metrics(italy_graph)
        assert metrics.throughput_msg_per_s is None
        assert metrics.throughput_text() == "unknown"
        assert metrics.complexity == 15

    def test_unmeasured_ids_reported(self):
        """Test the list of unmeasured nodes."""
        graph = linear_process(enricher("a", throughput=10.0), enricher("b"))
        effective, unmeasured = effective_throughputs(graph)
        assert effective is None
        assert unmeasured == ["b"]

    def test_replication_group(self):
        """Test n replicas of t count as n * t, capped by fork and join."""
        nodes = [
            make_node("f", PatternKind.BALANCING_FORK, throughput=500.0,
                      config={"replicationGroup": "g", "groupRole": "fork"}),
            enricher("r1", throughput=30.0, config={"replicationGroup": "g", "replica": "1"}),
            enricher("r2", throughput=30.0, config={"replicationGroup": "g", "replica": "2"}),
            enricher("r3", throughput=30.0, config={"replicationGroup": "g", "replica": "3"}),
            make_node("j", PatternKind.JOIN_ROUTER, throughput=70.0,
                      config={"replicationGroup": "g", "groupRole": "join"}),
        ]
        edges = [("f", "r1"), ("f", "r2"), ("f", "r3"), ("r1", "j"), ("r2", "j"), ("r3", "j")]
        graph = with_events(nodes, edges, "f", "j")
        assert process_metrics(graph).throughput_msg_per_s == 70.0

    def test_dead_nodes_not_traversed(self):
        """Test that nodes off every Start->End path are ignored."""
        router = make_node("r", PatternKind.CONTENT_BASED_ROUTER, throughput=90.0)
        graph = make_graph(
            [make_node("start", PatternKind.START_EVENT), router, enricher("dead"),
             make_node("end", PatternKind.END_EVENT)],
            [("start", "r"), ("r", "end", "ok"), ("r", "dead", "otherwise")],
        )
        assert process_metrics(graph).throughput_msg_per_s == 90.0


class TestBottlenecks:
    """Tests for bottleneck sub-sequence detection."""

    def test_two_node_run(self, params):
        """Test throughputs 200, 50, 60, 200 give the run n2, n3."""
        assert detect_bottlenecks(throughputs(200.0, 50.0, 60.0, 200.0), params) == [["n2", "n3"]]

    def test_no_bottleneck(self, params):
        """Test an even process."""
        assert detect_bottlenecks(throughputs(100.0, 90.0, 110.0), params) == []

    def test_ratio_is_strict(self):
        """Test that a node at exactly ratio times the reference is not a bottleneck."""
        graph = throughputs(100.0, 50.0, 100.0)
        assert detect_bottlenecks(graph, RuleParameters(bottleneck_ratio=0.5)) == []
        assert detect_bottlenecks(graph, RuleParameters(bottleneck_ratio=0.6)) == [["n2"]]

    def test_one_sided_reference(self, params):
        """Test that an unmeasured side is skipped."""
        graph = linear_process(
            enricher("n1", throughput=100.0), enricher("n2", throughput=20.0), enricher("n3"),
        )
        assert neighbour_average(graph, ["n2"]) == 100.0
        assert detect_bottlenecks(graph, params) == [["n2"]]

    def test_member_filter(self, params):
        """Test the extra membership restriction."""
        graph = throughputs(200.0, 50.0, 60.0, 200.0)
        assert detect_bottlenecks(graph, params, member=lambda node: node.id != "n3") == [["n2"]]

    def test_parallel_factor(self, params):
        """Test floor(reference / throughput) and its bounds."""
        graph = throughputs(200.0, 50.0, 60.0, 200.0)
        assert parallel_factor(graph, ["n2", "n3"], params) == 4
        assert parallel_factor(graph, ["n2", "n3"], RuleParameters(max_parallel=2)) == 2
        slow = throughputs(100.0, 60.0, 100.0)
        assert parallel_factor(slow, ["n2"], params) is None


class TestEffects:
    """Tests for estimate_effect()."""

    def test_combine_siblings_closed_form(self, italy_graph, params):
        """Test complexity -(k-1)|SG2| for the hoisted sign and dedup."""
        graph = apply(find_matches(rule_dead_path_removal(), italy_graph, params)[0], italy_graph)
        match = find_matches(rule_combine_siblings(), graph, params)[0]
        estimate = estimate_effect("combine-siblings", match, graph)
        assert estimate.delta_complexity == -2
        assert estimate.delta_latency_ms == 0
        assert estimate.delta_throughput_factor is None

    def test_measured_difference_without_closed_form(self, italy_graph, params):
        """Test that rules without a formula report the observed change."""
        match = find_matches(rule_dead_path_removal(), italy_graph, params)[0]
        estimate = estimate_effect("dead-path", match, italy_graph)
        assert estimate.delta_complexity == -1
        assert estimate.notes == ""

    def test_serializes_camel_case(self, italy_graph, params):
        """Test the report field names."""
        match = find_matches(rule_dead_path_removal(), italy_graph, params)[0]
        dumped = estimate_effect("dead-path", match, italy_graph).model_dump(by_alias=True)
        assert set(dumped) == {"deltaComplexity", "deltaLatencyMs", "deltaThroughputFactor", "notes"}
