"""
Bottleneck sub-sequence detection.

A bottleneck is a maximal run of adjacent 1:1 measured pattern nodes whose
highest throughput stays below bottleneck_ratio times the mean throughput of
the nearest measured neighbours before and after the run. Unmeasured nodes
between a run and its neighbours are skipped; when only one side is
measured, that side alone is the reference.
"""

import logging
import math
from typing import Callable, List, Optional, Sequence, Tuple

from eipopt.engine.clouds import maximal_runs
from eipopt.models.optimizer import RuleParameters
from eipopt.models.pattern_graph import PatternGraph, PatternNode

logger = logging.getLogger(__name__)

NodeFilter = Callable[[PatternNode], bool]


def nearest_measured(graph: PatternGraph, node_id: str, forward: bool) -> Optional[float]:
    """Throughput of the closest measured node strictly before/after node_id."""
    step = graph.successors if forward else graph.predecessors
    seen = {node_id}
    following = step(node_id)
    while len(following) == 1 and following[0] not in seen:
        current = following[0]
        seen.add(current)
        throughput = graph.node(current).throughput
        if throughput is not None:
            return throughput
        following = step(current)
    return None


def neighbour_average(graph: PatternGraph, run: Sequence[str]) -> Optional[float]:
    """Arithmetic mean over the measured neighbours of a run."""
    values = [
        value
        for value in (
            nearest_measured(graph, run[0], forward=False),
            nearest_measured(graph, run[-1], forward=True),
        )
        if value is not None
    ]
    if not values:
        return None
    return sum(values) / len(values)


def run_throughput(graph: PatternGraph, run: Sequence[str]) -> Optional[float]:
    values = [graph.node(node_id).throughput for node_id in run]
    if any(value is None for value in values):
        return None
    return min(values)


def detect_bottlenecks(
    graph: PatternGraph,
    config: Optional[RuleParameters] = None,
    member: Optional[NodeFilter] = None,
) -> List[List[str]]:
    """
    Find bottleneck sub-sequences.

    Args:
        graph: Process graph.
        config: Supplies bottleneck_ratio; defaults from settings.
        member: Extra restriction on the nodes a run may contain.

    Returns:
        Node-id lists in host order; runs never overlap.
    """
    config = config or RuleParameters.from_settings()

    def eligible(node: PatternNode) -> bool:
        return node.throughput is not None and (member is None or member(node))

    found: List[List[str]] = []
    for segment, _, _ in maximal_runs(graph, eligible):
        found.extend(_scan_segment(graph, list(segment), config.bottleneck_ratio))
    logger.debug(f"detect_bottlenecks: {len(found)} runs (ratio {config.bottleneck_ratio})")
    return found


def _scan_segment(graph: PatternGraph, segment: List[str], ratio: float) -> List[List[str]]:
    candidates: List[Tuple[int, int]] = []
    for i in range(len(segment)):
        for j in range(i, len(segment)):
            run = segment[i:j + 1]
            reference = neighbour_average(graph, run)
            if reference is None:
                continue
            highest = max(graph.node(node_id).throughput for node_id in run)
            if highest < ratio * reference:
                candidates.append((i, j))

    chosen: List[Tuple[int, int]] = []
    for i, j in sorted(candidates, key=lambda span: (span[0] - span[1], span[0])):
        if all(j < a or i > b for a, b in chosen):
            chosen.append((i, j))
    return [segment[i:j + 1] for i, j in sorted(chosen)]


def parallel_factor(
    graph: PatternGraph,
    run: Sequence[str],
    params: RuleParameters,
) -> Optional[int]:
    """
    Replication factor for a bottleneck run.

    n = floor(neighbour average / run throughput), clamped to
    [min_parallel, max_parallel]; None when the floor is below min_parallel
    or data is missing.
    """
    reference = neighbour_average(graph, run)
    throughput = run_throughput(graph, run)
    if reference is None or throughput is None:
        return None
    factor = math.floor(reference / throughput)
    if factor < params.min_parallel:
        return None
    return min(factor, params.max_parallel)
