"""
Per-rule effect estimation.

Rules with a closed-form complexity effect register an estimator here; the
latency and throughput parts always come from comparing process metrics of
the graph before and after a speculative application.
"""

import logging
from typing import Callable, Dict, Optional, Tuple

from eipopt.engine.rule import Match
from eipopt.exceptions import CyclicGraphError
from eipopt.models.metrics import EffectEstimate, ProcessMetrics
from eipopt.models.pattern_graph import PatternGraph
from eipopt.pgraph.metrics import model_complexity
from eipopt.cost.model import process_metrics

logger = logging.getLogger(__name__)

ClosedForm = Callable[[Match], Tuple[int, str]]

EFFECT_ESTIMATORS: Dict[str, ClosedForm] = {}


def effect_estimator(name: str) -> Callable[[ClosedForm], ClosedForm]:
    """Register the closed-form complexity effect of a rule."""
    def register(fn: ClosedForm) -> ClosedForm:
        EFFECT_ESTIMATORS[name] = fn
        return fn
    return register


# ============================================================================
# Closed Forms
# ============================================================================

@effect_estimator("merge-parallel")
def _merge_parallel(match: Match) -> Tuple[int, str]:
    n = int(match.params["n"])
    k = len(match.cloud_ids("B1"))
    delta = -((n - 1) * k + 2)
    return delta, f"complexity -((n-1)k + 2) with n={n}, k={k}: {delta}"


@effect_estimator("sequence-to-parallel")
def _sequence_to_parallel(match: Match) -> Tuple[int, str]:
    n = int(match.params["n"])
    k = len(match.cloud_ids("SSQ"))
    delta = (n - 1) * k + 2
    return delta, f"complexity +((n-1)k + 2) with n={n}, k={k}: +{delta}"


@effect_estimator("hetero-parallel")
def _hetero_parallel(match: Match) -> Tuple[int, str]:
    return 3, "complexity +3 (fork, join router, aggregator)"


@effect_estimator("hetero-merge")
def _hetero_merge(match: Match) -> Tuple[int, str]:
    return -3, "complexity -3 (fork, join router, aggregator removed)"


@effect_estimator("combine-siblings")
def _combine_siblings(match: Match) -> Tuple[int, str]:
    k = int(match.params["k"])
    size = len(match.cloud_ids("C1"))
    delta = -(k - 1) * size
    return delta, f"complexity -(k-1)|SG2| with k={k}, |SG2|={size}: {delta}"


@effect_estimator("redundant-subprocess")
def _redundant_subprocess(match: Match) -> Tuple[int, str]:
    n = int(match.params["n"])
    m = int(match.params["m"])
    size = len(match.cloud_ids("SG2"))
    delta = n + m - size - 2
    return delta, f"complexity n + m - |SG2| - 2 with n={n}, m={m}, |SG2|={size}: {delta}"


# ============================================================================
# Estimation
# ============================================================================

def _metrics(graph: PatternGraph) -> Optional[ProcessMetrics]:
    try:
        return process_metrics(graph)
    except CyclicGraphError:
        return None


def estimate_effect(
    rule_name: str,
    match: Match,
    graph: PatternGraph,
    after: Optional[PatternGraph] = None,
) -> EffectEstimate:
    """
    Predict the effect of applying match to graph.

    Args:
        rule_name: Estimator name (usually the rule name).
        match: Match found in graph.
        graph: Graph before the application.
        after: Result of the application, if already computed.

    Returns:
        EffectEstimate; throughput factor None when unknown.
    """
    if after is None:
        from eipopt.engine.dpo import apply
        after = apply(match, graph)

    notes = []
    closed_form = EFFECT_ESTIMATORS.get(rule_name)
    if closed_form is not None:
        delta_complexity, formula = closed_form(match)
        notes.append(formula)
    else:
        delta_complexity = model_complexity(after) - model_complexity(graph)

    before_metrics = _metrics(graph)
    after_metrics = _metrics(after)
    delta_latency = 0.0
    factor: Optional[float] = None
    if before_metrics is None or after_metrics is None:
        notes.append("latency undefined on cyclic graph")
    else:
        delta_latency = after_metrics.latency_ms - before_metrics.latency_ms
        if before_metrics.throughput_msg_per_s and after_metrics.throughput_msg_per_s:
            factor = after_metrics.throughput_msg_per_s / before_metrics.throughput_msg_per_s

    if factor is None and match.rule.REQUIRES_COST_DATA:
        notes.append("throughput unknown: missing cost data")
        logger.warning(f"{match.rule.name}: missing cost data, throughput effect unknown")

    return EffectEstimate(
        delta_complexity=delta_complexity,
        delta_latency_ms=delta_latency,
        delta_throughput_factor=factor,
        notes="; ".join(notes),
    )
