"""
Fixed-point iteration of a rule list.

Each round takes the first rule (in list order) that has a match, applies its
first match by fingerprint and re-scans. Exhausting the budget is reported
through the converged flag, never raised.
"""

import logging
from typing import Callable, List, Optional, Sequence

from eipopt.engine.dpo import apply
from eipopt.engine.matcher import find_matches
from eipopt.engine.rule import Match, RewriteRule
from eipopt.models.metrics import EffectEstimate
from eipopt.models.optimizer import RuleParameters
from eipopt.models.pattern_graph import PatternGraph
from eipopt.models.report import AppliedStep
from eipopt.pgraph.metrics import model_complexity
from eipopt.utils.logger import log_with_context

logger = logging.getLogger(__name__)

EffectHook = Callable[[Match, PatternGraph, PatternGraph], Optional[EffectEstimate]]


class FixpointResult:
    """Final graph, the steps taken and whether no rule matched at the end."""

    def __init__(self, graph: PatternGraph, steps: List[AppliedStep], converged: bool):
        self.graph = graph
        self.steps = steps
        self.converged = converged

    def __iter__(self):
        return iter((self.graph, self.steps))

    def __repr__(self) -> str:
        return f"FixpointResult(steps={len(self.steps)}, converged={self.converged})"


def apply_to_fixpoint(
    rules: Sequence[RewriteRule],
    graph: PatternGraph,
    budget: int = 10_000,
    params: Optional[RuleParameters] = None,
    effect: Optional[EffectHook] = None,
    test_mode: bool = False,
    first_index: int = 1,
) -> FixpointResult:
    """
    Rewrite graph until no rule matches or budget applications were made.

    Args:
        rules: Rules in priority order.
        graph: Input graph.
        budget: Maximum number of applications (>= 1).
        params: Rule thresholds; defaults from settings.
        effect: Optional estimator called with (match, before, after).
        test_mode: Validate every intermediate graph.
        first_index: Index given to the first recorded step.

    Returns:
        FixpointResult; unpacks as (graph, steps).
    """
    if budget < 1:
        raise ValueError("budget must be >= 1")
    params = params or RuleParameters.from_settings()
    steps: List[AppliedStep] = []
    current = graph

    while True:
        match = _first_match(rules, current, params)
        if match is None:
            return FixpointResult(current, steps, converged=True)
        if len(steps) >= budget:
            logger.warning(f"Fixpoint budget of {budget} applications exhausted")
            return FixpointResult(current, steps, converged=False)

        result = apply(match, current, test_mode=test_mode)
        step = AppliedStep(
            index=first_index + len(steps),
            rule=match.rule.name,
            strategy=match.rule.strategy.value,
            fingerprint=match.fingerprint,
            nodes=sorted(set(match.image)),
            created=sorted(set(result.nodes) - set(current.nodes)),
            deleted=sorted(set(current.nodes) - set(result.nodes)),
            complexity_delta=model_complexity(result) - model_complexity(current),
            node_count_delta=len(result) - len(current),
            effect=effect(match, current, result) if effect is not None else None,
        )
        log_with_context(
            logger,
            "info",
            f"Applied {step.rule}",
            step=step.index,
            fingerprint=step.fingerprint[:12],
            delta=step.complexity_delta,
        )
        steps.append(step)
        current = result


def _first_match(
    rules: Sequence[RewriteRule], graph: PatternGraph, params: RuleParameters
) -> Optional[Match]:
    for rule in rules:
        matches = find_matches(rule, graph, params)
        if matches:
            return matches[0]
    return None
