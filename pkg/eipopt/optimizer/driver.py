"""
Stratified optimization driver.

Runs the stage plan once in order, each stage to its own fixed point. The
simplification stage after parallelization is the only re-run of a rule set.
"""

import logging
from typing import List, Optional, Tuple

from eipopt.cost.effects import estimate_effect
from eipopt.cost.model import process_metrics
from eipopt.engine.dpo import apply
from eipopt.engine.fixpoint import apply_to_fixpoint
from eipopt.engine.matcher import find_matches
from eipopt.engine.rule import Match
from eipopt.exceptions import CyclicGraphError, GraphError, RewriteError
from eipopt.models.diagnostics import Diagnostic, Severity, has_errors
from eipopt.models.metrics import EffectEstimate, ProcessMetrics
from eipopt.models.optimizer import OptimizerConfig
from eipopt.models.pattern_graph import PatternGraph
from eipopt.models.report import AppliedStep, OptimizationReport, StageReport
from eipopt.optimizer.stages import STAGES
from eipopt.pgraph.metrics import model_complexity
from eipopt.pgraph.validation import validate
from eipopt.rules.base import RuleCatalog
from eipopt.rules.catalog import build_default_catalog
from eipopt.utils.logger import log_with_context

logger = logging.getLogger(__name__)


def _metrics(graph: PatternGraph) -> ProcessMetrics:
    try:
        return process_metrics(graph)
    except CyclicGraphError:
        logger.warning("Process graph is cyclic; reporting complexity only")
        return ProcessMetrics(complexity=model_complexity(graph))


def _effect(match: Match, before: PatternGraph, after: PatternGraph) -> Optional[EffectEstimate]:
    return estimate_effect(match.rule.effect_estimator, match, before, after)


def optimize(
    graph: PatternGraph,
    config: Optional[OptimizerConfig] = None,
    catalog: Optional[RuleCatalog] = None,
) -> Tuple[PatternGraph, OptimizationReport]:
    """
    Optimize a process graph.

    Args:
        graph: Valid input graph.
        config: Strategy selection and thresholds; defaults from settings.
        catalog: Rules to draw from; the default catalog when omitted.

    Returns:
        (optimized graph, report). Exhausting the budget sets
        report.converged to False and returns the partial result.

    Raises:
        GraphError: graph has structural errors.
    """
    config = config or OptimizerConfig.from_settings()
    catalog = catalog or build_default_catalog()
    params = config.rule_parameters

    errors = [d for d in validate(graph) if d.severity == Severity.ERROR]
    if errors:
        raise GraphError("cannot optimize an invalid graph: " + "; ".join(str(d) for d in errors))

    metrics_before = _metrics(graph)
    logger.info(
        f"Optimizing {len(graph)} nodes (complexity {metrics_before.complexity}) "
        f"with strategies {sorted(s.value for s in config.enabled_strategies)}"
    )

    current = graph
    steps: List[AppliedStep] = []
    stages: List[StageReport] = []
    converged = True

    for stage in STAGES:
        rules = stage.enabled_rules(catalog, config)
        if not rules:
            continue
        remaining = config.budget - len(steps)
        if remaining < 1:
            if any(find_matches(rule, current, params) for rule in rules):
                converged = False
                break
            continue
        result = apply_to_fixpoint(
            rules,
            current,
            budget=remaining,
            params=params,
            effect=_effect,
            test_mode=config.test_mode,
            first_index=len(steps) + 1,
        )
        stage_steps = [step.model_copy(update={"stage": stage.number}) for step in result.steps]
        stages.append(StageReport(
            stage=stage.number,
            name=stage.name,
            rules=[rule.name for rule in rules],
            first_step=len(steps) + 1,
            step_count=len(stage_steps),
            converged=result.converged,
        ))
        steps.extend(stage_steps)
        current = result.graph
        if not result.converged:
            converged = False
            break

    if not converged:
        logger.warning(f"Optimization did not converge within {config.budget} applications")

    diagnostics: List[Diagnostic] = []
    for entry in catalog:
        if config.rule_enabled(entry.name, entry.strategy, entry.enabled_by_default):
            diagnostics.extend(entry.rule.diagnose(current, params))

    report = OptimizationReport(
        steps=steps,
        stages=stages,
        metrics_before=metrics_before,
        metrics_after=_metrics(current),
        converged=converged,
        diagnostics=diagnostics,
    )
    log_with_context(
        logger,
        "info",
        "Optimization finished",
        steps=len(steps),
        complexity_before=report.metrics_before.complexity,
        complexity_after=report.metrics_after.complexity,
        converged=converged,
    )
    return current, report


def replay(
    graph: PatternGraph,
    report: OptimizationReport,
    catalog: Optional[RuleCatalog] = None,
    config: Optional[OptimizerConfig] = None,
) -> PatternGraph:
    """
    Re-apply the steps of report to graph.

    Raises:
        RewriteError: A recorded step has no match with its fingerprint.
    """
    catalog = catalog or build_default_catalog()
    params = (config or OptimizerConfig.from_settings()).rule_parameters
    current = graph
    for step in report.steps:
        rule = catalog.get(step.rule).rule
        match = next(
            (m for m in find_matches(rule, current, params) if m.fingerprint == step.fingerprint),
            None,
        )
        if match is None:
            raise RewriteError(f"step {step.index}: no {step.rule} match {step.fingerprint[:12]}")
        current = apply(match, current)
    if has_errors(validate(current)):
        logger.warning("Replayed graph has structural errors")
    return current
