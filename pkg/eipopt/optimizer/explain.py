"""
Plain-text narrative of an optimization report.
"""

from typing import List

from eipopt.models.report import AppliedStep, OptimizationReport

MAX_LISTED_NODES = 8


def _nodes(step: AppliedStep) -> str:
    shown = step.nodes[:MAX_LISTED_NODES]
    more = len(step.nodes) - len(shown)
    text = ", ".join(shown)
    return f"{text}, +{more} more" if more > 0 else text


def _step_line(step: AppliedStep) -> str:
    line = f"  {step.index}. {step.rule} on [{_nodes(step)}]: complexity {step.complexity_delta:+d}"
    effect = step.effect
    if effect is not None:
        if effect.delta_latency_ms:
            line += f", latency {effect.delta_latency_ms:+g} ms"
        if effect.delta_throughput_factor is not None:
            line += f", throughput x{effect.delta_throughput_factor:.3g}"
        if effect.notes:
            line += f" ({effect.notes})"
    return line


def explain(report: OptimizationReport) -> str:
    """Human-readable per-stage account of report."""
    if not report.steps:
        return "no optimizations applied"

    lines: List[str] = []
    for stage in report.stages:
        if not stage.step_count:
            continue
        stage_steps = [step for step in report.steps if step.stage == stage.stage]
        plural = "s" if stage.step_count != 1 else ""
        lines.append(f"Stage {stage.stage} ({stage.name}): {stage.step_count} application{plural}")
        lines.extend(_step_line(step) for step in stage_steps)

    before, after = report.metrics_before, report.metrics_after
    lines.append(
        f"complexity {before.complexity} -> {after.complexity}, "
        f"latency {before.latency_ms:g} -> {after.latency_ms:g} ms, "
        f"throughput {before.throughput_text()} -> {after.throughput_text()} msg/s"
    )
    if not report.converged:
        lines.append("stopped: application budget exhausted")
    for diagnostic in report.diagnostics:
        lines.append(str(diagnostic))
    return "\n".join(lines)
