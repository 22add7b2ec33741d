"""
Command-line interface.

Usage:
    python -m eipopt validate process.json
    python -m eipopt optimize process.json -o out.json --report report.json --strategies os1
    python -m eipopt explain process.json --strategies os1,os3
    python -m eipopt export-dot process.json -o process.dot
    python -m eipopt metrics process.json

Exit status: 0 on success, 1 on invalid input, 2 on usage errors.
"""

import argparse
import json
import logging
import os
import sys
import tempfile
from pathlib import Path
from typing import Dict, List, Optional, Sequence

from pydantic import ValidationError

from eipopt.cost.model import process_metrics
from eipopt.exceptions import CyclicGraphError, EipOptError, RuleConfigurationError, SchemaError
from eipopt.models.diagnostics import has_errors
from eipopt.models.optimizer import OptimizerConfig, Strategy
from eipopt.models.pattern_graph import PatternGraph
from eipopt.optimizer import explain, optimize
from eipopt.pgraph.codec import load_graph, serialize
from eipopt.pgraph.dot import export_dot
from eipopt.pgraph.metrics import model_complexity
from eipopt.pgraph.validation import validate
from eipopt.rules.catalog import build_default_catalog
from eipopt.utils.logger import setup_logging

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_USAGE = 2


class UsageError(Exception):
    """Invalid flag value detected after argument parsing."""


# ============================================================================
# Output
# ============================================================================

def write_atomic(path: Path, data: bytes) -> None:
    """Write data to path through a temporary file in the same directory."""
    path = Path(path)
    directory = path.parent if str(path.parent) else Path(".")
    handle = tempfile.NamedTemporaryFile(dir=directory, prefix=f".{path.name}.", delete=False)
    try:
        with handle:
            handle.write(data)
        os.replace(handle.name, path)
    except BaseException:
        Path(handle.name).unlink(missing_ok=True)
        raise


def _emit(data: bytes, path: Optional[str]) -> None:
    if path:
        write_atomic(Path(path), data)
    else:
        sys.stdout.write(data.decode("utf-8"))


# ============================================================================
# Flag Parsing
# ============================================================================

def parse_strategies(text: str) -> frozenset:
    try:
        return frozenset(Strategy.parse(part) for part in text.split(",") if part.strip())
    except ValueError:
        raise UsageError(f"unknown strategy in '{text}' (expected os1..os5)") from None


def parse_rule_flags(text: str, known: Sequence[str]) -> Dict[str, bool]:
    """Parse "+name,-name,name" into per-rule enable flags."""
    flags: Dict[str, bool] = {}
    for part in (p.strip() for p in text.split(",")):
        if not part:
            continue
        enabled = not part.startswith("-")
        name = part.lstrip("+-")
        if name not in known:
            raise UsageError(f"unknown rule '{name}'")
        flags[name] = enabled
    return flags


def build_config(args: argparse.Namespace, rule_names: Sequence[str]) -> OptimizerConfig:
    overrides: Dict[str, object] = {
        "budget": args.budget,
        "bottleneck_ratio": args.bottleneck_ratio,
        "max_parallel": args.max_parallel,
    }
    if args.strategies:
        overrides["enabled_strategies"] = parse_strategies(args.strategies)
    if args.rules:
        overrides["rule_overrides"] = parse_rule_flags(args.rules, rule_names)
    try:
        return OptimizerConfig.from_settings(**overrides)
    except ValidationError as e:
        error = e.errors()[0]
        field = ".".join(str(part) for part in error["loc"])
        raise UsageError(f"{field}: {error['msg']}") from None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="eipopt",
        description="Rule-based optimizer for integration process graphs",
    )
    commands = parser.add_subparsers(dest="command", required=True)

    def with_input(name: str, help_text: str) -> argparse.ArgumentParser:
        command = commands.add_parser(name, help=help_text)
        command.add_argument("input", help="Process-JSON file")
        return command

    with_input("validate", "Check a process graph")
    with_input("metrics", "Print complexity, latency and throughput")
    dot = with_input("export-dot", "Render a process graph as DOT")
    dot.add_argument("-o", "--output", help="Output file (default: stdout)")

    for name, help_text in (("optimize", "Optimize a process graph"), ("explain", "Describe an optimization")):
        command = with_input(name, help_text)
        command.add_argument("--strategies", help="Comma-separated strategy groups, e.g. os1,os3")
        command.add_argument("--rules", help="Comma-separated rule flags, e.g. +fork-elimination,-early-split")
        command.add_argument("--budget", type=int, help="Maximum number of rule applications")
        command.add_argument("--bottleneck-ratio", type=float, help="Bottleneck threshold ratio")
        command.add_argument("--max-parallel", type=int, help="Upper bound of the parallelization factor")
        if name == "optimize":
            command.add_argument("-o", "--output", help="Optimized graph file (default: stdout)")
            command.add_argument("--report", help="Report JSON file")
            command.add_argument("--dot", help="DOT rendering of the optimized graph")
    return parser


# ============================================================================
# Commands
# ============================================================================

def _load(path: str) -> PatternGraph:
    try:
        return load_graph(path)
    except OSError as e:
        raise EipOptError(f"cannot read {path}: {e.strerror or e}") from None
    except SchemaError as e:
        raise EipOptError(f"{path}: {e}") from None


def cmd_validate(args: argparse.Namespace) -> int:
    graph = _load(args.input)
    diagnostics = validate(graph)
    for diagnostic in diagnostics:
        print(str(diagnostic))
    if has_errors(diagnostics):
        return EXIT_INVALID
    print(f"{args.input}: valid ({len(graph)} nodes)")
    return EXIT_OK


def cmd_metrics(args: argparse.Namespace) -> int:
    graph = _load(args.input)
    print(f"complexity={model_complexity(graph)}")
    try:
        metrics = process_metrics(graph)
    except CyclicGraphError as e:
        print(f"latency_ms=undefined ({e})")
        return EXIT_OK
    print(f"latency_ms={metrics.latency_ms:g}")
    print(f"throughput_msg_per_s={metrics.throughput_text()}")
    return EXIT_OK


def cmd_export_dot(args: argparse.Namespace) -> int:
    graph = _load(args.input)
    _emit(export_dot(graph, name=Path(args.input).stem).encode("utf-8"), args.output)
    return EXIT_OK


def cmd_optimize(args: argparse.Namespace) -> int:
    catalog = build_default_catalog()
    config = build_config(args, catalog.names())
    graph = _load(args.input)
    result, report = optimize(graph, config, catalog)

    if args.report:
        document = json.dumps(report.to_json_dict(), indent=2, sort_keys=True) + "\n"
        write_atomic(Path(args.report), document.encode("utf-8"))
    if args.dot:
        write_atomic(Path(args.dot), export_dot(result, name=Path(args.input).stem).encode("utf-8"))
    _emit(serialize(result), args.output)
    logger.info(
        f"{args.input}: complexity {report.metrics_before.complexity} -> "
        f"{report.metrics_after.complexity} in {len(report.steps)} steps"
    )
    return EXIT_OK


def cmd_explain(args: argparse.Namespace) -> int:
    catalog = build_default_catalog()
    config = build_config(args, catalog.names())
    _, report = optimize(_load(args.input), config, catalog)
    print(explain(report))
    return EXIT_OK


COMMANDS = {
    "validate": cmd_validate,
    "metrics": cmd_metrics,
    "export-dot": cmd_export_dot,
    "optimize": cmd_optimize,
    "explain": cmd_explain,
}


def run(argv: Optional[List[str]] = None) -> int:
    """
    Execute one CLI invocation.

    Returns:
        Process exit status.
    """
    setup_logging()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code else EXIT_OK

    try:
        return COMMANDS[args.command](args)
    except (UsageError, RuleConfigurationError) as e:
        print(f"eipopt: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except EipOptError as e:
        print(f"eipopt: error: {e}", file=sys.stderr)
        return EXIT_INVALID


def main() -> None:
    sys.exit(run(sys.argv[1:]))
