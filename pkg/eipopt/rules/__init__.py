"""
Optimization rule catalog.

Importing this package registers every rule module's side-conditions and
cloud binders.
"""

from eipopt.rules.base import CatalogEntry, RuleCatalog
from eipopt.rules.catalog import (
    build_default_catalog,
    rule_combine_siblings,
    rule_dead_path_removal,
    rule_early_aggregation,
    rule_early_claim_check,
    rule_early_filter,
    rule_early_mapping,
    rule_early_split,
    rule_heterogeneous_merge,
    rule_heterogeneous_parallel,
    rule_ignore_failing_endpoint,
    rule_merge_parallel,
    rule_pushdown_to_endpoint,
    rule_reduce_requests,
    rule_redundant_subprocess,
    rule_retry_failing_endpoint,
    rule_sequence_to_parallel,
    rule_unnecessary_fork_paths,
)
from eipopt.rules.toy import ForkEliminationRule, IdentityRule, RelabelRule

__all__ = [
    "CatalogEntry",
    "RuleCatalog",
    "build_default_catalog",
    "rule_combine_siblings",
    "rule_dead_path_removal",
    "rule_early_aggregation",
    "rule_early_claim_check",
    "rule_early_filter",
    "rule_early_mapping",
    "rule_early_split",
    "rule_heterogeneous_merge",
    "rule_heterogeneous_parallel",
    "rule_ignore_failing_endpoint",
    "rule_merge_parallel",
    "rule_pushdown_to_endpoint",
    "rule_reduce_requests",
    "rule_redundant_subprocess",
    "rule_retry_failing_endpoint",
    "rule_sequence_to_parallel",
    "rule_unnecessary_fork_paths",
    "ForkEliminationRule",
    "IdentityRule",
    "RelabelRule",
]
