"""
Rule factories and the default catalog.

Catalog order is the order rules are tried within a stage.
"""

from typing import Optional

from eipopt.engine.rule import RewriteRule
from eipopt.rules.base import RuleCatalog
from eipopt.rules.data_reduction import (
    EarlyAggregationRule,
    EarlyClaimCheckRule,
    EarlyFilterRule,
    EarlyMappingRule,
    EarlySplitRule,
    PushdownEndpointRule,
)
from eipopt.rules.interaction import IgnoreFailingEndpointRule, ReduceRequestsRule, RetryFailingEndpointRule
from eipopt.rules.parallelization import (
    HeteroMergeRule,
    HeteroParallelRule,
    MergeParallelRule,
    SequenceToParallelRule,
)
from eipopt.rules.simplification import (
    CombineSiblingsRule,
    DeadPathRule,
    RedundantSubprocessRule,
    UnnecessaryForkPathRule,
)
from eipopt.rules.toy import ForkEliminationRule


# ============================================================================
# Process Simplification
# ============================================================================

def rule_redundant_subprocess() -> RewriteRule:
    return RedundantSubprocessRule()


def rule_dead_path_removal() -> RewriteRule:
    return DeadPathRule()


def rule_combine_siblings() -> RewriteRule:
    return CombineSiblingsRule()


def rule_unnecessary_fork_paths() -> RewriteRule:
    return UnnecessaryForkPathRule()


# ============================================================================
# Data Reduction and Placement
# ============================================================================

def rule_early_filter() -> RewriteRule:
    return EarlyFilterRule()


def rule_early_mapping() -> RewriteRule:
    return EarlyMappingRule()


def rule_early_aggregation() -> RewriteRule:
    return EarlyAggregationRule()


def rule_early_claim_check() -> RewriteRule:
    return EarlyClaimCheckRule()


def rule_early_split() -> RewriteRule:
    return EarlySplitRule()


def rule_pushdown_to_endpoint() -> RewriteRule:
    return PushdownEndpointRule()


# ============================================================================
# Parallelization
# ============================================================================

def rule_sequence_to_parallel(n: Optional[int] = None) -> RewriteRule:
    """
    Args:
        n: Fixed parallelization factor; derived from the neighbour
            throughputs of each bottleneck when omitted.

    Raises:
        RuleConfigurationError: n < 2.
    """
    return SequenceToParallelRule({"n": n})


def rule_merge_parallel() -> RewriteRule:
    return MergeParallelRule()


def rule_heterogeneous_parallel() -> RewriteRule:
    return HeteroParallelRule()


def rule_heterogeneous_merge() -> RewriteRule:
    return HeteroMergeRule()


# ============================================================================
# Interaction
# ============================================================================

def rule_ignore_failing_endpoint() -> RewriteRule:
    return IgnoreFailingEndpointRule()


def rule_retry_failing_endpoint() -> RewriteRule:
    return RetryFailingEndpointRule()


def rule_reduce_requests() -> RewriteRule:
    return ReduceRequestsRule()


def build_default_catalog(parallel_factor: Optional[int] = None) -> RuleCatalog:
    """Catalog of every shipped rule in scheduling order."""
    return RuleCatalog([
        rule_redundant_subprocess(),
        rule_dead_path_removal(),
        rule_combine_siblings(),
        rule_unnecessary_fork_paths(),
        rule_early_claim_check(),
        rule_early_split(),
        rule_early_filter(),
        rule_early_mapping(),
        rule_early_aggregation(),
        rule_sequence_to_parallel(parallel_factor),
        rule_merge_parallel(),
        rule_heterogeneous_parallel(),
        rule_heterogeneous_merge(),
        rule_pushdown_to_endpoint(),
        rule_ignore_failing_endpoint(),
        rule_retry_failing_endpoint(),
        rule_reduce_requests(),
        ForkEliminationRule(),
    ])
