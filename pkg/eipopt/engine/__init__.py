"""
Double-pushout graph-rewriting engine with relabelling and cloud parameters.
"""

from eipopt.engine.rule import (
    CloudParam,
    CloudUse,
    EdgePattern,
    LeftSide,
    Match,
    NodePattern,
    Ref,
    RewriteRule,
    RightSide,
)
from eipopt.engine.matcher import find_matches
from eipopt.engine.dpo import apply, fresh_id
from eipopt.engine.fixpoint import FixpointResult, apply_to_fixpoint

__all__ = [
    "CloudParam",
    "CloudUse",
    "EdgePattern",
    "LeftSide",
    "Match",
    "NodePattern",
    "Ref",
    "RewriteRule",
    "RightSide",
    "find_matches",
    "apply",
    "fresh_id",
    "FixpointResult",
    "apply_to_fixpoint",
]
