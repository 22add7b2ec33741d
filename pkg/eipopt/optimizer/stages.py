"""
Stage plan of the optimizer.

Structure before data: simplification and parallelization reshape the
process first, data reduction and endpoint placement follow, interaction
rules come last.
"""

from typing import List, Tuple

from pydantic import BaseModel, ConfigDict

from eipopt.engine.rule import RewriteRule
from eipopt.models.optimizer import OptimizerConfig
from eipopt.rules.base import RuleCatalog


class Stage(BaseModel):
    """One step of the plan: rules tried in order until none matches."""
    model_config = ConfigDict(frozen=True)

    number: int
    name: str
    rules: Tuple[str, ...]

    def enabled_rules(self, catalog: RuleCatalog, config: OptimizerConfig) -> List[RewriteRule]:
        """Rules of this stage present in catalog and enabled by config."""
        enabled = []
        for name in self.rules:
            if name not in catalog:
                continue
            entry = catalog.get(name)
            if config.rule_enabled(name, entry.strategy, entry.enabled_by_default):
                enabled.append(entry.rule)
        return enabled


SIMPLIFICATION = (
    "redundant-subprocess",
    "dead-path",
    "combine-siblings",
    "unnecessary-fork-path",
    "fork-elimination",
)

STAGES: Tuple[Stage, ...] = (
    Stage(number=1, name="simplification", rules=SIMPLIFICATION + ("merge-parallel", "hetero-merge")),
    Stage(number=2, name="parallelization", rules=("sequence-to-parallel", "hetero-parallel")),
    Stage(number=3, name="simplification re-run", rules=SIMPLIFICATION),
    Stage(
        number=4,
        name="data reduction",
        rules=("early-claim-check", "early-split", "early-filter", "early-mapping", "early-aggregation"),
    ),
    Stage(number=5, name="endpoint placement", rules=("pushdown-endpoint",)),
    Stage(
        number=6,
        name="interaction",
        rules=("ignore-failing-endpoint", "retry-failing-endpoint", "reduce-requests"),
    ),
)


def stage_of(rule_name: str) -> int:
    """First stage a rule is scheduled in (0 when unscheduled)."""
    for stage in STAGES:
        if rule_name in stage.rules:
            return stage.number
    return 0
