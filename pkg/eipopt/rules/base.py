"""
Rule catalog.

The catalog maps rule names to rule instances together with their strategy
tag and whether they run by default. It is built once and only read
afterwards.
"""

import json
import logging
from typing import Dict, Iterable, Iterator, List

from pydantic import BaseModel, ConfigDict

from eipopt.engine.rule import RewriteRule
from eipopt.exceptions import RuleConfigurationError
from eipopt.models.optimizer import Strategy

logger = logging.getLogger(__name__)


class CatalogEntry(BaseModel):
    """A catalogued rule and its scheduling metadata."""
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    rule: RewriteRule
    strategy: Strategy
    enabled_by_default: bool = True
    requires_cost_data: bool = False

    @property
    def name(self) -> str:
        return self.rule.name

    @classmethod
    def of(cls, rule: RewriteRule) -> "CatalogEntry":
        return cls(
            rule=rule,
            strategy=rule.strategy,
            enabled_by_default=rule.ENABLED_BY_DEFAULT,
            requires_cost_data=rule.REQUIRES_COST_DATA,
        )


class RuleCatalog:
    """Ordered, name-unique collection of rules."""

    def __init__(self, rules: Iterable[RewriteRule] = ()):
        self._entries: Dict[str, CatalogEntry] = {}
        for rule in rules:
            self.register(rule)

    def register(self, rule: RewriteRule) -> CatalogEntry:
        """
        Add a rule.

        Raises:
            RuleConfigurationError: A rule with the same name is registered.
        """
        if rule.name in self._entries:
            raise RuleConfigurationError(f"duplicate rule name: {rule.name}")
        entry = CatalogEntry.of(rule)
        self._entries[rule.name] = entry
        logger.debug(f"Registered rule {rule.name} ({rule.strategy.value})")
        return entry

    def get(self, name: str) -> CatalogEntry:
        try:
            return self._entries[name]
        except KeyError:
            raise RuleConfigurationError(f"unknown rule: {name}") from None

    def names(self) -> List[str]:
        return list(self._entries)

    def by_strategy(self, strategy: Strategy) -> List[CatalogEntry]:
        return [entry for entry in self._entries.values() if entry.strategy == strategy]

    def __iter__(self) -> Iterator[CatalogEntry]:
        return iter(self._entries.values())

    def __contains__(self, name: object) -> bool:
        return name in self._entries

    def __len__(self) -> int:
        return len(self._entries)


def json_list(values: Iterable[str]) -> str:
    """Configuration encoding of an element or id list (sorted JSON)."""
    return json.dumps(sorted(values))
