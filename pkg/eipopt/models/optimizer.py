"""
Pydantic models for optimizer configuration.
"""

from enum import Enum
from typing import Dict, FrozenSet, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator

from eipopt.config.settings import Settings, get_settings


class Strategy(str, Enum):
    """Optimization strategy groups."""
    OS1 = "OS1"  # process simplification
    OS2 = "OS2"  # data reduction
    OS3 = "OS3"  # parallelization
    OS4 = "OS4"  # pattern placement
    OS5 = "OS5"  # reduce interaction

    @classmethod
    def parse(cls, text: str) -> "Strategy":
        return cls(text.strip().upper())


class RuleParameters(BaseModel):
    """Thresholds consulted by rule guards and binders."""
    model_config = ConfigDict(frozen=True)

    bottleneck_ratio: float = Field(0.5, gt=0.0, lt=1.0)
    min_parallel: int = Field(2, ge=2, le=64)
    max_parallel: int = Field(8, ge=2, le=64)
    failure_threshold: int = Field(3, ge=1)
    failure_rate_threshold: float = Field(0.5, ge=0.0, le=1.0)
    cloud_size_cap: int = Field(12, ge=1)
    cooldown_marker: str = "cooldownElapsed"
    fork_throughput: Optional[float] = Field(None, gt=0.0, description="Runtime throughput of generated forks")
    join_throughput: Optional[float] = Field(None, gt=0.0, description="Runtime throughput of generated joins")

    @model_validator(mode="after")
    def _bounds_ordered(self) -> "RuleParameters":
        if self.min_parallel > self.max_parallel:
            raise ValueError("min_parallel must not exceed max_parallel")
        return self

    @classmethod
    def settings_values(cls, settings: Settings) -> Dict[str, object]:
        return {
            "bottleneck_ratio": settings.bottleneck_ratio,
            "min_parallel": settings.min_parallel_factor,
            "max_parallel": settings.max_parallel_factor,
            "failure_threshold": settings.failure_threshold,
            "failure_rate_threshold": settings.failure_rate_threshold,
            "cloud_size_cap": settings.cloud_size_cap,
            "cooldown_marker": settings.retry_cooldown_marker,
            "fork_throughput": settings.runtime_fork_throughput,
            "join_throughput": settings.runtime_join_throughput,
        }

    @classmethod
    def from_settings(cls, settings: Optional[Settings] = None) -> "RuleParameters":
        return cls(**cls.settings_values(settings or get_settings()))


ALL_STRATEGIES: FrozenSet[Strategy] = frozenset(Strategy)


class OptimizerConfig(RuleParameters):
    """Full optimizer configuration: strategy selection plus rule thresholds."""

    enabled_strategies: FrozenSet[Strategy] = Field(default=ALL_STRATEGIES)
    rule_overrides: Dict[str, bool] = Field(
        default_factory=dict, description="Per-rule enable flags; override strategy groups"
    )
    budget: int = Field(10_000, ge=1, description="Maximum rule applications per run")
    test_mode: bool = Field(False, description="Re-validate every application")

    @classmethod
    def from_settings(cls, settings: Optional[Settings] = None, **overrides) -> "OptimizerConfig":
        settings = settings or get_settings()
        values = cls.settings_values(settings)
        values.update(budget=settings.fixpoint_budget, test_mode=settings.test_mode)
        values.update({key: value for key, value in overrides.items() if value is not None})
        return cls(**values)

    def rule_enabled(self, name: str, strategy: Strategy, enabled_by_default: bool = True) -> bool:
        if name in self.rule_overrides:
            return self.rule_overrides[name]
        return enabled_by_default and strategy in self.enabled_strategies

    @property
    def rule_parameters(self) -> RuleParameters:
        return RuleParameters(**{name: getattr(self, name) for name in RuleParameters.model_fields})
