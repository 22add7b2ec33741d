"""
Unit tests for application settings.

Tests configuration loading and validation.
"""

import pytest
from pydantic import ValidationError

from eipopt.config.settings import Settings, get_settings, settings
from eipopt.models.optimizer import OptimizerConfig, RuleParameters, Strategy


class TestSettings:
    """Tests for Settings configuration."""

    def test_settings_instance_exists(self):
        """Test that settings instance is created."""
        assert settings is not None

    def test_get_settings_returns_instance(self):
        """Test get_settings function."""
        assert get_settings() is settings

    def test_default_values(self, monkeypatch):
        """Test default configuration values."""
        for name in ("EIP_OPT_LOG", "EIP_OPT_LOG_LEVEL", "EIP_OPT_FIXPOINT_BUDGET", "EIP_OPT_BOTTLENECK_RATIO"):
            monkeypatch.delenv(name, raising=False)
        fresh = Settings(_env_file=None)
        assert fresh.log_level == "INFO"
        assert fresh.fixpoint_budget == 10_000
        assert fresh.bottleneck_ratio == 0.5
        assert fresh.min_parallel_factor == 2
        assert fresh.max_parallel_factor == 8
        assert fresh.retry_cooldown_marker == "cooldownElapsed"
        assert fresh.runtime_fork_throughput is None

    def test_environment_override(self, monkeypatch):
        """Test that EIP_OPT_ variables override defaults."""
        monkeypatch.setenv("EIP_OPT_FIXPOINT_BUDGET", "25")
        monkeypatch.setenv("EIP_OPT_BOTTLENECK_RATIO", "0.25")
        fresh = Settings(_env_file=None)
        assert fresh.fixpoint_budget == 25
        assert fresh.bottleneck_ratio == 0.25

    def test_log_alias(self, monkeypatch):
        """Test that EIP_OPT_LOG sets the log level."""
        monkeypatch.setenv("EIP_OPT_LOG", "DEBUG")
        assert Settings(_env_file=None).log_level == "DEBUG"


class TestRuleParameters:
    """Tests for rule threshold validation."""

    def test_defaults(self):
        """Test default thresholds."""
        params = RuleParameters()
        assert params.bottleneck_ratio == 0.5
        assert (params.min_parallel, params.max_parallel) == (2, 8)
        assert params.failure_threshold == 3

    def test_ratio_bounds(self):
        """Test that the bottleneck ratio must lie strictly between 0 and 1."""
        with pytest.raises(ValidationError):
            RuleParameters(bottleneck_ratio=1.0)
        with pytest.raises(ValidationError):
            RuleParameters(bottleneck_ratio=0.0)

    def test_parallel_bounds_ordered(self):
        """Test that min_parallel may not exceed max_parallel."""
        with pytest.raises(ValidationError):
            RuleParameters(min_parallel=6, max_parallel=4)

    def test_frozen(self):
        """Test that parameters are immutable."""
        params = RuleParameters()
        with pytest.raises(ValidationError):
            params.max_parallel = 4

    def test_from_settings(self):
        """Test mapping of settings fields onto parameters."""
        custom = Settings(_env_file=None, max_parallel_factor=5, runtime_join_throughput=120.0)
        params = RuleParameters.from_settings(custom)
        assert params.max_parallel == 5
        assert params.join_throughput == 120.0


class TestOptimizerConfig:
    """Tests for OptimizerConfig."""

    def test_all_strategies_by_default(self):
        """Test that every strategy group is enabled by default."""
        assert OptimizerConfig().enabled_strategies == frozenset(Strategy)

    def test_budget_must_be_positive(self):
        """Test that a zero budget is rejected."""
        with pytest.raises(ValidationError):
            OptimizerConfig(budget=0)

    def test_from_settings_drops_none_overrides(self):
        """Test that unset CLI flags keep the settings value."""
        custom = Settings(_env_file=None, fixpoint_budget=42)
        config = OptimizerConfig.from_settings(custom, budget=None, max_parallel=3)
        assert config.budget == 42
        assert config.max_parallel == 3

    def test_rule_enabled_follows_strategy(self):
        """Test strategy-based enabling."""
        config = OptimizerConfig(enabled_strategies=frozenset({Strategy.OS1}))
        assert config.rule_enabled("dead-path-removal", Strategy.OS1)
        assert not config.rule_enabled("early-filter", Strategy.OS2)

    def test_rule_override_wins(self):
        """Test that explicit flags override strategy groups and defaults."""
        config = OptimizerConfig(
            enabled_strategies=frozenset({Strategy.OS1}),
            rule_overrides={"early-filter": True, "dead-path-removal": False, "fork-elimination": True},
        )
        assert config.rule_enabled("early-filter", Strategy.OS2)
        assert not config.rule_enabled("dead-path-removal", Strategy.OS1)
        assert config.rule_enabled("fork-elimination", Strategy.OS1, enabled_by_default=False)

    def test_disabled_by_default(self):
        """Test that rules off by default stay off without an override."""
        assert not OptimizerConfig().rule_enabled("fork-elimination", Strategy.OS1, enabled_by_default=False)

    def test_rule_parameters_projection(self):
        """Test extraction of the threshold subset."""
        config = OptimizerConfig(max_parallel=4, budget=7)
        params = config.rule_parameters
        assert type(params) is RuleParameters
        assert params.max_parallel == 4

    def test_strategy_parse(self):
        """Test case-insensitive strategy names."""
        assert Strategy.parse(" os3 ") is Strategy.OS3
        with pytest.raises(ValueError):
            Strategy.parse("os9")
