"""
Pytest configuration and fixtures.

Provides shared test fixtures and configuration for all tests.
"""

import os
import sys

import pytest

# Add the repository root to the Python path for imports
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from eipopt.models.optimizer import OptimizerConfig, RuleParameters, Strategy  # noqa: E402
from eipopt.pgraph.codec import load_graph  # noqa: E402
from tests.builders import ITALY_INVOICE  # noqa: E402


@pytest.fixture
def italy_path():
    """Path of the shipped invoice-routing fixture."""
    return ITALY_INVOICE


@pytest.fixture
def italy_graph():
    """The invoice-routing process before optimization (15 patterns)."""
    return load_graph(ITALY_INVOICE)


@pytest.fixture
def params():
    """Default rule thresholds, independent of the environment."""
    return RuleParameters()


@pytest.fixture
def os1_config():
    """Optimizer configuration with only process simplification enabled."""
    return OptimizerConfig(enabled_strategies=frozenset({Strategy.OS1}))


@pytest.fixture
def full_config():
    """Optimizer configuration with every strategy enabled."""
    return OptimizerConfig()
