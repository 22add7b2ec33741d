"""
Unit tests for logging setup.
"""

import io
import json
import logging

import pytest

from eipopt.utils.logger import setup_logging, log_with_context


@pytest.fixture
def restore_root():
    root = logging.getLogger()
    handlers, level = root.handlers[:], root.level
    yield
    root.handlers = handlers
    root.setLevel(level)


class TestLogging:
    """Tests for setup_logging() and log_with_context()."""

    def test_json_records_carry_context(self, restore_root):
        """Test that context fields become top-level JSON keys."""
        stream = io.StringIO()
        setup_logging("INFO", use_json=True, stream=stream)
        log_with_context(logging.getLogger("eipopt.test"), "info", "Applied dead-path", step=1, delta=-1)

        entry = json.loads(stream.getvalue().strip().splitlines()[-1])
        assert entry["message"] == "Applied dead-path"
        assert "timestamp" in entry
        assert entry["level"] == "INFO"
        assert entry["step"] == 1
        assert entry["delta"] == -1

    def test_plain_records_append_context(self, restore_root):
        """Test the key=value suffix of the standard format."""
        stream = io.StringIO()
        setup_logging("INFO", use_json=False, stream=stream)
        log_with_context(logging.getLogger("eipopt.test"), "warning", "Budget exhausted", budget=5)
        assert stream.getvalue().rstrip().endswith("Budget exhausted [budget=5]")

    def test_level_filters(self, restore_root):
        """Test that records below the configured level are dropped."""
        stream = io.StringIO()
        setup_logging("WARNING", use_json=True, stream=stream)
        log_with_context(logging.getLogger("eipopt.test"), "info", "hidden")
        assert stream.getvalue() == ""

    def test_single_handler(self, restore_root):
        """Test that repeated setup does not stack handlers."""
        setup_logging("INFO", stream=io.StringIO())
        handler = setup_logging("INFO", stream=io.StringIO())
        assert logging.getLogger().handlers == [handler]

    def test_context_travels_as_custom_fields(self, restore_root, mocker):
        """Test that log_with_context attaches the context under custom_fields."""
        logger = logging.getLogger("eipopt.test")
        spy = mocker.patch.object(logger, "log")
        log_with_context(logger, "info", "Stage finished", stage=3)
        spy.assert_called_once_with(logging.INFO, "Stage finished", extra={"custom_fields": {"stage": 3}})
