"""
Logging configuration for the EIP optimizer.

Records go to stderr so command output on stdout stays machine readable.
JSON output is meant for batch runs whose logs are collected; the plain
format is for interactive use.
"""

import json
import logging
import sys
from datetime import datetime, timezone
from typing import Any, Dict, Optional, TextIO

from eipopt.config.settings import is_production, settings

CONTEXT_ATTR = "custom_fields"


def _context(record: logging.LogRecord) -> Dict[str, Any]:
    return getattr(record, CONTEXT_ATTR, None) or {}


# ============================================================================
# Formatters
# ============================================================================

class JSONFormatter(logging.Formatter):
    """
    One JSON object per record.

    Context passed through log_with_context() becomes top-level keys, so a
    fixpoint record carries e.g. ``rule``, ``steps`` and ``converged``.
    """

    def format(self, record: logging.LogRecord) -> str:
        entry: Dict[str, Any] = {
            "timestamp": datetime.fromtimestamp(record.created, timezone.utc).isoformat(),
            "level": record.levelname,
            "logger": record.name,
            "message": record.getMessage(),
        }
        entry.update(_context(record))
        if record.exc_info:
            entry["exception"] = self.formatException(record.exc_info)
        return json.dumps(entry, default=str, sort_keys=False)


class StandardFormatter(logging.Formatter):
    """Compact single-line records; context is appended as key=value pairs."""

    def __init__(self):
        super().__init__(fmt="%(asctime)s %(levelname)-7s %(name)s: %(message)s", datefmt="%H:%M:%S")

    def format(self, record: logging.LogRecord) -> str:
        line = super().format(record)
        context = _context(record)
        if context:
            line += " [" + " ".join(f"{key}={value}" for key, value in context.items()) + "]"
        return line


# ============================================================================
# Setup
# ============================================================================

def setup_logging(
    log_level: Optional[str] = None,
    use_json: Optional[bool] = None,
    stream: Optional[TextIO] = None,
) -> logging.Handler:
    """
    Install a single handler on the root logger and return it.

    Args:
        log_level: Level name; defaults to settings.log_level (EIP_OPT_LOG).
        use_json: JSON records; defaults to settings.log_json, and is forced
                  on in production.
        stream: Target stream, stderr unless given.
    """
    level_name = (log_level or settings.log_level).upper()
    level = logging.getLevelName(level_name)
    if not isinstance(level, int):
        level = logging.INFO

    json_output = settings.log_json if use_json is None else use_json
    handler = logging.StreamHandler(stream or sys.stderr)
    handler.setFormatter(JSONFormatter() if json_output or is_production() else StandardFormatter())

    root = logging.getLogger()
    root.handlers = [handler]
    root.setLevel(level)
    root.debug(f"Logging configured: level={level_name}, json={json_output}, env={settings.environment}")
    return handler


def log_with_context(logger: logging.Logger, level: str, message: str, **context) -> None:
    """Log ``message`` at ``level`` with structured context fields."""
    logger.log(logging.getLevelName(level.upper()), message, extra={CONTEXT_ATTR: context})
