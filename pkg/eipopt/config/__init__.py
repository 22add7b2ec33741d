"""
Configuration module for the EIP optimizer.
"""

from eipopt.config.settings import settings, get_settings, is_production, is_development

__all__ = ["settings", "get_settings", "is_production", "is_development"]
