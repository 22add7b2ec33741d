"""
Stratified optimizer: stage plan, driver and report narrative.
"""

from eipopt.optimizer.driver import optimize, replay
from eipopt.optimizer.explain import explain
from eipopt.optimizer.stages import STAGES, Stage

__all__ = ["optimize", "replay", "explain", "STAGES", "Stage"]
