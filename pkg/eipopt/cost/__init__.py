"""
Analytic cost model: process metrics, bottleneck detection and rule effects.
"""

from eipopt.cost.model import process_metrics
from eipopt.cost.bottlenecks import detect_bottlenecks, neighbour_average, parallel_factor
from eipopt.cost.effects import EFFECT_ESTIMATORS, effect_estimator, estimate_effect

__all__ = [
    "process_metrics",
    "detect_bottlenecks",
    "neighbour_average",
    "parallel_factor",
    "EFFECT_ESTIMATORS",
    "effect_estimator",
    "estimate_effect",
]
