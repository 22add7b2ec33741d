"""
EIP Optimizer.

Rule-based optimization of Enterprise Integration Pattern process graphs
using double-pushout graph rewriting, an analytic cost model and a
stratified application schedule.
"""

__version__ = "1.0.0"
