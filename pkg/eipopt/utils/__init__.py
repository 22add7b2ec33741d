"""
Shared utilities for the EIP optimizer.
"""
