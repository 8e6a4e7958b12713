"""
Linfac Diagnostics - Condition checks and the implication graph between them.
"""

__all__ = []
