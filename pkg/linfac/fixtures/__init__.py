"""
Linfac Fixtures - Closed-form reference instances.
"""

__all__ = []
