"""
Linfac I/O - Moment file format, panel diagnostics runner and report rendering.
"""

__all__ = []
