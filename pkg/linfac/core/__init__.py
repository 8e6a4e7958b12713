"""
Linfac Core - Numerical primitives and per-date domain types.

This module contains the fundamental building blocks:
- linalg: Tolerance policy, pseudoinverse, ranks, subspaces, projectors
- model: Cross-section moments, characteristics, factor weights and the
  derived tradable factor model
"""

__all__ = []
