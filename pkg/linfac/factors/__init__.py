"""
Linfac Factors - Weight builders and the generative model.

- builders: OLS, GLS, general-form and GLS-type weight constructions
- generative: x = Phi g + eta specs, closed-form predictions, simulation
"""

__all__ = []
