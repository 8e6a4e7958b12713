"""
Linfac Pricing - No-arbitrage, mean-variance efficient portfolios and the
minimum-variance SDF.
"""

__all__ = []
