"""
lfd - Linear Factor Diagnostics.

Command-line front end for the linfac toolkit: diagnose moment files,
emit fixtures, simulate generative specs and run the GLS-type verification
campaign.
"""

from linfac import __version__

__all__ = ["__version__"]
