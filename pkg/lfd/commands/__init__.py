"""
lfd commands package.
"""
