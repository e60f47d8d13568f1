"""Exact and Monte Carlo tools for the number of l-matchings in G(n,p) and G(n,m)."""

__version__ = "0.1.0"


class CapExceeded(ValueError):
    """Raised when an exact computation would exceed a configured size cap."""
