"""Verification and construction tools for piecewise constant-curvature complexes."""

__version__ = "0.1.0"
