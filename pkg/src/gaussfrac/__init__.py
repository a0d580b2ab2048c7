"""Numerical laboratory for Gaussian fractional perimeters.

Computes the subordinated Mehler kernel, Gaussian fractional perimeters of
explicit set families, fractional Gaussian Sobolev seminorms, and verifies
the dimension-free sqrt(2)/pi scaling limit by sweeping the fractional
order toward 1.
"""

__version__ = "0.1.0"

from .numerics import Estimate, QuadratureSpec, RngStream  # noqa: F401
