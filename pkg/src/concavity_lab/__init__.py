"""Numerical lab for the concavity power of log-concave measures on planar convex bodies."""

from .body import Body2D, make_disk, make_ellipse, make_fourier
from .constants import VERSION
from .measure import MeasureModel, make_gaussian, make_quadratic, make_radial
from .operator import concavity_power
from .quad import QuadratureSpec

__version__ = VERSION

__all__ = [
    "Body2D",
    "MeasureModel",
    "QuadratureSpec",
    "VERSION",
    "concavity_power",
    "make_disk",
    "make_ellipse",
    "make_fourier",
    "make_gaussian",
    "make_quadratic",
    "make_radial",
]
