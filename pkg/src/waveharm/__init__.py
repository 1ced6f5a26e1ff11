"""Exterior Dirichlet Helmholtz problems on star-shaped bodies.

Solutions are expanded in outgoing spherical waves ``Y_lm h_l(k|r|)``
orthonormalized on the boundary; the Gram matrix of the restricted waves is
a polynomial in ``1/k`` whose coefficients are cached geometric moments.
"""

import logging

from .indexing import AngularIndex, MultiIndex, count_upto, rank, unrank
from .surface import GeometryError, HarmonicStarSurface, RevolutionPolyline, Sphere, surface_from_dict, validate

__version__ = "0.1.0"

logging.getLogger(__name__).addHandler(logging.NullHandler())

__all__ = [
    "AngularIndex",
    "GeometryError",
    "HarmonicStarSurface",
    "MultiIndex",
    "RevolutionPolyline",
    "Sphere",
    "count_upto",
    "rank",
    "surface_from_dict",
    "unrank",
    "validate",
]
