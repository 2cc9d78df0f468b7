"""Exception types shared across the package."""


class BeltramiError(Exception):
    """Base class for all package-specific errors."""


class OutsideTube(BeltramiError):
    """A point lies where the signed-distance jet is not well defined."""


class NewtonDivergence(BeltramiError):
    """The ellipsoid closest-point iteration failed to converge."""


class RayMiss(BeltramiError):
    """The scaled-radial lift is undefined (point on a degenerate ray)."""


class NormalFlip(BeltramiError):
    """A facet normal points against the surface normal (nu . nu_Gamma <= 0)."""


class UnsupportedSurface(BeltramiError):
    """The requested operation does not support this surface kind."""


class DegenerateSimplex(BeltramiError):
    """An element has (numerically) vanishing area or volume."""


class NoConvergence(BeltramiError):
    """The iterative solver exhausted its iteration budget."""


class EmptyBand(BeltramiError):
    """No tetrahedra intersect the requested narrow band."""


class BoxTooSmall(BeltramiError):
    """The background box does not contain the tubular neighborhood."""


class BadSeries(BeltramiError):
    """A convergence series is structurally invalid (lengths, signs, order)."""


class ConfigError(BeltramiError):
    """A run configuration is missing fields or out of documented windows."""
