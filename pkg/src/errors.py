"""
Exception hierarchy for the navigation timing-error simulator.
"""
from typing import Optional, Tuple


class NavigationError(Exception):
    """Base class for all simulator errors."""


class GeometryError(NavigationError, ValueError):
    """Camera geometry cannot produce a valid observation or intersection."""

    def __init__(self, message: str, point: Optional[Tuple[float, ...]] = None):
        super().__init__(message)
        self.point = point

    def __reduce__(self):
        # Keep the point when the error crosses a worker process boundary.
        return (type(self), (str(self), self.point))

    def at(self, point: Tuple[float, ...]) -> 'GeometryError':
        """Return a copy of this error tagged with the offending grid point."""
        coords = ", ".join(f"{c:g}" for c in point)
        return type(self)(f"{self} at point ({coords})", point=tuple(point))


class DegenerateGeometry(GeometryError):
    """Marker lies on or behind the baseline, or coincides with a camera."""


class ParallelRays(GeometryError):
    """The two camera rays do not intersect in front of the cameras."""


class BehindBaseline(GeometryError):
    """Triangulated point lands at y <= 0."""


class ConfigError(NavigationError, ValueError):
    """Invalid run configuration or command arguments."""


class EmptySweep(NavigationError, ValueError):
    """A reduction was asked for over zero grid cells."""
