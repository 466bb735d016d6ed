"""
Two-camera rig geometry: forward projection (point -> per-camera angles) and
triangulation (angles -> point), in 2D and 3D.

Camera A sits at (-d, 0, 0), camera B at (+d, 0, 0). The Y axis points into
the surgical field and Z points up. Lengths are in cm, angles in radians.

The lower-case helpers (``camera_alpha_2d``, ``triangulate_2d``, ...) are
plain numpy expressions: they accept scalars or equally-shaped arrays, which
is how the sweep evaluates a whole grid row at once. The typed functions
(``angles_from_point_2d``, ...) wrap them for single points.
"""
import math
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from .errors import BehindBaseline, DegenerateGeometry, ParallelRays

# Denominators below this are treated as parallel rays.
PARALLEL_TOLERANCE = 1e-12

# cos(arccos(0)) is 6.1e-17, not 0; snap so on-plane coordinates stay exact.
COSINE_SNAP = 1e-15

# Loose enough for angles printed with 9 significant digits.
DIRECTION_COSINE_TOLERANCE = 1e-6


@dataclass(frozen=True)
class CameraRig:
    """Baseline geometry: cameras at (-d, 0, 0) and (+d, 0, 0)."""
    half_separation_d: float = 25.0

    def __post_init__(self):
        if not (math.isfinite(self.half_separation_d) and self.half_separation_d > 0):
            raise DegenerateGeometry(
                f"half separation d must be > 0, got {self.half_separation_d}"
            )

    @property
    def camera_a(self) -> Tuple[float, float, float]:
        return (-self.half_separation_d, 0.0, 0.0)

    @property
    def camera_b(self) -> Tuple[float, float, float]:
        return (self.half_separation_d, 0.0, 0.0)


@dataclass(frozen=True)
class Point2:
    """Marker position in the camera plane (cm)."""
    x: float
    y: float

    def __post_init__(self):
        _require_in_front(self.x, self.y)

    def to_3d(self) -> 'Point3':
        return Point3(self.x, self.y, 0.0)

    def as_tuple(self) -> Tuple[float, float]:
        return (self.x, self.y)


@dataclass(frozen=True)
class Point3:
    """Marker position in camera coordinates (cm)."""
    x: float
    y: float
    z: float

    def __post_init__(self):
        _require_in_front(self.x, self.y, self.z)

    def translated(self, dx: float, dy: float, dz: float) -> 'Point3':
        return Point3(self.x + dx, self.y + dy, self.z + dz)

    def as_tuple(self) -> Tuple[float, float, float]:
        return (self.x, self.y, self.z)


@dataclass(frozen=True)
class AngleSet2:
    """
    Angles reported by the two cameras in the 2D model.

    alpha is the angle between +X and the camera->marker ray; beta is the
    angle with +Y, so beta = pi/2 - alpha (negative when alpha is obtuse).
    """
    alpha1: float
    beta1: float
    alpha2: float
    beta2: float

    def __post_init__(self):
        for name in ("alpha1", "alpha2"):
            value = getattr(self, name)
            if not 0.0 < value < math.pi:
                raise ValueError(f"{name} must lie in (0, pi), got {value}")
        for alpha, beta in ((self.alpha1, self.beta1), (self.alpha2, self.beta2)):
            if abs(beta - (math.pi / 2 - alpha)) > DIRECTION_COSINE_TOLERANCE:
                raise ValueError(
                    f"beta must equal pi/2 - alpha in 2D (alpha={alpha}, beta={beta})"
                )

    @classmethod
    def from_alphas(cls, alpha1: float, alpha2: float) -> 'AngleSet2':
        return cls(alpha1, math.pi / 2 - alpha1, alpha2, math.pi / 2 - alpha2)


@dataclass(frozen=True)
class CameraAngles:
    """Angles of one camera->marker ray with the X, Y and Z axes."""
    alpha: float
    beta: float
    gamma: float

    def __post_init__(self):
        for value in (self.alpha, self.beta, self.gamma):
            if not 0.0 <= value <= math.pi:
                raise ValueError(f"direction angles must lie in [0, pi], got {value}")
        norm = math.cos(self.alpha) ** 2 + math.cos(self.beta) ** 2 + math.cos(self.gamma) ** 2
        if abs(norm - 1.0) > DIRECTION_COSINE_TOLERANCE:
            raise ValueError(
                f"direction cosines must have unit norm, got squared sum {norm!r}"
            )

    def direction(self) -> np.ndarray:
        """Unit direction vector of the ray."""
        return np.array([
            float(direction_cosine(self.alpha)),
            float(direction_cosine(self.beta)),
            float(direction_cosine(self.gamma)),
        ])


@dataclass(frozen=True)
class AngleSet3:
    """Direction angles reported by camera 1 (A) and camera 2 (B)."""
    alpha1: float
    beta1: float
    gamma1: float
    alpha2: float
    beta2: float
    gamma2: float

    def __post_init__(self):
        # Validation lives on CameraAngles.
        self.camera1()
        self.camera2()

    def camera1(self) -> CameraAngles:
        return CameraAngles(self.alpha1, self.beta1, self.gamma1)

    def camera2(self) -> CameraAngles:
        return CameraAngles(self.alpha2, self.beta2, self.gamma2)


def _require_in_front(x: float, y: float, z: float = 0.0) -> None:
    if not all(math.isfinite(v) for v in (x, y, z)):
        raise DegenerateGeometry(f"non-finite coordinates ({x}, {y}, {z})")
    if y <= 0:
        raise DegenerateGeometry(
            f"marker must be in front of the baseline (y > 0), got y={y}"
        )


def direction_cosine(angle):
    """cos(angle) with values within COSINE_SNAP of zero snapped to 0."""
    c = np.cos(angle)
    return np.where(np.abs(c) < COSINE_SNAP, 0.0, c)


def camera_alpha_2d(camera_x, x, y):
    """
    Angle at a camera between +X and the ray to (x, y).

    Uses a two-argument arctangent so a marker left of the camera yields an
    obtuse angle in (pi/2, pi).
    """
    return np.arctan2(y, np.subtract(x, camera_x))


def triangulate_2d(d, alpha1, alpha2):
    """
    Intersect the rays from A at alpha1 and from B at alpha2.

    Args:
        d: Half separation of the cameras
        alpha1: Angle reported by camera A (scalar or array)
        alpha2: Angle reported by camera B (scalar or array)

    Returns:
        Tuple (x, y) with the same shape as the inputs

    Raises:
        ParallelRays: if the rays are (numerically) parallel
        BehindBaseline: if the rays meet at y <= 0
    """
    # cos(b2)cos(a1) - cos(b1)cos(a2) with b = pi/2 - a reduces to sin(a2 - a1).
    denominator = np.sin(np.subtract(alpha2, alpha1))
    if np.any(np.abs(denominator) < PARALLEL_TOLERANCE):
        raise ParallelRays("camera rays are parallel")
    tan1 = np.tan(alpha1)
    tan2 = np.tan(alpha2)
    y = 2.0 * d * tan1 * tan2 / (tan2 - tan1)
    if np.any(y <= 0):
        raise BehindBaseline("camera rays intersect behind the baseline")
    x = y / tan1 - d
    return x, y


def camera_angles_3d(camera_x, x, y, z):
    """
    Direction angles (alpha, beta, gamma) of the ray from (camera_x, 0, 0)
    to (x, y, z).
    """
    dx = np.subtract(x, camera_x)
    r = np.sqrt(dx * dx + np.square(y) + np.square(z))
    if np.any(r <= 0):
        raise DegenerateGeometry("marker coincides with a camera")
    return (np.arccos(np.clip(dx / r, -1.0, 1.0)),
            np.arccos(np.clip(np.divide(y, r), -1.0, 1.0)),
            np.arccos(np.clip(np.divide(z, r), -1.0, 1.0)))


def triangulate_3d(d, alpha1, beta1, gamma1, alpha2, beta2, gamma2):
    """
    Recover (x, y, z) from the six direction angles.

    Five of the six equations are used: y from the alpha/beta pair, z from
    the alpha/gamma pair and x from r1 = y / cos(beta1). When the two angle
    sets come from different physical points the system is inconsistent and
    this is the resolution returned (not a least-squares point).

    When the rays' XZ projections are parallel (marker on the z = 0 plane)
    the z formula is 0/0 and z is taken from r1 * cos(gamma1) instead.
    """
    ca1, cb1, cg1 = (direction_cosine(a) for a in (alpha1, beta1, gamma1))
    ca2, cb2, cg2 = (direction_cosine(a) for a in (alpha2, beta2, gamma2))

    denominator_y = cb2 * ca1 - cb1 * ca2
    if np.any(np.abs(denominator_y) < PARALLEL_TOLERANCE):
        raise ParallelRays("camera rays are parallel")
    y = 2.0 * d * cb1 * cb2 / denominator_y
    if np.any(y <= 0):
        raise BehindBaseline("camera rays intersect behind the baseline")

    r1 = y / cb1
    x = r1 * ca1 - d

    denominator_z = cg2 * ca1 - cg1 * ca2
    planar = np.abs(denominator_z) < PARALLEL_TOLERANCE
    with np.errstate(divide='ignore', invalid='ignore'):
        z_formula = 2.0 * d * cg1 * cg2 / denominator_z
    z = np.where(planar, r1 * cg1, z_formula)
    return x, y, z


def angles_from_point_2d(rig: CameraRig, p: Point2) -> AngleSet2:
    """Angles reported by both cameras for a marker at p."""
    d = rig.half_separation_d
    alpha1 = float(camera_alpha_2d(-d, p.x, p.y))
    alpha2 = float(camera_alpha_2d(d, p.x, p.y))
    return AngleSet2.from_alphas(alpha1, alpha2)


def point_from_angles_2d(rig: CameraRig, a: AngleSet2) -> Point2:
    """Triangulate the marker from the 2D angle set."""
    x, y = triangulate_2d(rig.half_separation_d, a.alpha1, a.alpha2)
    return Point2(float(x), float(y))


def angles_from_point_3d(rig: CameraRig, p: Point3) -> AngleSet3:
    """Direction angles reported by both cameras for a marker at p."""
    d = rig.half_separation_d
    first = camera_angles_3d(-d, p.x, p.y, p.z)
    second = camera_angles_3d(d, p.x, p.y, p.z)
    return AngleSet3(*(float(v) for v in first + second))


def point_from_angles_3d(rig: CameraRig, a: AngleSet3) -> Point3:
    """Triangulate the marker from the 3D angle set."""
    x, y, z = triangulate_3d(rig.half_separation_d,
                             a.alpha1, a.beta1, a.gamma1,
                             a.alpha2, a.beta2, a.gamma2)
    return Point3(float(x), float(y), float(z))
