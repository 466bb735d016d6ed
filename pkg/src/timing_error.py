"""
Localization error caused by camera timing skew.

Camera 1 (A) observes the marker at p while the lagging camera observes it
at p + disp, where disp = velocity * timing skew. Triangulating the mixed
observations gives a point away from where the marker actually was; this
module computes that point exactly and through the first-order closed forms.
"""
import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import NamedTuple, Optional, Tuple

import numpy as np

from .errors import ConfigError, DegenerateGeometry, ParallelRays
from .geometry import (
    PARALLEL_TOLERANCE,
    CameraAngles,
    CameraRig,
    Point2,
    Point3,
    camera_alpha_2d,
    camera_angles_3d,
    triangulate_2d,
    triangulate_3d,
)

logger = logging.getLogger(__name__)

# Above this the first-order approximations stop being meaningful.
LARGE_DISPLACEMENT_CM = 1.0


@dataclass(frozen=True)
class Displacement:
    """Marker movement between the two captures (cm)."""
    dx: float = 0.0
    dy: float = 0.0
    dz: float = 0.0

    @property
    def magnitude(self) -> float:
        return math.sqrt(self.dx ** 2 + self.dy ** 2 + self.dz ** 2)

    @property
    def is_zero(self) -> bool:
        return self.dx == 0.0 and self.dy == 0.0 and self.dz == 0.0

    def scaled(self, factor: float) -> 'Displacement':
        return Displacement(self.dx * factor, self.dy * factor, self.dz * factor)

    def as_tuple(self) -> Tuple[float, float, float]:
        return (self.dx, self.dy, self.dz)


@dataclass(frozen=True)
class MotionSpec:
    """Marker velocity (cm/s) and the skew between the two captures (s)."""
    velocity: Tuple[float, float, float] = (0.0, 0.0, 0.0)
    timing_skew_dt: float = 0.0

    def __post_init__(self):
        if len(self.velocity) != 3:
            raise ValueError(f"velocity needs three components, got {self.velocity}")
        if not self.timing_skew_dt >= 0:
            raise ValueError(f"timing skew must be >= 0, got {self.timing_skew_dt}")


class ReferenceConvention(Enum):
    """Point the reconstructed location is compared against."""
    BASE_POINT = "basepoint"
    MIDPOINT = "midpoint"

    @classmethod
    def parse(cls, value) -> 'ReferenceConvention':
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower().replace("_", "").replace("-", "")
        aliases = {"basepoint": cls.BASE_POINT, "base": cls.BASE_POINT,
                   "midpoint": cls.MIDPOINT, "mid": cls.MIDPOINT}
        if key not in aliases:
            raise ConfigError(f"unknown reference convention: {value!r}")
        return aliases[key]


class LaggingCamera(Enum):
    """Camera whose capture sees the displaced marker."""
    A = "a"
    B = "b"

    @classmethod
    def parse(cls, value) -> 'LaggingCamera':
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower()
        if key in ("a", "1", "camera1"):
            return cls.A
        if key in ("b", "2", "camera2"):
            return cls.B
        raise ConfigError(f"unknown lagging camera: {value!r}")


class ApproxError(NamedTuple):
    ex: float
    ey: float
    ez: float
    magnitude: float


class SkewLineGap(NamedTuple):
    midpoint: Tuple[float, float, float]
    gap: float


class ErrorArrays(NamedTuple):
    """Column-wise error evaluation for many points at once."""
    reconstructed: Tuple[np.ndarray, np.ndarray, np.ndarray]
    reference: Tuple[np.ndarray, np.ndarray, np.ndarray]
    error: Tuple[np.ndarray, np.ndarray, np.ndarray]
    magnitude: np.ndarray
    approx: Tuple[np.ndarray, np.ndarray, np.ndarray]
    approx_magnitude: np.ndarray


@dataclass(frozen=True)
class ErrorReport:
    """Exact and first-order localization error for one marker position."""
    mode: str
    true_point: Point3
    displaced_point: Point3
    reconstructed_point: Point3
    reference_point: Point3
    displacement: Displacement
    convention: ReferenceConvention
    lagging_camera: LaggingCamera
    error_vector: Tuple[float, float, float]
    error_magnitude: float
    approx_error_vector: Tuple[float, float, float]
    approx_error_magnitude: float
    magnification: float
    skew_gap: Optional[SkewLineGap] = field(default=None)

    def to_dict(self) -> dict:
        """Fields in a fixed order, coordinates trimmed to the model's dimension."""
        dims = 2 if self.mode == "2d" else 3

        def coords(values):
            return [float(v) for v in tuple(values)[:dims]]

        result = {
            "mode": self.mode,
            "convention": self.convention.value,
            "lagging_camera": self.lagging_camera.value,
            "true_point_cm": coords(self.true_point.as_tuple()),
            "displacement_cm": coords(self.displacement.as_tuple()),
            "displaced_point_cm": coords(self.displaced_point.as_tuple()),
            "reconstructed_point_cm": coords(self.reconstructed_point.as_tuple()),
            "reference_point_cm": coords(self.reference_point.as_tuple()),
            "error_vector_cm": coords(self.error_vector),
            "error_magnitude_cm": float(self.error_magnitude),
            "approx_error_vector_cm": coords(self.approx_error_vector),
            "approx_error_magnitude_cm": float(self.approx_error_magnitude),
            "magnification": float(self.magnification),
        }
        if self.skew_gap is not None:
            result["skew_line_midpoint_cm"] = coords(self.skew_gap.midpoint)
            result["skew_line_gap_cm"] = float(self.skew_gap.gap)
        return result


def displacement_from_motion(m: MotionSpec) -> Displacement:
    """Movement during the skew: velocity * dt, componentwise."""
    vx, vy, vz = m.velocity
    dt = m.timing_skew_dt
    return Displacement(vx * dt, vy * dt, vz * dt)


def warn_if_large(disp: Displacement) -> None:
    if disp.magnitude > LARGE_DISPLACEMENT_CM:
        logger.warning(
            "Displacement %.4g cm exceeds %.4g cm; first-order approximations "
            "will not track the exact error", disp.magnitude, LARGE_DISPLACEMENT_CM
        )


def _observed_points(x, y, z, disp: Displacement, lagging: LaggingCamera):
    displaced = (np.add(x, disp.dx), np.add(y, disp.dy), np.add(z, disp.dz))
    if np.any(np.asarray(y) <= 0):
        raise DegenerateGeometry("marker must be in front of the baseline (y > 0)")
    if np.any(displaced[1] <= 0):
        raise DegenerateGeometry("displaced marker must be in front of the baseline (y > 0)")
    if lagging is LaggingCamera.B:
        return (x, y, z), displaced
    return displaced, (x, y, z)


def _reconstruct(d, x, y, z, disp, lagging, planar):
    first, second = _observed_points(x, y, z, disp, lagging)
    if planar:
        alpha1 = camera_alpha_2d(-d, first[0], first[1])
        alpha2 = camera_alpha_2d(d, second[0], second[1])
        x2, y2 = triangulate_2d(d, alpha1, alpha2)
        return x2, y2, np.zeros_like(np.asarray(x2, dtype=float))
    angles1 = camera_angles_3d(-d, *first)
    angles2 = camera_angles_3d(d, *second)
    return triangulate_3d(d, *angles1, *angles2)


def approx_error_arrays(d, x, y, z, disp: Displacement,
                        lagging: LaggingCamera = LaggingCamera.B):
    """
    First-order error components, measured from the base point.

    For camera B lagging:
        ey = (d*dy - x*dy + y*dx) / 2d
        ex = (x + d) / y * ey
        ez = (d*dz - x*dz + z*dx) / 2d
    Camera A lagging is the mirror image in X.
    """
    dx, dy, dz = disp.dx, disp.dy, disp.dz
    mirror = lagging is LaggingCamera.A
    if mirror:
        x = np.negative(x)
        dx = -dx
    common = (d * dy - np.multiply(x, dy) + np.multiply(y, dx)) / (2.0 * d)
    ey = common
    ex = (np.add(x, d) / y) * common
    ez = (d * dz - np.multiply(x, dz) + np.multiply(z, dx)) / (2.0 * d)
    if mirror:
        ex = np.negative(ex)
    magnitude = np.sqrt(ex * ex + ey * ey + ez * ez)
    return (ex, ey, ez), magnitude


def localization_error_arrays(rig: CameraRig, x, y, z, disp: Displacement,
                              conv: ReferenceConvention = ReferenceConvention.MIDPOINT,
                              lagging: LaggingCamera = LaggingCamera.B,
                              planar: bool = False) -> ErrorArrays:
    """
    Exact and approximate errors for arrays of marker positions.

    Args:
        rig: Camera rig
        x, y, z: Marker coordinates (scalars or equally-shaped arrays)
        disp: Movement between the captures
        conv: Reference the exact error is measured from
        lagging: Camera that sees the displaced marker
        planar: Use the 2D model (z and dz must be zero)

    Returns:
        ErrorArrays with per-axis components and magnitudes
    """
    d = rig.half_separation_d
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    z = np.asarray(z, dtype=float)
    if planar and (disp.dz != 0.0 or np.any(z != 0.0)):
        raise ConfigError("2D scenarios require z = 0 and dz = 0")

    x2, y2, z2 = _reconstruct(d, x, y, z, disp, lagging, planar)

    if conv is ReferenceConvention.MIDPOINT:
        reference = (x + disp.dx / 2.0, y + disp.dy / 2.0, z + disp.dz / 2.0)
    else:
        reference = (x, y, z)
    error = (x2 - reference[0], y2 - reference[1], z2 - reference[2])
    magnitude = np.sqrt(error[0] ** 2 + error[1] ** 2 + error[2] ** 2)

    approx, approx_magnitude = approx_error_arrays(d, x, y, z, disp, lagging)
    return ErrorArrays(
        reconstructed=(x2, y2, z2),
        reference=reference,
        error=error,
        magnitude=magnitude,
        approx=approx,
        approx_magnitude=approx_magnitude,
    )


def _scalar(value) -> float:
    return float(np.asarray(value))


def _report(mode, p3, disp, conv, lagging, arrays, skew_gap=None) -> ErrorReport:
    reconstructed = tuple(_scalar(v) for v in arrays.reconstructed)
    magnitude = _scalar(arrays.magnitude)
    return ErrorReport(
        mode=mode,
        true_point=p3,
        displaced_point=p3.translated(disp.dx, disp.dy, disp.dz),
        reconstructed_point=Point3(*reconstructed),
        reference_point=Point3(*(_scalar(v) for v in arrays.reference)),
        displacement=disp,
        convention=conv,
        lagging_camera=lagging,
        error_vector=tuple(_scalar(v) for v in arrays.error),
        error_magnitude=magnitude,
        approx_error_vector=tuple(_scalar(v) for v in arrays.approx),
        approx_error_magnitude=_scalar(arrays.approx_magnitude),
        magnification=magnitude / disp.magnitude if not disp.is_zero else 0.0,
        skew_gap=skew_gap,
    )


def reconstruct_with_error_2d(rig: CameraRig, p: Point2, disp: Displacement,
                              lagging: LaggingCamera = LaggingCamera.B) -> Point2:
    """Point triangulated from camera 1 seeing p and camera 2 seeing p + disp."""
    if disp.dz != 0.0:
        raise ConfigError("2D scenarios require dz = 0")
    x2, y2, _ = _reconstruct(rig.half_separation_d, p.x, p.y, 0.0, disp, lagging, True)
    return Point2(_scalar(x2), _scalar(y2))


def reconstruct_with_error_3d(rig: CameraRig, p: Point3, disp: Displacement,
                              lagging: LaggingCamera = LaggingCamera.B) -> Point3:
    """3D counterpart of reconstruct_with_error_2d using the five-equation resolution."""
    x2, y2, z2 = _reconstruct(rig.half_separation_d, p.x, p.y, p.z, disp, lagging, False)
    return Point3(_scalar(x2), _scalar(y2), _scalar(z2))


def localization_error_2d(rig: CameraRig, p: Point2, disp: Displacement,
                          conv: ReferenceConvention = ReferenceConvention.MIDPOINT,
                          lagging: LaggingCamera = LaggingCamera.B) -> ErrorReport:
    """Full error report for a marker in the 2D model."""
    warn_if_large(disp)
    arrays = localization_error_arrays(rig, p.x, p.y, 0.0, disp, conv, lagging, planar=True)
    return _report("2d", p.to_3d(), disp, conv, lagging, arrays)


def localization_error_3d(rig: CameraRig, p: Point3, disp: Displacement,
                          conv: ReferenceConvention = ReferenceConvention.MIDPOINT,
                          lagging: LaggingCamera = LaggingCamera.B) -> ErrorReport:
    """Full error report for a marker in the 3D model, with the skew-line diagnostic."""
    warn_if_large(disp)
    arrays = localization_error_arrays(rig, p.x, p.y, p.z, disp, conv, lagging)
    first, second = _observed_points(p.x, p.y, p.z, disp, lagging)
    d = rig.half_separation_d
    angles1 = CameraAngles(*(_scalar(a) for a in camera_angles_3d(-d, *first)))
    angles2 = CameraAngles(*(_scalar(a) for a in camera_angles_3d(d, *second)))
    try:
        gap = skew_line_gap_3d(rig, angles1, angles2)
    except ParallelRays:
        gap = None
    return _report("3d", p, disp, conv, lagging, arrays, skew_gap=gap)


def approx_error_2d(rig: CameraRig, p: Point2, disp: Displacement,
                    lagging: LaggingCamera = LaggingCamera.B) -> ApproxError:
    """First-order (ex, ey, magnitude) measured from p; ez is always 0."""
    (ex, ey, _), magnitude = approx_error_arrays(
        rig.half_separation_d, p.x, p.y, 0.0, Displacement(disp.dx, disp.dy, 0.0), lagging
    )
    return ApproxError(_scalar(ex), _scalar(ey), 0.0, _scalar(magnitude))


def approx_error_3d(rig: CameraRig, p: Point3, disp: Displacement,
                    lagging: LaggingCamera = LaggingCamera.B) -> ApproxError:
    """First-order (ex, ey, ez, magnitude) measured from p."""
    (ex, ey, ez), magnitude = approx_error_arrays(
        rig.half_separation_d, p.x, p.y, p.z, disp, lagging
    )
    return ApproxError(_scalar(ex), _scalar(ey), _scalar(ez), _scalar(magnitude))


def skew_line_gap_3d(rig: CameraRig, first: CameraAngles,
                     second: CameraAngles) -> SkewLineGap:
    """
    Shortest segment between the ray from camera A and the ray from camera B.

    Returns the segment midpoint and its length. Diagnostic only: the error
    numbers always come from the five-equation triangulation.
    """
    origin_a = np.array(rig.camera_a)
    origin_b = np.array(rig.camera_b)
    u = first.direction()
    v = second.direction()
    w0 = origin_a - origin_b

    a = u @ u
    b = u @ v
    c = v @ v
    d_ = u @ w0
    e = v @ w0
    denominator = a * c - b * b
    if denominator < PARALLEL_TOLERANCE:
        raise ParallelRays("camera rays are parallel")

    s = (b * e - c * d_) / denominator
    t = (a * e - b * d_) / denominator
    on_a = origin_a + s * u
    on_b = origin_b + t * v
    midpoint = (on_a + on_b) / 2.0
    return SkewLineGap(tuple(float(coord) for coord in midpoint), float(np.linalg.norm(on_a - on_b)))
