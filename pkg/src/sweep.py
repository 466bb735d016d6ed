"""
Grid sweeps of the localization error over the camera's operating volume.
"""
import logging
import math
import time
from collections.abc import Sequence
from dataclasses import dataclass, field, replace
from enum import Enum
from multiprocessing import Pool
from typing import Iterator, List, NamedTuple, Optional, Tuple

import numpy as np
from tqdm import tqdm

from .errors import ConfigError, EmptySweep, GeometryError
from .geometry import CameraRig, Point3
from .timing_error import (
    Displacement,
    LaggingCamera,
    ReferenceConvention,
    localization_error_arrays,
    warn_if_large,
)

logger = logging.getLogger(__name__)

ARGMAX_TOLERANCE = 1e-12
# Cells with smaller exact error are left out of relative-gap comparisons.
GAP_FLOOR = 1e-9
AXES = ("x", "y", "z")


class SweepMode(Enum):
    TWO_D = "2d"
    THREE_D = "3d"

    @classmethod
    def parse(cls, value) -> 'SweepMode':
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower()
        for mode in cls:
            if mode.value == key:
                return mode
        raise ConfigError(f"unknown mode: {value!r} (expected 2d or 3d)")


@dataclass(frozen=True)
class OperatingRange:
    """Inclusive grid bounds (cm) and spacing."""
    x_min: float = -70.0
    x_max: float = 70.0
    y_min: float = 90.0
    y_max: float = 240.0
    z_min: float = 0.0
    z_max: float = 0.0
    step: float = 1.0

    def __post_init__(self):
        if not self.step > 0:
            raise ConfigError(f"grid step must be > 0, got {self.step}")
        for axis in AXES:
            low, high = self.bounds(axis)
            if not low <= high:
                raise ConfigError(f"{axis}_min ({low}) must not exceed {axis}_max ({high})")
        if not self.y_min > 0:
            raise ConfigError(f"y_min must be > 0, got {self.y_min}")

    def bounds(self, axis: str) -> Tuple[float, float]:
        return getattr(self, f"{axis}_min"), getattr(self, f"{axis}_max")

    def axis_values(self, axis: str) -> np.ndarray:
        """Grid values along one axis, both endpoints included."""
        low, high = self.bounds(axis)
        count = int(math.floor((high - low) / self.step + 1e-9)) + 1
        return np.round(low + self.step * np.arange(count), 9)

    def counts(self) -> Tuple[int, int, int]:
        return tuple(len(self.axis_values(axis)) for axis in AXES)

    @property
    def cell_count(self) -> int:
        nx, ny, nz = self.counts()
        return nx * ny * nz

    def sliced(self, axis: str, value: float) -> 'OperatingRange':
        """Fix one axis at a single value (e.g. the y = 240 plane)."""
        if axis not in AXES:
            raise ConfigError(f"slice axis must be one of {AXES}, got {axis!r}")
        return replace(self, **{f"{axis}_min": value, f"{axis}_max": value})


@dataclass(frozen=True)
class SweepConfig:
    rig: CameraRig = field(default_factory=CameraRig)
    range: OperatingRange = field(default_factory=OperatingRange)
    displacement: Displacement = field(default_factory=lambda: Displacement(0.01, 0.0, 0.0))
    convention: ReferenceConvention = ReferenceConvention.MIDPOINT
    mode: SweepMode = SweepMode.TWO_D
    slice: Optional[Tuple[str, float]] = None
    lagging_camera: LaggingCamera = LaggingCamera.B
    workers: int = 1

    def __post_init__(self):
        if self.mode is SweepMode.TWO_D:
            grid = self.effective_range()
            if grid.z_min != 0.0 or grid.z_max != 0.0:
                raise ConfigError("2D sweeps need a zero-width z range at 0")
            if self.displacement.dz != 0.0:
                raise ConfigError("2D sweeps need dz = 0")
        if self.workers < 1:
            raise ConfigError(f"workers must be >= 1, got {self.workers}")

    @property
    def planar(self) -> bool:
        return self.mode is SweepMode.TWO_D

    def effective_range(self) -> OperatingRange:
        if self.slice is None:
            return self.range
        axis, value = self.slice
        return self.range.sliced(axis, value)


class GridCell(NamedTuple):
    """One evaluated grid point (one heatmap pixel)."""
    point: Point3
    exact_error: float
    approx_error: float
    error_vector: Tuple[float, float, float]


@dataclass(frozen=True, eq=False)
class CellTable(Sequence):
    """
    Sweep output stored column-wise, row-major over x, then y, then z.

    Behaves as a read-only sequence of GridCell.
    """
    x: np.ndarray
    y: np.ndarray
    z: np.ndarray
    exact: np.ndarray
    approx: np.ndarray
    ex: np.ndarray
    ey: np.ndarray
    ez: np.ndarray
    base_error: np.ndarray

    def __len__(self) -> int:
        return len(self.exact)

    def __getitem__(self, index):
        if isinstance(index, slice):
            return [self[i] for i in range(*index.indices(len(self)))]
        return GridCell(
            point=Point3(float(self.x[index]), float(self.y[index]), float(self.z[index])),
            exact_error=float(self.exact[index]),
            approx_error=float(self.approx[index]),
            error_vector=(float(self.ex[index]), float(self.ey[index]), float(self.ez[index])),
        )

    def __iter__(self) -> Iterator[GridCell]:
        for i in range(len(self)):
            yield self[i]

    def point_at(self, index: int) -> Tuple[float, float, float]:
        return (float(self.x[index]), float(self.y[index]), float(self.z[index]))


@dataclass(frozen=True)
class SweepSummary:
    max_error: float
    argmax_points: List[Point3]
    min_error: float
    cell_count: int
    mean_error: float
    max_approx_vs_exact_gap: Optional[float]
    magnification: Optional[float]
    argmax_error_vectors: List[Tuple[float, float, float]] = field(default_factory=list)
    notes: List[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "max_error_cm": self.max_error,
            "argmax_points_cm": [list(p.as_tuple()) for p in self.argmax_points],
            "argmax_error_vectors_cm": [list(v) for v in self.argmax_error_vectors],
            "min_error_cm": self.min_error,
            "mean_error_cm": self.mean_error,
            "cell_count": self.cell_count,
            "magnification": self.magnification,
            "max_approx_vs_exact_gap": self.max_approx_vs_exact_gap,
            "notes": list(self.notes),
        }


class SweepResult(NamedTuple):
    cells: CellTable
    summary: SweepSummary


@dataclass(frozen=True, eq=False)
class ApproxComparison:
    """Per-cell exact vs first-order errors (BasePoint frame)."""
    worst_gap: float
    worst_point: Optional[Point3]
    x: np.ndarray
    y: np.ndarray
    z: np.ndarray
    exact: np.ndarray
    approx: np.ndarray
    gap: np.ndarray

    def __len__(self) -> int:
        return len(self.gap)

    def offenders(self, tolerance: float) -> List[Point3]:
        idx = np.flatnonzero(self.gap > tolerance)
        return [Point3(float(self.x[i]), float(self.y[i]), float(self.z[i])) for i in idx]


def _evaluate_row(task):
    """Evaluate one x-row of the grid (all y, z). Runs inside pool workers."""
    d, x_value, ys, zs, disp, convention, lagging, planar = task
    rig = CameraRig(d)
    disp = Displacement(*disp)
    convention = ReferenceConvention(convention)
    lagging = LaggingCamera(lagging)

    yy, zz = np.meshgrid(ys, zs, indexing='ij')
    yy = yy.ravel()
    zz = zz.ravel()
    xx = np.full_like(yy, x_value)
    try:
        arrays = localization_error_arrays(rig, xx, yy, zz, disp, convention, lagging, planar)
    except GeometryError:
        _raise_for_first_bad_cell(rig, xx, yy, zz, disp, convention, lagging, planar)
        raise

    x2, y2, z2 = arrays.reconstructed
    base = np.sqrt((x2 - xx) ** 2 + (y2 - yy) ** 2 + (z2 - zz) ** 2)
    ex, ey, ez = arrays.error
    return (xx, yy, zz, arrays.magnitude, arrays.approx_magnitude,
            np.asarray(ex), np.asarray(ey), np.broadcast_to(ez, xx.shape).copy(), base)


def _raise_for_first_bad_cell(rig, xx, yy, zz, disp, convention, lagging, planar):
    for x, y, z in zip(xx, yy, zz):
        try:
            localization_error_arrays(rig, x, y, z, disp, convention, lagging, planar)
        except GeometryError as exc:
            raise exc.at((float(x), float(y), float(z))) from exc


def _row_tasks(cfg: SweepConfig):
    grid = cfg.effective_range()
    ys = grid.axis_values("y")
    zs = grid.axis_values("z")
    disp = cfg.displacement.as_tuple()
    for x_value in grid.axis_values("x"):
        yield (cfg.rig.half_separation_d, float(x_value), ys, zs, disp,
               cfg.convention.value, cfg.lagging_camera.value, cfg.planar)


def evaluate_grid(cfg: SweepConfig, progress: bool = False) -> CellTable:
    """
    Evaluate every grid cell. Work is split by x-rows; rows are merged in
    grid order, so the result does not depend on the worker count.
    """
    grid = cfg.effective_range()
    n_rows = len(grid.axis_values("x"))
    tasks = _row_tasks(cfg)
    rows = []
    with tqdm(total=n_rows, desc="Sweeping", unit="row", disable=not progress) as pbar:
        if cfg.workers == 1:
            for task in tasks:
                rows.append(_evaluate_row(task))
                pbar.update(1)
        else:
            with Pool(cfg.workers) as pool:
                for row in pool.imap(_evaluate_row, tasks):
                    rows.append(row)
                    pbar.update(1)

    columns = [np.concatenate(parts) for parts in zip(*rows)]
    return CellTable(*columns)


def find_argmax(cells) -> List[Point3]:
    """All points within ARGMAX_TOLERANCE of the maximum exact error, in grid order."""
    if len(cells) == 0:
        raise EmptySweep("cannot locate a maximum over zero cells")
    if isinstance(cells, CellTable):
        exact = cells.exact
        idx = np.flatnonzero(exact >= exact.max() - ARGMAX_TOLERANCE)
        return [Point3(*cells.point_at(i)) for i in idx]
    peak = max(cell.exact_error for cell in cells)
    return [cell.point for cell in cells if cell.exact_error >= peak - ARGMAX_TOLERANCE]


def relative_gaps(exact: np.ndarray, approx: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Mask of comparable cells and |exact - approx| / exact on them."""
    mask = exact > GAP_FLOOR
    return mask, np.abs(exact[mask] - approx[mask]) / exact[mask]


def restore_base_error(cells: CellTable, cfg: SweepConfig) -> CellTable:
    """
    Base-point error magnitudes for cells read back from a CSV.

    The CSV stores the error vector in the run's convention; a Midpoint
    vector is shifted by disp/2 to measure from the base point.
    """
    ex, ey, ez = cells.ex, cells.ey, cells.ez
    if cfg.convention is ReferenceConvention.MIDPOINT:
        disp = cfg.displacement
        ex, ey, ez = ex + disp.dx / 2.0, ey + disp.dy / 2.0, ez + disp.dz / 2.0
    return replace(cells, base_error=np.sqrt(ex * ex + ey * ey + ez * ez))


def summarize(cells: CellTable, cfg: Optional[SweepConfig] = None) -> SweepSummary:
    """
    Aggregate exactly the emitted cells.

    Without a config (cells read back from a CSV) the magnification is
    unknown and no notes are attached. Cells without base-point errors
    (all NaN) leave the approximation gap as None.
    """
    if len(cells) == 0:
        raise EmptySweep("sweep produced no cells")
    exact = cells.exact
    max_gap = None
    if not np.isnan(cells.base_error).all():
        _, gaps = relative_gaps(cells.base_error, cells.approx)
        max_gap = float(gaps.max()) if gaps.size else 0.0
    max_error = float(exact.max())
    magnification = None
    if cfg is not None and cfg.displacement.magnitude > 0:
        magnification = max_error / cfg.displacement.magnitude
    summary = SweepSummary(
        max_error=max_error,
        argmax_points=find_argmax(cells),
        argmax_error_vectors=[
            (float(cells.ex[i]), float(cells.ey[i]), float(cells.ez[i]))
            for i in np.flatnonzero(exact >= max_error - ARGMAX_TOLERANCE)
        ],
        min_error=float(exact.min()),
        cell_count=len(cells),
        mean_error=float(exact.mean()),
        max_approx_vs_exact_gap=max_gap,
        magnification=magnification,
    )
    if cfg is None:
        return summary
    return replace(summary, notes=discrepancy_notes(cfg, cells, summary))


def run_sweep(cfg: SweepConfig, progress: bool = False) -> SweepResult:
    """
    Evaluate the localization error at every grid point and summarize it.

    Raises:
        ConfigError: zero displacement
        GeometryError: tagged with the first offending grid point
    """
    if cfg.displacement.is_zero:
        raise ConfigError("sweep displacement must be non-zero")
    warn_if_large(cfg.displacement)
    grid = cfg.effective_range()
    logger.info("Sweeping %d cells (%s, d=%g cm, disp=%s cm, %s, workers=%d)",
                grid.cell_count, cfg.mode.value, cfg.rig.half_separation_d,
                cfg.displacement.as_tuple(), cfg.convention.value, cfg.workers)
    started = time.perf_counter()
    cells = evaluate_grid(cfg, progress=progress)
    summary = summarize(cells, cfg)
    logger.info("Sweep done in %.2fs: max error %.6g cm at %d point(s)",
                time.perf_counter() - started, summary.max_error,
                len(summary.argmax_points))
    return SweepResult(cells, summary)


def compare_exact_vs_approx(cfg: SweepConfig, progress: bool = False) -> ApproxComparison:
    """
    Relative gap |exact - approx| / exact per cell, BasePoint frame.

    Cells whose exact error is below GAP_FLOOR are left out, so a zero
    displacement yields an empty table.
    """
    if cfg.convention is not ReferenceConvention.BASE_POINT:
        logger.info("Approximation check uses the base-point convention")
        cfg = replace(cfg, convention=ReferenceConvention.BASE_POINT)
    cells = evaluate_grid(cfg, progress=progress)
    mask, gaps = relative_gaps(cells.exact, cells.approx)
    x, y, z = cells.x[mask], cells.y[mask], cells.z[mask]
    if gaps.size:
        worst = int(np.argmax(gaps))
        worst_gap = float(gaps[worst])
        worst_point = Point3(float(x[worst]), float(y[worst]), float(z[worst]))
    else:
        worst_gap, worst_point = 0.0, None
    return ApproxComparison(worst_gap, worst_point, x, y, z,
                            cells.exact[mask], cells.approx[mask], gaps)


def _displacement_is(disp: Displacement, expected: Tuple[float, float, float]) -> bool:
    return all(math.isclose(a, b, rel_tol=1e-9, abs_tol=1e-12)
               for a, b in zip(disp.as_tuple(), expected))


def _cell_error(cells: CellTable, point: Tuple[float, float, float]) -> Optional[float]:
    hit = np.flatnonzero((cells.x == point[0]) & (cells.y == point[1]) & (cells.z == point[2]))
    return float(cells.exact[hit[0]]) if hit.size else None


def discrepancy_notes(cfg: SweepConfig, cells: CellTable, summary: SweepSummary) -> List[str]:
    """Notes for runs that reproduce a published value the model does not agree with."""
    notes = []
    d = cfg.rig.half_separation_d
    disp = cfg.displacement
    if cfg.planar and d == 25.0 and _displacement_is(disp, (0.0, 0.01, 0.0)):
        value = _cell_error(cells, (0.0, 240.0, 0.0))
        if value is not None:
            notes.append(
                f"Error at (0, 240) is {value:.6g} cm ({cfg.convention.value}); the "
                "published value reads approximately 0.002 cm. Computed value kept."
            )
        if cfg.effective_range().y_min <= 40.0:
            notes.append(
                "Published y = 40 extension quotes 0.048 cm without naming x; the "
                "closed form gives about 0.026-0.029 cm at x = -70. Not reconciled."
            )
    if not cfg.planar and d == 12.5 and _displacement_is(disp, (0.01, 0.0, 0.0)):
        notes.append(
            f"3D maximum for d = 12.5 is {summary.max_error:.6g} cm; the published "
            "value 0.14 cm is not twice the d = 25 maximum. Computed value kept."
        )
    return notes
