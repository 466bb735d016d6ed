"""
SVG heatmaps of a sweep's exact error over one coordinate plane.

The CSV is the ground truth; the heatmap is a convenience rendering with a
discrete viridis ramp and the min/max printed in the legend.
"""
import io
from dataclasses import dataclass
from typing import Optional, Tuple

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .errors import ConfigError  # noqa: E402
from .sweep import AXES, CellTable  # noqa: E402

COLOR_LEVELS = 12
DPI = 100


@dataclass(frozen=True)
class HeatmapSpec:
    plane: Tuple[str, str] = ("x", "y")
    color_min: Optional[float] = None
    color_max: Optional[float] = None
    cell_size: Optional[float] = None
    width: int = 800
    height: int = 600

    def __post_init__(self):
        if len(self.plane) != 2 or any(axis not in AXES for axis in self.plane):
            raise ConfigError(f"heatmap plane must name two of {AXES}, got {self.plane}")
        if self.plane[0] == self.plane[1]:
            raise ConfigError(f"heatmap plane axes must differ, got {self.plane}")
        if self.width <= 0 or self.height <= 0:
            raise ConfigError("heatmap width and height must be positive")

    @classmethod
    def default_for(cls, cells: CellTable, **kwargs) -> 'HeatmapSpec':
        """Plane of the two varying axes; X-Z for full volumes, X-Y otherwise."""
        if kwargs.get("plane") is None:
            varying = [axis for axis in AXES if np.unique(getattr(cells, axis)).size > 1]
            if len(varying) == 2:
                kwargs["plane"] = tuple(varying)
            elif len(varying) == 3:
                kwargs["plane"] = ("x", "z")
            else:
                kwargs["plane"] = ("x", "y")
        kwargs["plane"] = tuple(kwargs["plane"])
        return cls(**{k: v for k, v in kwargs.items() if v is not None})


def project(cells: CellTable, plane: Tuple[str, str]):
    """
    Grid of the largest exact error per (u, v) pixel, collapsing the third axis.

    Returns:
        Tuple (u_values, v_values, grid) with grid indexed [v, u]
    """
    u_axis, v_axis = plane
    u = getattr(cells, u_axis)
    v = getattr(cells, v_axis)
    u_values, u_index = np.unique(u, return_inverse=True)
    v_values, v_index = np.unique(v, return_inverse=True)
    grid = np.full((v_values.size, u_values.size), -np.inf)
    np.maximum.at(grid, (v_index, u_index), cells.exact)
    return u_values, v_values, grid


def _edges(values: np.ndarray, cell_size: Optional[float]) -> Tuple[float, float]:
    if cell_size is None:
        cell_size = float(np.min(np.diff(values))) if values.size > 1 else 1.0
    return float(values[0] - cell_size / 2), float(values[-1] + cell_size / 2)


def render_svg(cells: CellTable, spec: HeatmapSpec, title: str = "Location Error") -> str:
    """Render the heatmap and return the SVG document as text."""
    if len(cells) == 0:
        raise ConfigError("cannot draw a heatmap of an empty sweep")
    u_values, v_values, grid = project(cells, spec.plane)
    low = float(np.min(cells.exact)) if spec.color_min is None else spec.color_min
    high = float(np.max(cells.exact)) if spec.color_max is None else spec.color_max
    if high <= low:
        high = low + 1e-12

    rc = {"svg.hashsalt": "timing-skew", "svg.fonttype": "none"}
    with plt.rc_context(rc):
        fig, ax = plt.subplots(figsize=(spec.width / DPI, spec.height / DPI), dpi=DPI)
        try:
            image = ax.imshow(
                grid,
                origin="lower",
                aspect="auto",
                interpolation="nearest",
                cmap=matplotlib.colormaps["viridis"].resampled(COLOR_LEVELS),
                vmin=low,
                vmax=high,
                extent=(*_edges(u_values, spec.cell_size), *_edges(v_values, spec.cell_size)),
            )
            colorbar = fig.colorbar(image, ax=ax)
            colorbar.set_label("error (cm)")
            colorbar.set_ticks([low, high])
            colorbar.set_ticklabels([f"min {low:.4g}", f"max {high:.4g}"])
            ax.set_xlabel(f"{spec.plane[0].upper()} (cm)")
            ax.set_ylabel(f"{spec.plane[1].upper()} (cm)")
            ax.set_title(title)
            buffer = io.StringIO()
            fig.savefig(buffer, format="svg", metadata={"Date": None})
        finally:
            plt.close(fig)
    return buffer.getvalue()
