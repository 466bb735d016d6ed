"""
Result serialization: cells CSV, gap-table CSV, summary JSON, and the
atomic file writer that removes partial outputs when a run fails.

Floats are written with 9 significant digits ('%.9g'), so re-running the
same configuration reproduces the files byte for byte.
"""
import io
import json
import logging
import os
import tempfile
from typing import List

import numpy as np

from .errors import ConfigError
from .sweep import ApproxComparison, CellTable

logger = logging.getLogger(__name__)


def _default_file_mode() -> int:
    """Mode a plain open() would give a new file under the current umask."""
    umask = os.umask(0)
    os.umask(umask)
    return 0o666 & ~umask


CELLS_HEADER = "x_cm,y_cm,z_cm,exact_err_cm,approx_err_cm,ex_cm,ey_cm,ez_cm"
GAPS_HEADER = "x_cm,y_cm,z_cm,exact_err_cm,approx_err_cm,rel_gap"
FLOAT_FORMAT = "%.9g"


def round_sig(value: float) -> float:
    """Round to 9 significant digits; -0.0 becomes 0.0."""
    return float(FLOAT_FORMAT % value) + 0.0


def format_number(value: float) -> str:
    return FLOAT_FORMAT % (value + 0.0)


def _rounded(obj):
    if isinstance(obj, bool) or obj is None or isinstance(obj, (int, str)):
        return obj
    if isinstance(obj, (float, np.floating)):
        return round_sig(float(obj))
    if isinstance(obj, dict):
        return {key: _rounded(value) for key, value in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_rounded(value) for value in obj]
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def to_json(obj) -> str:
    """JSON text with insertion-ordered keys and 9-significant-digit floats."""
    return json.dumps(_rounded(obj), indent=2) + "\n"


def _csv_text(header: str, columns: List[np.ndarray]) -> str:
    buffer = io.StringIO()
    buffer.write(header + "\n")
    if columns and len(columns[0]):
        # Adding 0.0 turns -0.0 into 0.0.
        table = np.column_stack([np.asarray(c, dtype=float) + 0.0 for c in columns])
        np.savetxt(buffer, table, fmt=FLOAT_FORMAT, delimiter=",", newline="\n")
    return buffer.getvalue()


def cells_csv(cells: CellTable) -> str:
    """One row per grid cell, in sweep (row-major) order."""
    return _csv_text(CELLS_HEADER, [cells.x, cells.y, cells.z, cells.exact,
                                    cells.approx, cells.ex, cells.ey, cells.ez])


def gaps_csv(comparison: ApproxComparison) -> str:
    return _csv_text(GAPS_HEADER, [comparison.x, comparison.y, comparison.z,
                                   comparison.exact, comparison.approx, comparison.gap])


def read_cells_csv(path: str) -> CellTable:
    """
    Load a cells CSV written by cells_csv.

    The CSV does not carry base-point errors, so base_error is NaN until
    restore_base_error fills it in from a run config.
    """
    if not os.path.exists(path):
        raise ConfigError(f"cells file not found: {path}")
    with open(path, 'r') as f:
        header = f.readline().strip()
        if header != CELLS_HEADER:
            raise ConfigError(f"{path} is not a cells CSV (header {header!r})")
        data = np.loadtxt(f, delimiter=",", ndmin=2)
    if data.size == 0:
        data = np.empty((0, 8))
    x, y, z, exact, approx, ex, ey, ez = (data[:, i] for i in range(8))
    return CellTable(x, y, z, exact, approx, ex, ey, ez, np.full_like(exact, np.nan))


class OutputWriter:
    """
    Writes result files atomically (temp file + rename).

    Used as a context manager: if the block raises, every file written
    inside it is removed again.
    """

    def __init__(self):
        self.written: List[str] = []

    @staticmethod
    def prepare(paths: List[str]) -> None:
        """Create output directories and check they are writable, before any compute."""
        for path in paths:
            directory = os.path.dirname(os.path.abspath(path))
            try:
                os.makedirs(directory, exist_ok=True)
            except OSError as e:
                raise ConfigError(f"cannot create output directory {directory}: {e}") from e
            if not os.access(directory, os.W_OK):
                raise ConfigError(f"output directory is not writable: {directory}")

    def write_text(self, path: str, text: str) -> None:
        directory = os.path.dirname(os.path.abspath(path))
        fd, tmp_path = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
        try:
            with os.fdopen(fd, 'w', newline="") as f:
                f.write(text)
            # mkstemp creates 0600
            os.chmod(tmp_path, _default_file_mode())
            os.replace(tmp_path, path)
        except BaseException:
            if os.path.exists(tmp_path):
                os.remove(tmp_path)
            raise
        self.written.append(path)
        logger.debug("Wrote %s", path)

    def rollback(self) -> None:
        for path in self.written:
            if os.path.exists(path):
                os.remove(path)
                logger.warning("Removed partial output %s", path)
        self.written.clear()

    def __enter__(self) -> 'OutputWriter':
        return self

    def __exit__(self, exc_type, exc, tb) -> bool:
        if exc_type is not None:
            self.rollback()
        return False
