import logging
from typing import List, Optional

import click

from .config import OutputSpec, RunConfig
from .heatmap import HeatmapSpec, render_svg
from .sweep import (
    ApproxComparison,
    CellTable,
    SweepResult,
    SweepSummary,
    compare_exact_vs_approx,
    run_sweep,
    restore_base_error,
    summarize,
)
from .writers import OutputWriter, cells_csv, gaps_csv, to_json

logger = logging.getLogger(__name__)


def heatmap_spec(output: OutputSpec, cells: CellTable, step: Optional[float] = None) -> HeatmapSpec:
    """HeatmapSpec for one heatmap output entry; the cell size defaults to the grid step."""
    cell_size = output.cell_size_cm if output.cell_size_cm is not None else step
    return HeatmapSpec.default_for(
        cells,
        plane=output.plane,
        color_min=output.color_min,
        color_max=output.color_max,
        cell_size=cell_size,
        width=output.width,
        height=output.height,
    )


def summary_document(summary: SweepSummary, config: Optional[RunConfig] = None) -> dict:
    """Summary JSON body: the statistics followed by the resolved config."""
    document = summary.to_dict()
    if config is not None:
        document["config"] = config.to_dict()
    return document


def heatmap_title(config: Optional[RunConfig]) -> str:
    if config is None:
        return "Location Error"
    return f"{config.mode.upper()} Location Error"


class SweepRunner:
    """
    Config -> sweep -> output files pipeline behind the `sweep` and
    `approx-check` commands.
    """

    def __init__(self, config: RunConfig, progress: bool = False):
        """
        Args:
            config: Run configuration (CLI overrides already applied)
            progress: Show a tqdm bar over grid rows
        """
        self.config = config
        self.progress = progress
        self.sweep_config = config.to_sweep_config()

    def _paths(self, kinds: List[str]) -> List[str]:
        return [o.path for o in self.config.outputs if o.kind in kinds]

    def run(self) -> SweepResult:
        """
        Run the sweep and write every cells/summary/heatmap output.

        Output directories are checked before any computation; if writing
        fails part way, files already written are removed.
        """
        OutputWriter.prepare(self._paths(["cells", "summary", "heatmap"]))
        result = run_sweep(self.sweep_config, progress=self.progress)

        with OutputWriter() as writer:
            self.write_outputs(writer, result.cells, result.summary)

        self._print_statistics(result.summary, writer.written)
        return result

    def write_outputs(self, writer: OutputWriter, cells: CellTable, summary: SweepSummary) -> None:
        step = self.config.range.step_cm
        for output in self.config.outputs:
            if output.kind == "cells":
                writer.write_text(output.path, cells_csv(cells))
            elif output.kind == "summary":
                writer.write_text(output.path, to_json(summary_document(summary, self.config)))
            elif output.kind == "heatmap":
                spec = heatmap_spec(output, cells, step)
                writer.write_text(output.path, render_svg(cells, spec, heatmap_title(self.config)))
        for path in writer.written:
            logger.info("Wrote %s", path)

    def check_approximation(self, table_path: Optional[str] = None) -> ApproxComparison:
        """
        Compare exact and first-order errors over the grid, writing the
        per-cell gap table to table_path and to every `gaps` output.
        """
        paths = ([table_path] if table_path else []) + self._paths(["gaps"])
        OutputWriter.prepare(paths)
        comparison = compare_exact_vs_approx(self.sweep_config, progress=self.progress)
        if paths:
            text = gaps_csv(comparison)
            with OutputWriter() as writer:
                for path in paths:
                    writer.write_text(path, text)
            for path in writer.written:
                logger.info("Wrote %s", path)
        return comparison

    def _print_statistics(self, summary: SweepSummary, written: List[str]) -> None:
        click.echo("\n" + "=" * 50, err=True)
        click.echo("SWEEP STATISTICS", err=True)
        click.echo("=" * 50, err=True)
        click.echo(f"Cells evaluated: {summary.cell_count}", err=True)
        click.echo(f"Max error: {summary.max_error:.6g} cm", err=True)
        for point in summary.argmax_points[:5]:
            click.echo(f"  at {point.as_tuple()}", err=True)
        if len(summary.argmax_points) > 5:
            click.echo(f"  ... and {len(summary.argmax_points) - 5} more tied points", err=True)
        click.echo(f"Min error: {summary.min_error:.6g} cm", err=True)
        click.echo(f"Mean error: {summary.mean_error:.6g} cm", err=True)
        if summary.magnification is not None:
            click.echo(f"Magnification: {summary.magnification:.4g}x", err=True)
        for note in summary.notes:
            click.echo(f"Note: {note}", err=True)
        for path in written:
            click.echo(f"Output saved to: {path}", err=True)
        click.echo("=" * 50, err=True)


def regenerate_report(cells: CellTable, config: Optional[RunConfig],
                      summary_path: Optional[str], heatmap_path: Optional[str],
                      heatmap: Optional[OutputSpec] = None) -> SweepSummary:
    """
    Rebuild the summary JSON and/or heatmap SVG from already-computed cells.

    With a config the summary gets the magnification, approximation gap,
    notes and config echo of the original run; without one those are left
    out (null).
    """
    sweep_config = None
    if config is not None:
        sweep_config = config.to_sweep_config()
        cells = restore_base_error(cells, sweep_config)
    summary = summarize(cells, sweep_config)
    paths = [p for p in (summary_path, heatmap_path) if p]
    OutputWriter.prepare(paths)
    with OutputWriter() as writer:
        if summary_path:
            writer.write_text(summary_path, to_json(summary_document(summary, config)))
        if heatmap_path:
            output = heatmap or OutputSpec(kind="heatmap", path=heatmap_path)
            step = config.range.step_cm if config is not None else None
            spec = heatmap_spec(output, cells, step)
            writer.write_text(heatmap_path, render_svg(cells, spec, heatmap_title(config)))
    for path in writer.written:
        logger.info("Wrote %s", path)
    return summary
