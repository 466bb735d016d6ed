#!/usr/bin/env python3
"""
Timing-Skew Navigation Simulator - Main Entry Point

Locate markers from two-camera angles and measure how far the triangulated
position drifts when the cameras capture at slightly different times.
"""
import logging
import sys
from pathlib import Path

import click

# Add src to path
sys.path.insert(0, str(Path(__file__).parent))

from src.config import OutputSpec, RunConfig
from src.errors import GeometryError, NavigationError
from src.geometry import (
    AngleSet2,
    AngleSet3,
    CameraRig,
    Point2,
    Point3,
    angles_from_point_2d,
    angles_from_point_3d,
    point_from_angles_2d,
    point_from_angles_3d,
)
from src.runner import SweepRunner, regenerate_report, summary_document
from src.timing_error import (
    Displacement,
    LaggingCamera,
    MotionSpec,
    ReferenceConvention,
    displacement_from_motion,
    localization_error_2d,
    localization_error_3d,
)
from src.writers import format_number, read_cells_csv, to_json

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_GEOMETRY = 2
EXIT_TOLERANCE = 3


class ExitCodeGroup(click.Group):
    """click.Group that maps errors onto the 0/1/2/3 exit-code contract."""

    def main(self, *args, **kwargs):
        kwargs["standalone_mode"] = False
        try:
            rv = super().main(*args, **kwargs)
        except click.exceptions.Abort:
            click.echo("Aborted!", err=True)
            sys.exit(EXIT_USAGE)
        except click.ClickException as e:
            e.show()
            sys.exit(EXIT_USAGE)
        except GeometryError as e:
            click.echo(f"Error: {e}", err=True)
            sys.exit(EXIT_GEOMETRY)
        except (NavigationError, ValueError, OSError) as e:
            click.echo(f"Error: {e}", err=True)
            sys.exit(EXIT_USAGE)
        sys.exit(rv if isinstance(rv, int) else EXIT_OK)


class FloatTuple(click.ParamType):
    """Comma-separated numbers, e.g. "70,240" or "0.01,0,0"."""
    name = "numbers"

    def __init__(self, sizes=(2, 3)):
        self.sizes = sizes

    def convert(self, value, param, ctx):
        if isinstance(value, tuple):
            return value
        try:
            numbers = tuple(float(part.strip()) for part in str(value).split(","))
        except ValueError:
            self.fail(f"{value!r} is not a comma-separated list of numbers", param, ctx)
        if len(numbers) not in self.sizes:
            expected = " or ".join(str(n) for n in self.sizes)
            self.fail(f"expected {expected} values, got {len(numbers)}", param, ctx)
        return numbers


POINT = FloatTuple((2, 3))
VECTOR = FloatTuple((2, 3))
PLANE_AXES = click.Choice(["x,y", "x,z", "y,z", "y,x", "z,x", "z,y"])


def _as_3d(values):
    return tuple(values) + (0.0,) * (3 - len(values))


def _resolve_displacement(disp, motion, dt):
    """Displacement from --disp or from --motion and --dt, or None if neither was given."""
    if disp is not None and motion is not None:
        raise click.UsageError("use either --disp or --motion/--dt, not both")
    if motion is not None:
        if dt is None:
            raise click.UsageError("--motion needs --dt")
        return displacement_from_motion(MotionSpec(_as_3d(motion), dt))
    if dt is not None:
        raise click.UsageError("--dt needs --motion")
    if disp is not None:
        return Displacement(*_as_3d(disp))
    return None


def _print_values(names, values):
    for name, value in zip(names, values):
        click.echo(f"{name}={format_number(value)}")


def override_options(f):
    """CLI flags that take precedence over config-file keys."""
    options = [
        click.option('--d', 'd_cm', type=float, help='Half camera separation d (cm)'),
        click.option('--disp', type=VECTOR, help='Displacement "dx,dy[,dz]" (cm)'),
        click.option('--motion', type=VECTOR, help='Marker velocity "vx,vy[,vz]" (cm/s)'),
        click.option('--dt', type=float, help='Timing skew between captures (s)'),
        click.option('--step', type=float, help='Grid step (cm)'),
        click.option('--conv', type=click.Choice(['midpoint', 'basepoint']),
                     help='Reference point the error is measured from'),
        click.option('--workers', type=click.IntRange(min=1), help='Worker processes'),
        click.option('--progress', is_flag=True, help='Show a progress bar'),
    ]
    for option in reversed(options):
        f = option(f)
    return f


def _load_config(config, d_cm, disp, motion, dt, step, conv, workers) -> RunConfig:
    run_config = RunConfig.load(config)
    return run_config.with_overrides(
        d_cm=d_cm,
        displacement=_resolve_displacement(disp, motion, dt),
        step_cm=step,
        convention=conv,
        workers=workers,
    )


@click.group(cls=ExitCodeGroup)
@click.option('--verbose', '-v', is_flag=True, help='Debug logging')
@click.option('--quiet', '-q', is_flag=True, help='Only warnings and errors')
def cli(verbose, quiet):
    """
    Timing-Skew Navigation Simulator

    Two cameras at (-d, 0, 0) and (+d, 0, 0) report angles to a marker.
    When one camera captures later than the other, a moving marker is
    triangulated at the wrong place; these commands measure by how much.

    Example usage:

        python main.py locate angles --d 25 --point 0,25

        python main.py error --point 70,240 --disp 0.01,0

        python main.py sweep config/config.yaml

        python main.py approx-check config/config.yaml --tolerance 0.01
    """
    level = logging.DEBUG if verbose else logging.WARNING if quiet else logging.INFO
    logging.basicConfig(
        level=level,
        format='%(asctime)s %(levelname)s %(name)s: %(message)s',
        stream=sys.stderr,
    )


@cli.group()
def locate():
    """Convert between marker positions and camera angles."""


@locate.command('angles')
@click.option('--d', 'd_cm', type=float, default=25.0, show_default=True,
              help='Half camera separation d (cm)')
@click.option('--point', required=True, type=POINT, help='Marker "x,y" or "x,y,z" (cm)')
def locate_angles(d_cm, point):
    """Angles each camera reports for a marker."""
    rig = CameraRig(d_cm)
    if len(point) == 2:
        angles = angles_from_point_2d(rig, Point2(*point))
        _print_values(("alpha1", "beta1", "alpha2", "beta2"),
                      (angles.alpha1, angles.beta1, angles.alpha2, angles.beta2))
    else:
        angles = angles_from_point_3d(rig, Point3(*point))
        _print_values(("alpha1", "beta1", "gamma1", "alpha2", "beta2", "gamma2"),
                      (angles.alpha1, angles.beta1, angles.gamma1,
                       angles.alpha2, angles.beta2, angles.gamma2))


@locate.command('point')
@click.option('--d', 'd_cm', type=float, default=25.0, show_default=True,
              help='Half camera separation d (cm)')
@click.option('--alpha1', type=float, required=True, help='Camera 1 angle with +X (rad)')
@click.option('--alpha2', type=float, required=True, help='Camera 2 angle with +X (rad)')
@click.option('--beta1', type=float, help='Camera 1 angle with +Y (rad, 3D)')
@click.option('--gamma1', type=float, help='Camera 1 angle with +Z (rad, 3D)')
@click.option('--beta2', type=float, help='Camera 2 angle with +Y (rad, 3D)')
@click.option('--gamma2', type=float, help='Camera 2 angle with +Z (rad, 3D)')
def locate_point(d_cm, alpha1, alpha2, beta1, gamma1, beta2, gamma2):
    """Marker position triangulated from camera angles."""
    rig = CameraRig(d_cm)
    extra = (beta1, gamma1, beta2, gamma2)
    if all(value is None for value in extra):
        p = point_from_angles_2d(rig, AngleSet2.from_alphas(alpha1, alpha2))
        click.echo(",".join(format_number(v) for v in p.as_tuple()))
        return
    if any(value is None for value in extra):
        raise click.UsageError("3D needs all of --beta1 --gamma1 --beta2 --gamma2")
    p = point_from_angles_3d(rig, AngleSet3(alpha1, beta1, gamma1, alpha2, beta2, gamma2))
    click.echo(",".join(format_number(v) for v in p.as_tuple()))


@cli.command('error')
@click.option('--d', 'd_cm', type=float, default=25.0, show_default=True,
              help='Half camera separation d (cm)')
@click.option('--point', required=True, type=POINT, help='Marker "x,y" or "x,y,z" (cm)')
@click.option('--disp', type=VECTOR, help='Displacement "dx,dy[,dz]" (cm)')
@click.option('--motion', type=VECTOR, help='Marker velocity "vx,vy[,vz]" (cm/s)')
@click.option('--dt', type=float, help='Timing skew between captures (s)')
@click.option('--conv', type=click.Choice(['midpoint', 'basepoint']), default='midpoint',
              show_default=True, help='Reference point the error is measured from')
@click.option('--lagging', type=click.Choice(['a', 'b']), default='b', show_default=True,
              help='Camera that captures the displaced marker')
def error(d_cm, point, disp, motion, dt, conv, lagging):
    """Localization error for one marker position, as JSON."""
    disp = _resolve_displacement(disp, motion, dt)
    if disp is None:
        raise click.UsageError("give --disp or --motion with --dt")
    rig = CameraRig(d_cm)
    convention = ReferenceConvention.parse(conv)
    lagging_camera = LaggingCamera.parse(lagging)
    if len(point) == 2:
        if disp.dz != 0.0:
            raise click.UsageError("a 2D point needs a 2D displacement (dz = 0)")
        report = localization_error_2d(rig, Point2(*point), disp, convention, lagging_camera)
    else:
        report = localization_error_3d(rig, Point3(*point), disp, convention, lagging_camera)
    click.echo(to_json(report.to_dict()), nl=False)


@cli.command()
@click.argument('config', type=click.Path(dir_okay=False))
@override_options
def sweep(config, d_cm, disp, motion, dt, step, conv, workers, progress):
    """
    Evaluate the error over the configured grid and write its outputs.

    With no summary output configured, the summary JSON goes to stdout.
    """
    run_config = _load_config(config, d_cm, disp, motion, dt, step, conv, workers)
    runner = SweepRunner(run_config, progress=progress)
    result = runner.run()
    if not run_config.outputs_of("summary"):
        click.echo(to_json(summary_document(result.summary, run_config)), nl=False)


@cli.command('approx-check')
@click.argument('config', type=click.Path(dir_okay=False))
@override_options
@click.option('--tolerance', type=click.FloatRange(min=0.0), default=0.01, show_default=True,
              help='Largest acceptable relative gap')
@click.option('--table', type=click.Path(dir_okay=False), help='Write the per-cell gap table CSV here')
@click.pass_context
def approx_check(ctx, config, d_cm, disp, motion, dt, step, conv, workers, progress,
                 tolerance, table):
    """Compare exact errors with the first-order closed forms over the grid."""
    if disp is not None and all(v == 0.0 for v in disp):
        raise click.BadParameter("displacement must be non-zero", param_hint="--disp")
    run_config = _load_config(config, d_cm, disp, motion, dt, step, conv, workers)
    if run_config.resolved_displacement().is_zero:
        raise click.UsageError("approx-check needs a non-zero displacement")
    comparison = SweepRunner(run_config, progress=progress).check_approximation(table)

    click.echo(f"worst_gap={format_number(comparison.worst_gap)}")
    if comparison.worst_point is not None:
        click.echo("worst_point=" + ",".join(format_number(v) for v in comparison.worst_point.as_tuple()))
    click.echo(f"cells_compared={len(comparison)}")
    click.echo(f"tolerance={format_number(tolerance)}")
    if comparison.worst_gap > tolerance:
        offenders = len(comparison.offenders(tolerance))
        click.echo(f"Error: approximation gap {comparison.worst_gap:.4g} exceeds "
                   f"tolerance {tolerance:.4g} at {offenders} cell(s)", err=True)
        ctx.exit(EXIT_TOLERANCE)


@cli.command()
@click.argument('cells_csv', type=click.Path(dir_okay=False))
@click.option('--config', 'config_path', type=click.Path(dir_okay=False),
              help='Config of the run that produced the cells (adds magnification, notes, echo)')
@click.option('--summary', 'summary_path', type=click.Path(dir_okay=False), help='Summary JSON path')
@click.option('--heatmap', 'heatmap_path', type=click.Path(dir_okay=False), help='Heatmap SVG path')
@click.option('--plane', type=PLANE_AXES, help='Heatmap axes, e.g. "x,z"')
@click.option('--width', type=click.IntRange(min=1), help='Heatmap width (px)')
@click.option('--height', type=click.IntRange(min=1), help='Heatmap height (px)')
def report(cells_csv, config_path, summary_path, heatmap_path, plane, width, height):
    """
    Rebuild the summary JSON and heatmap SVG from an existing cells CSV.

    Without --summary the summary JSON goes to stdout.
    """
    cells = read_cells_csv(cells_csv)
    run_config = RunConfig.load(config_path) if config_path else None

    heatmap = None
    if heatmap_path:
        configured = run_config.outputs_of("heatmap") if run_config else []
        heatmap = configured[0] if configured else OutputSpec(kind="heatmap", path=heatmap_path)
        heatmap = OutputSpec(
            kind="heatmap",
            path=heatmap_path,
            plane=plane.split(",") if plane else heatmap.plane,
            color_min=heatmap.color_min,
            color_max=heatmap.color_max,
            cell_size_cm=heatmap.cell_size_cm,
            width=width or heatmap.width,
            height=height or heatmap.height,
        )

    summary = regenerate_report(cells, run_config, summary_path, heatmap_path, heatmap)
    if not summary_path:
        click.echo(to_json(summary_document(summary, run_config)), nl=False)


if __name__ == '__main__':
    cli()
