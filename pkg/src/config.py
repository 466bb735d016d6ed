import os
from dataclasses import asdict, dataclass, field, replace
from typing import List, Optional

import yaml

from .errors import ConfigError
from .geometry import CameraRig
from .sweep import OperatingRange, SweepConfig, SweepMode
from .timing_error import (
    Displacement,
    LaggingCamera,
    MotionSpec,
    ReferenceConvention,
    displacement_from_motion,
)

OUTPUT_KINDS = {"cells": "csv", "summary": "json", "heatmap": "svg", "gaps": "csv"}


@dataclass
class RigSection:
    d_cm: float = 25.0


@dataclass
class AxisRange:
    min: float = 0.0
    max: float = 0.0


@dataclass
class RangeSection:
    x: AxisRange = field(default_factory=lambda: AxisRange(-70.0, 70.0))
    y: AxisRange = field(default_factory=lambda: AxisRange(90.0, 240.0))
    z: AxisRange = field(default_factory=AxisRange)
    step_cm: float = 1.0


@dataclass
class DisplacementSection:
    dx_cm: float = 0.0
    dy_cm: float = 0.0
    dz_cm: float = 0.0


@dataclass
class MotionSection:
    vx_cm_s: float = 0.0
    vy_cm_s: float = 0.0
    vz_cm_s: float = 0.0
    dt_s: float = 0.0


@dataclass
class SliceSection:
    axis: str = "y"
    value: float = 240.0


@dataclass
class OutputSpec:
    kind: str = "summary"
    path: str = "output/summary.json"
    format: Optional[str] = None
    # Heatmap-only keys
    plane: Optional[List[str]] = None
    color_min: Optional[float] = None
    color_max: Optional[float] = None
    cell_size_cm: Optional[float] = None
    width: int = 800
    height: int = 600

    def __post_init__(self):
        if self.kind not in OUTPUT_KINDS:
            raise ConfigError(f"unknown output kind {self.kind!r}; expected one of {sorted(OUTPUT_KINDS)}")
        expected = OUTPUT_KINDS[self.kind]
        if self.format is None:
            self.format = expected
        if self.format != expected:
            raise ConfigError(f"{self.kind} outputs are written as {expected}, not {self.format}")


@dataclass
class RunConfig:
    rig: RigSection = field(default_factory=RigSection)
    range: RangeSection = field(default_factory=RangeSection)
    displacement: Optional[DisplacementSection] = None
    motion: Optional[MotionSection] = None
    convention: str = "midpoint"
    mode: str = "2d"
    slice: Optional[SliceSection] = None
    lagging_camera: str = "b"
    workers: int = 1
    outputs: List[OutputSpec] = field(default_factory=list)

    @classmethod
    def load(cls, config_path: str) -> 'RunConfig':
        """Load a run configuration from a YAML file."""
        if not os.path.exists(config_path):
            raise ConfigError(f"config file not found: {config_path}")

        with open(config_path, 'r') as f:
            try:
                config_dict = yaml.safe_load(f)
            except yaml.YAMLError as e:
                raise ConfigError(f"cannot parse {config_path}: {e}") from e

        if not config_dict:
            return cls()
        if not isinstance(config_dict, dict):
            raise ConfigError(f"{config_path} must hold a mapping at the top level")
        return cls.from_dict(config_dict)

    @classmethod
    def from_dict(cls, config_dict: dict) -> 'RunConfig':
        def build(section_type, data, name):
            if data is None:
                return None
            if not isinstance(data, dict):
                raise ConfigError(f"section {name!r} must be a mapping")
            try:
                return section_type(**data)
            except TypeError as e:
                raise ConfigError(f"bad keys in section {name!r}: {e}") from e

        range_dict = dict(config_dict.get('range') or {})
        axes = {axis: build(AxisRange, range_dict.pop(axis, None), f"range.{axis}")
                for axis in ("x", "y", "z")}
        range_section = build(RangeSection, range_dict, "range")
        for axis, value in axes.items():
            if value is not None:
                setattr(range_section, axis, value)

        known = {'rig', 'range', 'displacement', 'motion', 'convention', 'mode',
                 'slice', 'lagging_camera', 'workers', 'outputs'}
        unknown = set(config_dict) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")

        outputs = config_dict.get('outputs') or []
        if not isinstance(outputs, list):
            raise ConfigError("outputs must be a list")

        return cls(
            rig=build(RigSection, config_dict.get('rig') or {}, "rig"),
            range=range_section,
            displacement=build(DisplacementSection, config_dict.get('displacement'), "displacement"),
            motion=build(MotionSection, config_dict.get('motion'), "motion"),
            convention=str(config_dict.get('convention', 'midpoint')),
            mode=str(config_dict.get('mode', '2d')).lower(),
            slice=build(SliceSection, config_dict.get('slice'), "slice"),
            lagging_camera=str(config_dict.get('lagging_camera', 'b')),
            workers=int(config_dict.get('workers', 1)),
            outputs=[build(OutputSpec, item, "outputs[]") for item in outputs],
        )

    def with_overrides(self, d_cm: Optional[float] = None,
                       displacement: Optional[Displacement] = None,
                       motion: Optional[MotionSpec] = None,
                       step_cm: Optional[float] = None,
                       convention: Optional[str] = None,
                       workers: Optional[int] = None) -> 'RunConfig':
        """Copy with command-line values taking precedence over file keys."""
        config = replace(self)
        if d_cm is not None:
            config.rig = RigSection(d_cm)
        if displacement is not None:
            config.displacement = DisplacementSection(*displacement.as_tuple())
            config.motion = None
        if motion is not None:
            config.motion = MotionSection(*motion.velocity, motion.timing_skew_dt)
            config.displacement = None
        if step_cm is not None:
            config.range = replace(self.range, step_cm=step_cm)
        if convention is not None:
            config.convention = convention
        if workers is not None:
            config.workers = workers
        return config

    def resolved_displacement(self) -> Displacement:
        """The displacement section, or velocity * dt from the motion section."""
        if (self.displacement is None) == (self.motion is None):
            raise ConfigError("exactly one of 'displacement' or 'motion' must be given")
        if self.displacement is not None:
            s = self.displacement
            return Displacement(float(s.dx_cm), float(s.dy_cm), float(s.dz_cm))
        m = self.motion
        try:
            spec = MotionSpec((float(m.vx_cm_s), float(m.vy_cm_s), float(m.vz_cm_s)), float(m.dt_s))
        except ValueError as e:
            raise ConfigError(str(e)) from e
        return displacement_from_motion(spec)

    def to_sweep_config(self) -> SweepConfig:
        try:
            grid = OperatingRange(
                x_min=float(self.range.x.min), x_max=float(self.range.x.max),
                y_min=float(self.range.y.min), y_max=float(self.range.y.max),
                z_min=float(self.range.z.min), z_max=float(self.range.z.max),
                step=float(self.range.step_cm),
            )
            rig = CameraRig(float(self.rig.d_cm))
        except ValueError as e:
            raise ConfigError(str(e)) from e
        return SweepConfig(
            rig=rig,
            range=grid,
            displacement=self.resolved_displacement(),
            convention=ReferenceConvention.parse(self.convention),
            mode=SweepMode.parse(self.mode),
            slice=(self.slice.axis, float(self.slice.value)) if self.slice else None,
            lagging_camera=LaggingCamera.parse(self.lagging_camera),
            workers=self.workers,
        )

    def outputs_of(self, kind: str) -> List[OutputSpec]:
        return [o for o in self.outputs if o.kind == kind]

    def to_dict(self) -> dict:
        """Fully resolved configuration, echoed into summary files."""
        echo = asdict(self)
        if self.displacement is None:
            echo.pop('displacement')
        if self.motion is None:
            echo.pop('motion')
        if self.slice is None:
            echo.pop('slice')
        echo['resolved_displacement_cm'] = list(self.resolved_displacement().as_tuple())
        return echo
