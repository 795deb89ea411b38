"""Calibration constants, sensor fits and the calibration-file loader.

Everything here is plain data. Coefficient tuples are ordered from the
highest power down, so ``(a, b, c)`` means ``a*x**2 + b*x + c``.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

CALIBRATION_SCHEMA = "cubesim.calibration/1"


@dataclass(frozen=True)
class MotionConstants:
    cm_per_unit: float = 9.49223
    speed_slope: float = 0.35  # cm/s per percent, calibration placeholder
    turn_slope: float = 2.0  # deg/s per percent of belt difference, calibration placeholder
    turn_saturation_pct: float = 60.0
    speed_saturation_pct: float = 75.0
    accel_limit_pp_per_tick: float = 9.0
    push_threshold_pct: float = 20.0
    push_slowdown_fraction: float = 0.05
    tick_rate_hz: int = 50
    right_gain: float = 1.0

    @property
    def tick_ms(self) -> int:
        return 1000 // self.tick_rate_hz

    @property
    def tick_s(self) -> float:
        return 1.0 / self.tick_rate_hz


@dataclass(frozen=True)
class RobotGeometry:
    """Rectangular footprint centred on the pose; length runs along the heading."""

    length: float = 18.0
    width: float = 14.0


@dataclass(frozen=True)
class SensorRig:
    """Sensor offsets in the robot frame: x forward, y to the left, cm."""

    ultrasound_offset: tuple[float, float] = (9.0, 0.0)
    reflection_offset: tuple[float, float] = (7.0, 0.0)
    light_left_offset: tuple[float, float] = (2.0, 3.0)
    light_right_offset: tuple[float, float] = (2.0, -3.0)
    light_left_facing: float = 0.0  # deg, relative to the robot heading
    light_right_facing: float = 0.0


@dataclass(frozen=True)
class SensorFits:
    # downward reflection, per surface
    reflection_white: int = 47
    reflection_cardboard: int = 36
    reflection_off: int = 16

    # ultrasound: linear cutoff between face-on and corner-on cubes
    cutoff_face_on: float = 35.0
    cutoff_corner_on: float = 22.0
    ultrasound_slope: float = 1.0
    ultrasound_intercept: float = 0.0
    ultrasound_max_range: float = 255.0

    # blink distance / view-angle / orientation fits
    blink_delay_ms: int = 500
    delta_coeffs: tuple[float, ...] = (3e-6, -0.0011, 0.144, -8.55, 200.0)
    delta_domain: tuple[float, float] = (15.0, 80.0)
    beta_norm: float = 24.0
    beta_left_coeffs: tuple[float, ...] = (8e-6, 7e-5, -0.0277, -0.1567, 25.023)
    beta_right_coeffs: tuple[float, ...] = (7e-6, 7e-5, -0.027, -0.0891, 26.005)
    blink_view_half_angle: float = 35.0
    phi_norm: float = 24.0
    phi_coeffs: tuple[float, ...] = (0.0338, -3.0929, 87.133)
    phi_domain: tuple[float, float] = (30.0, 60.0)
    small_delta_coeffs: tuple[float, ...] = (3e-9, -1e-6, 0.0002, -0.0144, -0.482, -4.6)
    delta_mode: str = "delta-percent"  # or "delta-raw"

    # red reflection raycasts
    red_rays: int = 21
    red_view_angle: float = 20.0  # full opening angle, deg
    red_left_coeffs: tuple[float, ...] = (-0.0114, 0.8174, -19.52, 158.94)
    red_right_coeffs: tuple[float, ...] = (-0.0177, 1.244, -28.979, 229.03)
    bluegreen_slope: float = -0.1572
    bluegreen_reference: float = 5.0
    bluegreen_intercept: float = 5.5442
    red_ambient: float = 0.0
    red_max_range: float = 30.0
    core_radius_fraction: float = 0.6  # central collider radius / cube half-side

    def __post_init__(self):
        if self.delta_mode not in ("delta-percent", "delta-raw"):
            raise ValueError(f"unknown delta_mode {self.delta_mode!r}")
        if self.red_rays < 1:
            raise ValueError("red_rays must be positive")


@dataclass(frozen=True)
class Calibration:
    motion: MotionConstants = field(default_factory=MotionConstants)
    robot: RobotGeometry = field(default_factory=RobotGeometry)
    rig: SensorRig = field(default_factory=SensorRig)
    fits: SensorFits = field(default_factory=SensorFits)

    @property
    def blink_delay_ticks(self) -> int:
        return self.fits.blink_delay_ms // self.motion.tick_ms

    def to_dict(self) -> dict[str, Any]:
        d = dataclasses.asdict(self)
        d["schema"] = CALIBRATION_SCHEMA
        return d

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> Calibration:
        data = dict(data)
        schema = data.pop("schema", CALIBRATION_SCHEMA)
        if schema != CALIBRATION_SCHEMA:
            raise ValueError(f"unsupported calibration schema {schema!r}")
        return _merge(cls(), data)


def _merge(obj, overrides: dict[str, Any]):
    """Return a copy of dataclass ``obj`` with nested ``overrides`` applied."""
    known = {f.name: f for f in dataclasses.fields(obj)}
    changes = {}
    for key, value in overrides.items():
        if key not in known:
            raise ValueError(f"unknown field {key!r} for {type(obj).__name__}")
        current = getattr(obj, key)
        if dataclasses.is_dataclass(current):
            if not isinstance(value, dict):
                raise ValueError(f"field {key!r} expects a mapping")
            changes[key] = _merge(current, value)
        elif isinstance(current, tuple):
            changes[key] = tuple(float(v) for v in value)
        elif isinstance(current, bool) or isinstance(current, str):
            changes[key] = value
        elif isinstance(current, int) and not isinstance(value, bool) and float(value).is_integer():
            changes[key] = int(value)
        else:
            changes[key] = float(value)
    return dataclasses.replace(obj, **changes)


def load_calibration(path: str | Path | None) -> Calibration:
    if path is None:
        return Calibration()
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ValueError(f"cannot read calibration file {path}: {exc}") from exc
    return Calibration.from_dict(data)


def save_calibration(calibration: Calibration, path: str | Path) -> None:
    Path(path).write_text(json.dumps(calibration.to_dict(), indent=2, sort_keys=True) + "\n")
