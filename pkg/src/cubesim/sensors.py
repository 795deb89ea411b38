"""Sensor emulation from the calibration fits.

Distances are cm and angles degrees throughout. The blink value is the only
stateful reading; its delay line is owned by whoever advances the clock.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass

from .config import Calibration, SensorFits, SensorRig
from .geometry import Point, Pose, fold_quarter, ray_circle, ray_segment, wrap_deg
from .world import Cube, SurfaceKind, World, classify_point

DEFAULT_FITS = SensorFits()
DEFAULT_RIG = SensorRig()
SIDES = ("left", "right")


def polyval(coeffs, x: float) -> float:
    """Horner evaluation, coefficients highest power first."""
    acc = 0.0
    for c in coeffs:
        acc = acc * x + c
    return acc


# -- fit factors -------------------------------------------------------------

def delta_factor(d: float, fits: SensorFits = DEFAULT_FITS) -> float:
    """Distance factor, held at its endpoint values outside the fitted range."""
    lo, hi = fits.delta_domain
    return polyval(fits.delta_coeffs, min(max(d, lo), hi))


def beta_factor(alpha: float, side: str, fits: SensorFits = DEFAULT_FITS) -> float:
    """View-angle factor; zero outside the sensor's view half-angle."""
    if abs(alpha) > fits.blink_view_half_angle:
        return 0.0
    coeffs = fits.beta_left_coeffs if side == "left" else fits.beta_right_coeffs
    return max(polyval(coeffs, alpha) / fits.beta_norm, 0.0)


def phi_fit(phi: float, fits: SensorFits = DEFAULT_FITS) -> float:
    """Unclamped relative orientation correction."""
    return (fits.phi_norm - polyval(fits.phi_coeffs, phi)) / fits.phi_norm


def phi_factor(phi: float, fits: SensorFits = DEFAULT_FITS) -> float:
    lo, hi = fits.phi_domain
    if not lo <= phi <= hi:
        return 0.0
    return min(max(phi_fit(phi, fits), 0.0), 1.0)


def small_delta(d: float, fits: SensorFits = DEFAULT_FITS) -> float:
    """Distance dependence of the orientation correction, as the fit prints it."""
    return polyval(fits.small_delta_coeffs, d)


def orientation_scale(d: float, fits: SensorFits = DEFAULT_FITS) -> float:
    if fits.delta_mode == "delta-raw":
        return small_delta(d, fits)
    return abs(small_delta(d, fits)) / 100.0


def red_fit(d: float, side: str, color: str, fits: SensorFits = DEFAULT_FITS) -> float:
    if color == "red":
        coeffs = fits.red_left_coeffs if side == "left" else fits.red_right_coeffs
        value = polyval(coeffs, d)
    else:
        value = fits.bluegreen_slope * (d - fits.bluegreen_reference) + fits.bluegreen_intercept
    return max(value, 0.0)


def ultrasound_cutoff(gamma: float, fits: SensorFits = DEFAULT_FITS) -> float:
    """Largest detectable bearing for a cube whose face normal is ``gamma`` off."""
    g = fold_quarter(gamma)
    span = fits.cutoff_face_on - fits.cutoff_corner_on
    return -span / 45.0 * g + fits.cutoff_face_on


# -- downward reflection -----------------------------------------------------

def reflection_value(kind: SurfaceKind, fits: SensorFits = DEFAULT_FITS) -> int:
    if kind is SurfaceKind.WHITE:
        return fits.reflection_white
    if kind is SurfaceKind.CARDBOARD:
        return fits.reflection_cardboard
    return fits.reflection_off


def read_reflection(world: World, robot_pose: Pose, rig: SensorRig = DEFAULT_RIG,
                    fits: SensorFits = DEFAULT_FITS) -> int:
    p = robot_pose.compose(rig.reflection_offset)
    return reflection_value(classify_point(world.arena, (p.x, p.y)), fits)


# -- ultrasound ----------------------------------------------------------------

def read_ultrasound(world: World, robot_pose: Pose, rig: SensorRig = DEFAULT_RIG,
                    fits: SensorFits = DEFAULT_FITS) -> float | None:
    sensor = robot_pose.compose(rig.ultrasound_offset)
    best = None
    for c in world.cubes:
        if c.removed:
            continue
        dx, dy = c.x - sensor.x, c.y - sensor.y
        dist = math.hypot(dx, dy)
        if dist > fits.ultrasound_max_range:
            continue
        bearing = wrap_deg(math.degrees(math.atan2(dy, dx)) - sensor.heading)
        gamma = fold_quarter(sensor.heading - c.orientation)
        if abs(bearing) > ultrasound_cutoff(gamma, fits):
            continue
        if best is None or dist < best:
            best = dist
    if best is None:
        return None
    return fits.ultrasound_slope * best + fits.ultrasound_intercept


# -- blink -------------------------------------------------------------------

@dataclass(frozen=True)
class LightGeometry:
    d: float
    alpha: float  # negative when the light is left of the sensor axis
    gamma: float
    phi: float


def geometry_angles(sensor_pose: Pose, light: Point, cube_orientation: float | None = None) -> LightGeometry:
    """Distance and angles from a sensor to a light (optionally inside a cube).

    gamma folds the sensor axis against the cube-face normals, phi folds the
    line of sight against them; both end up in [0, 45].
    """
    dx, dy = light[0] - sensor_pose.x, light[1] - sensor_pose.y
    d = math.hypot(dx, dy)
    sight = math.degrees(math.atan2(dy, dx))
    alpha = -wrap_deg(sight - sensor_pose.heading)
    if cube_orientation is None:
        return LightGeometry(d, alpha, 0.0, 0.0)
    gamma = fold_quarter(sensor_pose.heading - cube_orientation)
    phi = fold_quarter(sight - cube_orientation)
    return LightGeometry(d, alpha, gamma, phi)


def light_value(g: LightGeometry, side: str, in_cube: bool, fits: SensorFits = DEFAULT_FITS) -> float:
    """Blink contribution of one light seen by one sensor."""
    base = delta_factor(g.d, fits) * beta_factor(g.alpha, side, fits)
    if base <= 0.0:
        return 0.0
    value = base
    if in_cube:
        corr = phi_factor(g.phi, fits)
        if corr:
            value = base - base * corr * orientation_scale(g.d, fits)
    return min(max(value, 0.0), base)


def blink_raw(world: World, sensor_pose: Pose, side: str, fits: SensorFits = DEFAULT_FITS) -> float:
    """Undelayed blink value of one light sensor: the brightest light wins."""
    best = 0.0
    half = fits.blink_view_half_angle
    for x, y, host in world.active_lights():
        sight = math.degrees(math.atan2(y - sensor_pose.y, x - sensor_pose.x))
        if abs(wrap_deg(sight - sensor_pose.heading)) > half:
            continue  # outside the view cone: beta is zero
        g = geometry_angles(sensor_pose, (x, y), host.orientation if host is not None else None)
        v = light_value(g, side, host is not None, fits)
        if v > best:
            best = v
    return best


def blink_sensor_poses(robot_pose: Pose, rig: SensorRig = DEFAULT_RIG) -> tuple[Pose, Pose]:
    return (robot_pose.compose(rig.light_left_offset, rig.light_left_facing),
            robot_pose.compose(rig.light_right_offset, rig.light_right_facing))


def blink_current(world: World, robot_pose: Pose, rig: SensorRig = DEFAULT_RIG,
                  fits: SensorFits = DEFAULT_FITS) -> float:
    """Larger of the left and right raw blink values, as stored in the delay line."""
    if not world.lights:
        return 0.0
    left, right = blink_sensor_poses(robot_pose, rig)
    return max(blink_raw(world, left, "left", fits), blink_raw(world, right, "right", fits))


class BlinkDelay:
    """Fixed-length delay line; ``read`` returns the value pushed ``length`` pushes ago."""

    def __init__(self, length: int):
        if length < 1:
            raise ValueError("delay length must be at least one tick")
        self.length = length
        self._buf = deque([0.0] * length, maxlen=length)

    def push(self, value: float) -> None:
        self._buf.append(value)

    def read(self) -> float:
        return self._buf[0]

    def reset(self) -> None:
        self._buf.extend([0.0] * self.length)

    @classmethod
    def for_calibration(cls, calibration: Calibration) -> BlinkDelay:
        return cls(calibration.blink_delay_ticks)


# -- red reflection ----------------------------------------------------------

def cube_colliders(cube: Cube, core_fraction: float) -> tuple[list[tuple[Point, Point]], float]:
    """Crossed wall segments through the cube centre, plus the core radius."""
    h = cube.side / 2.0
    r = math.radians(cube.orientation)
    c, s = math.cos(r), math.sin(r)
    walls = []
    for ux, uy in ((c, s), (-s, c)):
        walls.append(((cube.x - h * ux, cube.y - h * uy), (cube.x + h * ux, cube.y + h * uy)))
    return walls, core_fraction * h


def ray_angles(fits: SensorFits = DEFAULT_FITS) -> list[float]:
    n = fits.red_rays
    if n == 1:
        return [0.0]
    half = fits.red_view_angle / 2.0
    step = fits.red_view_angle / (n - 1)
    return [-half + i * step for i in range(n)]


def cast_ray(world: World, ox: float, oy: float, heading: float, fits: SensorFits = DEFAULT_FITS
             ) -> tuple[float, Cube] | None:
    r = math.radians(heading)
    dx, dy = math.cos(r), math.sin(r)
    best = None
    for cube in world.cubes:
        if cube.removed:
            continue
        if math.hypot(cube.x - ox, cube.y - oy) > fits.red_max_range + cube.side:
            continue
        walls, radius = cube_colliders(cube, fits.core_radius_fraction)
        hits = [ray_segment(ox, oy, dx, dy, a, b) for a, b in walls]
        hits.append(ray_circle(ox, oy, dx, dy, cube.x, cube.y, radius))
        for t in hits:
            if t is not None and (best is None or t < best[0]):
                best = (t, cube)
    return best


def read_red(world: World, robot_pose: Pose, side: str, channel: str = "red",
             rig: SensorRig = DEFAULT_RIG, fits: SensorFits = DEFAULT_FITS) -> float:
    """Mean of per-ray reflection values over the sensor's view angle."""
    if channel != "red":
        raise ValueError("only the red channel is modelled")
    if side not in SIDES:
        raise ValueError(f"side must be 'left' or 'right', got {side!r}")
    left, right = blink_sensor_poses(robot_pose, rig)
    sensor = left if side == "left" else right
    total = 0.0
    for offset in ray_angles(fits):
        hit = cast_ray(world, sensor.x, sensor.y, sensor.heading + offset, fits)
        if hit is None or hit[0] > fits.red_max_range:
            total += fits.red_ambient
        else:
            total += red_fit(hit[0], side, hit[1].color, fits)
    return total / fits.red_rays
