"""Belt motor model, pose integration and kinematic cube pushing."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .config import MotionConstants, RobotGeometry
from .geometry import Pose, rect_corners, rect_mtv
from .world import Arena, World, classify_point, cube_fully_outside_white, SurfaceKind

_DEFAULT_MOTION = MotionConstants()
CONTACT_TOLERANCE = 0.05  # cm; closer than this counts as touching


@dataclass(frozen=True)
class MotorState:
    coded_left: float = 0.0
    coded_right: float = 0.0
    effective_left: float = 0.0
    effective_right: float = 0.0

    def __post_init__(self):
        for v in (self.coded_left, self.coded_right):
            if not -100.0 <= v <= 100.0:
                raise ValueError(f"coded motor speed {v} outside [-100, 100]")


def _approach(current: float, target: float, limit: float) -> float:
    gap = target - current
    if abs(gap) <= limit:
        return target
    return current + limit if gap > 0 else current - limit


def step_acceleration(state: MotorState, limit: float = _DEFAULT_MOTION.accel_limit_pp_per_tick) -> MotorState:
    """Move each effective speed toward its coded value by at most ``limit`` pp."""
    return MotorState(
        state.coded_left,
        state.coded_right,
        _approach(state.effective_left, state.coded_left, limit),
        _approach(state.effective_right, state.coded_right, limit),
    )


def _clamp(v: float, lim: float) -> float:
    return -lim if v < -lim else lim if v > lim else v


def effective_translation_speed(state: MotorState, pushing: bool = False,
                                motion: MotionConstants = _DEFAULT_MOTION) -> float:
    """Forward speed in cm/s."""
    avg = _clamp((state.effective_left + motion.right_gain * state.effective_right) / 2.0,
                 motion.speed_saturation_pct)
    speed = motion.speed_slope * avg
    coded = abs(state.coded_left + state.coded_right) / 2.0
    if pushing and coded > motion.push_threshold_pct and speed != 0.0:
        cut = motion.speed_slope * motion.push_slowdown_fraction * coded
        # never reverse direction because of the slowdown
        speed = max(speed - cut, 0.0) if speed > 0 else min(speed + cut, 0.0)
    return speed


def effective_angular_speed(state: MotorState, motion: MotionConstants = _DEFAULT_MOTION) -> float:
    """Yaw rate in deg/s, counter-clockwise positive."""
    sat = motion.turn_saturation_pct
    left = _clamp(state.effective_left, sat)
    right = motion.right_gain * _clamp(state.effective_right, sat)
    return motion.turn_slope * (right - left)


def turn_rate(speed_pct: float, motion: MotionConstants = _DEFAULT_MOTION) -> float:
    """Rotation speed (deg/s) of an on-the-spot turn at ``speed_pct`` belt speed."""
    s = min(abs(speed_pct), motion.turn_saturation_pct)
    return motion.turn_slope * 2.0 * s


def integrate_pose(pose: Pose, translation_speed: float, angular_speed: float, dt: float) -> Pose:
    """Rotate first, then translate along the new heading."""
    heading = pose.heading + angular_speed * dt
    if translation_speed == 0.0:
        return Pose(pose.x, pose.y, heading)
    r = math.radians(heading)
    step = translation_speed * dt
    return Pose(pose.x + step * math.cos(r), pose.y + step * math.sin(r), heading)


def robot_corners(pose: Pose, robot: RobotGeometry) -> list[tuple[float, float]]:
    return rect_corners(pose.x, pose.y, pose.heading, robot.length, robot.width)


def robot_failed(arena: Arena, pose: Pose, robot: RobotGeometry = RobotGeometry()) -> bool:
    r = 0.5 * math.hypot(robot.length, robot.width) + 1e-9
    if r <= pose.x <= arena.cardboard_width - r and r <= pose.y <= arena.cardboard_height - r:
        return False
    return any(classify_point(arena, p) is SurfaceKind.OFF for p in robot_corners(pose, robot))


@dataclass
class PhysicsReport:
    contacts: list[int] = field(default_factory=list)
    removed: list[int] = field(default_factory=list)


def step_physics(world: World, robot_pose: Pose, robot_velocity: tuple[float, float, float],
                 dt: float, robot: RobotGeometry = RobotGeometry()) -> PhysicsReport:
    """Advance cubes by one tick against an already-moved robot.

    ``robot_velocity`` is ``(vx, vy, yaw_rate_deg)`` over the tick. Cubes
    drift with their own velocity and drag, are pushed out of the robot along
    the minimum-penetration normal, then out of each other; cubes that end
    fully off the white area are removed. Mutates ``world`` in place.
    """
    report = PhysicsReport()
    cubes = world.live_cubes()
    for c in cubes:
        if c.vx or c.vy:
            c.x += c.vx * dt
            c.y += c.vy * dt
            decay = math.exp(-c.drag * dt)
            c.vx *= decay
            c.vy *= decay

    rcorners = robot_corners(robot_pose, robot)
    reach = 0.5 * math.hypot(robot.length, robot.width)
    vx, vy, yaw = robot_velocity
    omega = math.radians(yaw)
    pushed = set()
    for c in cubes:
        half_diag = c.side * 0.7072
        if math.hypot(c.x - robot_pose.x, c.y - robot_pose.y) >= reach + half_diag:
            continue
        hit = rect_mtv(rcorners, c.corners(), CONTACT_TOLERANCE)
        if hit is None:
            continue
        depth, nx, ny = hit
        if depth > 0.0:
            c.x += depth * nx
            c.y += depth * ny
        # contact velocity of the robot at the cube centre, normal component only
        rx, ry = c.x - robot_pose.x, c.y - robot_pose.y
        pvx, pvy = vx - omega * ry, vy + omega * rx
        vn_robot = max(pvx * nx + pvy * ny, 0.0)
        vn_cube = c.vx * nx + c.vy * ny
        if vn_robot > vn_cube:
            c.vx += (vn_robot - vn_cube) * nx
            c.vy += (vn_robot - vn_cube) * ny
        pushed.add(c.id)
        report.contacts.append(c.id)

    if len(cubes) > 1:
        _separate_cubes(cubes, pushed)

    for c in cubes:
        if cube_fully_outside_white(world.arena, c):
            c.removed = True
            c.vx = c.vy = 0.0
            report.removed.append(c.id)
    return report


def _separate_cubes(cubes, pushed, passes: int = 2) -> None:
    for _ in range(passes):
        moved = False
        for i, a in enumerate(cubes):
            for b in cubes[i + 1:]:
                if abs(a.x - b.x) >= a.side + b.side or abs(a.y - b.y) >= a.side + b.side:
                    continue
                hit = rect_mtv(a.corners(), b.corners())
                if hit is None:
                    continue
                depth, nx, ny = hit
                if a.id in pushed and b.id not in pushed:
                    wa, wb = 0.0, 1.0
                elif b.id in pushed and a.id not in pushed:
                    wa, wb = 1.0, 0.0
                else:
                    wa = wb = 0.5
                a.x -= wa * depth * nx
                a.y -= wa * depth * ny
                b.x += wb * depth * nx
                b.y += wb * depth * ny
                # the displaced cube takes over the pusher's normal velocity
                va = a.vx * nx + a.vy * ny
                vb = b.vx * nx + b.vy * ny
                if va > vb:
                    b.vx += (va - vb) * nx
                    b.vy += (va - vb) * ny
                moved = True
        if not moved:
            break
