import math

import pytest
from hypothesis import given, strategies as st

from cubesim.config import MotionConstants, RobotGeometry
from cubesim.dynamics import (
    MotorState, effective_angular_speed, effective_translation_speed, integrate_pose,
    robot_failed, step_acceleration, step_physics, turn_rate,
)
from cubesim.geometry import Pose
from cubesim.runtime import run_episode
from cubesim.world import Cube, Scenario, World, make_arena

M = MotionConstants()
ARENA = make_arena()
pct = st.floats(-100, 100, allow_nan=False)


def accelerate(state, n):
    for _ in range(n):
        state = step_acceleration(state)
    return state


def test_acceleration_examples():
    s = MotorState(75, 75)
    assert accelerate(s, 8).effective_left == 72
    assert accelerate(s, 9).effective_left == 75
    assert step_acceleration(MotorState(75, 75, 75, 75)) == MotorState(75, 75, 75, 75)
    assert step_acceleration(MotorState(-5, -5, 5, 5)).effective_right == -4


@given(pct, pct, pct, pct)
def test_acceleration_bounded_and_converges(cl, cr, el, er):
    s = MotorState(cl, cr, el, er)
    for _ in range(30):
        nxt = step_acceleration(s)
        assert abs(nxt.effective_left - s.effective_left) <= 9 + 1e-12
        assert abs(nxt.effective_right - s.effective_right) <= 9 + 1e-12
        # never moves away from the command
        assert abs(nxt.effective_left - cl) <= abs(s.effective_left - cl)
        s = nxt
    assert (s.effective_left, s.effective_right) == (cl, cr)


def test_motor_state_validates():
    with pytest.raises(ValueError):
        MotorState(101, 0)


def test_translation_examples():
    full = effective_translation_speed(MotorState(100, 100, 100, 100))
    capped = effective_translation_speed(MotorState(75, 75, 75, 75))
    assert full == capped == M.speed_slope * 75
    pushing = effective_translation_speed(MotorState(50, 50, 50, 50), pushing=True)
    assert pushing == pytest.approx(M.speed_slope * (50 - 2.5), rel=1e-12)
    assert effective_translation_speed(MotorState(30, -30, 30, -30)) == 0.0


def test_push_rule_threshold_and_sign():
    at = MotorState(20, 20, 20, 20)
    assert effective_translation_speed(at, pushing=True) == effective_translation_speed(at)
    back = effective_translation_speed(MotorState(-50, -50, -50, -50), pushing=True)
    assert back == pytest.approx(-M.speed_slope * 47.5, rel=1e-12)
    # a slow effective speed is cut to zero, never reversed
    spin_up = MotorState(100, 100, 1, 1)
    assert effective_translation_speed(spin_up, pushing=True) == 0.0


@given(pct, pct, pct, pct, st.booleans())
def test_translation_saturates(cl, cr, el, er, pushing):
    v = effective_translation_speed(MotorState(cl, cr, el, er), pushing)
    assert abs(v) <= M.speed_slope * 75 + 1e-12


def test_angular_examples():
    assert effective_angular_speed(MotorState(30, -30, 30, -30)) == -M.turn_slope * 60
    assert effective_angular_speed(MotorState(40, 40, 40, 40)) == 0.0
    assert (effective_angular_speed(MotorState(80, -80, 80, -80))
            == effective_angular_speed(MotorState(60, -60, 60, -60)))
    assert effective_angular_speed(MotorState(-30, 30, -30, 30)) > 0  # CCW


def test_right_gain():
    m = MotionConstants(right_gain=1.01)
    s = MotorState(50, 50, 50, 50)
    assert effective_translation_speed(s, motion=m) == pytest.approx(M.speed_slope * (50 + 50.5) / 2)
    assert effective_angular_speed(s, motion=m) == pytest.approx(M.turn_slope * 0.5)
    # still effective when the turn contribution is saturated
    hard = MotorState(-80, 80, -80, 80)
    assert effective_angular_speed(hard, motion=m) > effective_angular_speed(hard)


def test_turn_rate():
    assert turn_rate(40) == M.turn_slope * 80
    assert turn_rate(-40) == turn_rate(40)
    assert turn_rate(90) == turn_rate(60)


def test_integrate_examples():
    p = integrate_pose(Pose(0, 0, 0), 10, 0, 0.02)
    assert (p.x, p.y, p.heading) == pytest.approx((0.2, 0.0, 0.0))
    p = integrate_pose(Pose(3, 4, 10), 0, 90, 0.02)
    assert (p.x, p.y) == (3, 4)
    assert p.heading == pytest.approx(11.8)
    p = Pose(0, 0, 30)
    for _ in range(50):
        p = integrate_pose(p, 10, 0, 0.02)
    assert math.hypot(p.x, p.y) == pytest.approx(10.0, rel=1e-12)


def test_rotate_then_translate():
    p = integrate_pose(Pose(0, 0, 0), 10, 4500, 0.02)  # 90 deg in one tick
    assert p.x == pytest.approx(0.0, abs=1e-12)
    assert p.y == pytest.approx(0.2)


@given(st.floats(-100, 100), st.floats(-100, 100), st.floats(-720, 720), st.floats(-500, 500))
def test_pure_rotation_keeps_position_exactly(x, y, h, w):
    p = integrate_pose(Pose(x, y, h), 0.0, w, 0.02)
    assert (p.x, p.y) == (x, y)


def test_drag_decay():
    c = Cube(0, "red", 75, 60, vx=10.0)
    w = World(ARENA, [c])
    far = Pose(30, 30, 0)
    for _ in range(50):
        step_physics(w, far, (0, 0, 0), 0.02)
    assert c.vx == pytest.approx(10.0 * math.exp(-6.0 * 1.0), rel=1e-12)


def test_no_contact_leaves_cubes():
    cubes = [Cube(0, "red", 75, 60), Cube(1, "blue", 100, 40, 30)]
    w = World(ARENA, cubes)
    before = [(c.x, c.y, c.vx, c.vy) for c in cubes]
    rep = step_physics(w, Pose(30, 30, 0), (20, 0, 0), 0.02)
    assert [(c.x, c.y, c.vx, c.vy) for c in cubes] == before
    assert rep.contacts == [] and rep.removed == []


@given(st.floats(20, 130), st.floats(20, 100), st.floats(0, 360))
def test_cube_at_rest_moves_only_on_contact(x, y, h):
    c = Cube(0, "red", 75, 60)
    w = World(ARENA, [c])
    rep = step_physics(w, Pose(x, y, h), (5, 5, 10), 0.02)
    if not rep.contacts:
        assert (c.x, c.y) == (75, 60)


def test_overlap_pushed_out_along_normal():
    # robot front face at x = 79; cube overlapping it by 1 cm
    c = Cube(0, "red", 80.5 - 1.0, 60)
    w = World(ARENA, [c])
    rep = step_physics(w, Pose(70, 60, 0), (20, 0, 0), 0.02)
    assert rep.contacts == [0]
    assert c.x == pytest.approx(81.5)
    assert c.y == pytest.approx(60)
    assert c.vx == pytest.approx(20)


def test_cube_pushes_cube_and_removal():
    a, b = Cube(0, "red", 80, 60), Cube(1, "green", 84, 60)
    w = World(ARENA, [a, b])
    step_physics(w, Pose(72, 60, 0), (10, 0, 0), 0.02)
    assert b.x - a.x >= 5 - 1e-9
    c = Cube(2, "blue", 14.6, 60, vx=-20.0)
    w = World(ARENA, [c])
    rep = step_physics(w, Pose(60, 60, 0), (0, 0, 0), 0.02)
    assert rep.removed == [2] and c.removed
    assert step_physics(w, Pose(60, 60, 0), (0, 0, 0), 0.02).removed == []


def test_driving_into_cube_keeps_it_ahead():
    cube = Cube(0, "red", 95, 60)
    sc = Scenario(ARENA, [cube, Cube(1, "red", 75, 98)], [], Pose(70, 60, 0))

    def straight(robot):
        robot.set_motor(50, 50)
        while True:
            yield

    res = run_episode(sc, straight)  # drives until it leaves the cardboard
    first_push = next(r for r in res.trajectory if r[4][0][1] > 95.0)
    later = [r for r in res.trajectory if r[0] > first_push[0] and not r[4][0][4]]
    assert later
    for tick, x, y, h, cubes, *_ in later:
        cx, cy = cubes[0][1], cubes[0][2]
        gap = (cx - 2.5) - (x + 9.0)
        assert -1e-6 <= gap < 0.5
        assert cy == pytest.approx(60.0)


def test_robot_failed_examples():
    assert not robot_failed(ARENA, Pose(75, 60, 0))
    assert robot_failed(ARENA, Pose(8.9, 60, 0))
    assert not robot_failed(ARENA, Pose(9.0, 60, 0))  # rear corners exactly on the edge
    assert robot_failed(ARENA, Pose(75, 113.1, 0))
    assert not robot_failed(ARENA, Pose(75, 60, 33), RobotGeometry(18, 14))
