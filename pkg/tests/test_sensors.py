import math

import pytest
from hypothesis import given, strategies as st

import oracles
from cubesim.config import SensorFits, SensorRig
from cubesim.geometry import Pose
from cubesim.sensors import (
    BlinkDelay, beta_factor, blink_current, blink_raw, delta_factor, geometry_angles, light_value,
    phi_factor, phi_fit, polyval, ray_angles, read_red, read_reflection, read_ultrasound, red_fit,
    small_delta, ultrasound_cutoff,
)
from cubesim.world import BlinkLight, Cube, World, make_arena

ARENA = make_arena()
RIG = SensorRig()
FITS = SensorFits()


def world(*cubes, lights=()):
    return World(ARENA, list(cubes), list(lights))


def facing_sensor(sx, sy, heading=0.0, offset=RIG.ultrasound_offset):
    """Robot pose whose sensor at ``offset`` sits at (sx, sy)."""
    r = math.radians(heading)
    return Pose(sx - offset[0] * math.cos(r) + offset[1] * math.sin(r),
                sy - offset[0] * math.sin(r) - offset[1] * math.cos(r), heading)


# -- fits against the exact oracle ---------------------------------------------

def test_fit_examples():
    assert oracles.rel_close(delta_factor(40), 25.68)
    assert oracles.rel_close(beta_factor(0, "left"), 25.023 / 24)
    assert oracles.rel_close(phi_fit(45), oracles.phi(45))
    assert phi_fit(45) == pytest.approx(0.316771, abs=5e-7)
    assert phi_fit(30) == pytest.approx(-0.0319, abs=5e-5)
    assert phi_factor(30) == 0.0
    assert oracles.rel_close(red_fit(5, "left", "red"), 80.35)
    assert oracles.rel_close(red_fit(5, "left", "blue"), 5.5442)


@given(st.floats(15, 80))
def test_delta_matches_oracle(d):
    assert oracles.rel_close(delta_factor(d), oracles.delta(d))


@given(st.floats(-35, 35), st.sampled_from(["left", "right"]))
def test_beta_matches_oracle(a, side):
    assert oracles.rel_close(beta_factor(a, side), oracles.beta(a, side))


@given(st.floats(0, 60))
def test_phi_and_small_delta_match_oracle(x):
    assert oracles.rel_close(phi_fit(x), oracles.phi(x), rel=1e-9) or abs(phi_fit(x) - float(oracles.phi(x))) < 1e-12
    assert oracles.rel_close(small_delta(x + 5), oracles.small_delta(x + 5))


@given(st.floats(0.5, 30), st.sampled_from(["left", "right"]))
def test_red_matches_oracle(d, side):
    assert oracles.rel_close(red_fit(d, side, "red"), max(oracles.red(d, side), 0))
    assert red_fit(d, side, "green") == pytest.approx(max(float(oracles.bluegreen(d)), 0.0), rel=1e-9, abs=1e-12)


def test_polyval_horner():
    assert polyval((2.0, -3.0, 1.0), 4.0) == 21.0
    assert polyval((), 3.0) == 0.0


def test_out_of_domain_constants():
    assert delta_factor(5) == delta_factor(15)
    assert delta_factor(120) == delta_factor(80)
    assert beta_factor(36, "left") == 0.0 and beta_factor(-36, "right") == 0.0
    assert phi_factor(29.9) == 0.0 and phi_factor(60.1) == 0.0


def test_blink_monotone_in_distance():
    values = [light_value(geometry_angles(Pose(0, 0, 0), (d, 0.0), 0.0), "left", True) for d in range(15, 81)]
    assert all(b <= a for a, b in zip(values, values[1:]))


# -- ultrasound ------------------------------------------------------------------

def test_cutoff_examples():
    assert ultrasound_cutoff(0) == 35
    assert ultrasound_cutoff(45) == 22
    assert ultrasound_cutoff(22.5) == pytest.approx(28.5)
    assert ultrasound_cutoff(90) == 35 and ultrasound_cutoff(135) == 22


@given(st.floats(0, 45))
def test_cutoff_oracle(g):
    assert ultrasound_cutoff(g) == pytest.approx(float(oracles.cutoff(g)), rel=1e-12)


def test_ultrasound_examples():
    pose = facing_sensor(40, 60)
    assert read_ultrasound(world(Cube(0, "red", 90, 60)), pose) == pytest.approx(50.0)
    bearing40 = (40 + 50 * math.cos(math.radians(40)), 60 + 50 * math.sin(math.radians(40)))
    assert read_ultrasound(world(Cube(0, "red", *bearing40)), pose) is None
    assert read_ultrasound(world(), pose) is None


def test_ultrasound_cutoff_depends_on_orientation():
    pose = facing_sensor(40, 60)
    at30 = (40 + 50 * math.cos(math.radians(30)), 60 + 50 * math.sin(math.radians(30)))
    assert read_ultrasound(world(Cube(0, "red", *at30, 0.0)), pose) is not None
    assert read_ultrasound(world(Cube(0, "red", *at30, 45.0)), pose) is None


def test_ultrasound_nearest_and_removed():
    pose = facing_sensor(30, 60)
    near, far = Cube(0, "red", 60, 60), Cube(1, "red", 100, 62)
    w = world(near, far)
    assert read_ultrasound(w, pose) == pytest.approx(30.0)
    near.removed = True
    assert read_ultrasound(w, pose) == pytest.approx(math.hypot(70, 2))
    far.removed = True
    assert read_ultrasound(w, pose) is None


def test_reflection_examples():
    assert read_reflection(world(), Pose(75, 60, 0)) == 47
    assert read_reflection(world(), facing_sensor(10, 60, offset=RIG.reflection_offset)) == 36
    assert read_reflection(world(), facing_sensor(-1, 60, offset=RIG.reflection_offset)) == 16


# -- blink -----------------------------------------------------------------------

def test_geometry_examples():
    g = geometry_angles(Pose(0, 0, 0), (40, 0), 0.0)
    assert (g.d, g.alpha, g.gamma, g.phi) == (40, 0, 0, 0)
    assert geometry_angles(Pose(0, 0, 0), (40, 0), 90.0) == g
    assert geometry_angles(Pose(0, 0, 0), (40, 0), 45.0).phi == pytest.approx(45)
    # left of the axis is negative
    assert geometry_angles(Pose(0, 0, 0), (40, 10)).alpha < 0


def test_light_value_orientation_correction():
    base = delta_factor(40) * beta_factor(0, "left")
    g = geometry_angles(Pose(0, 0, 0), (40, 0), 45.0)
    expected = base - base * phi_factor(45) * abs(small_delta(40)) / 100
    assert light_value(g, "left", True) == pytest.approx(expected, rel=1e-12)
    assert light_value(g, "left", False) == pytest.approx(base)
    raw = SensorFits(delta_mode="delta-raw")
    # the raw delta is negative, so the clamp keeps the uncorrected value
    assert light_value(g, "left", True, raw) == pytest.approx(base)
    with pytest.raises(ValueError):
        SensorFits(delta_mode="bogus")


@given(st.floats(1, 120), st.floats(-60, 60), st.floats(-180, 180), st.sampled_from(["left", "right"]),
       st.sampled_from(["delta-percent", "delta-raw"]))
def test_blink_clamped(d, a, orient, side, mode):
    fits = SensorFits(delta_mode=mode)
    r = math.radians(-a)
    g = geometry_angles(Pose(0, 0, 0), (d * math.cos(r), d * math.sin(r)), orient)
    v = light_value(g, side, True, fits)
    ub = max(delta_factor(g.d, fits) * beta_factor(g.alpha, side, fits), 0.0)
    assert 0.0 <= v <= ub + 1e-12


def test_blink_raw_max_over_lights_and_removal():
    c0, c1 = Cube(0, "red", 40, 60), Cube(1, "blue", 60, 60)
    w = world(c0, c1, lights=[BlinkLight(cube_id=0), BlinkLight(cube_id=1)])
    s = Pose(20, 60, 0)
    near = light_value(geometry_angles(s, (40, 60), 0.0), "left", True)
    assert blink_raw(w, s, "left") == pytest.approx(near)
    c0.removed = True
    assert blink_raw(w, s, "left") < near
    c1.removed = True
    assert blink_raw(w, s, "left") == 0.0
    assert blink_current(world(), s) == 0.0


@given(st.floats(20, 130), st.floats(20, 100), st.floats(0, 360), st.floats(0, 360), st.integers(-3, 3))
def test_readings_invariant_under_quarter_turns(x, y, h, orient, k):
    def readings(o):
        w = world(Cube(0, "red", 75, 60, o), lights=[BlinkLight(cube_id=0)])
        pose = Pose(x, y, h)
        return (read_ultrasound(w, pose), blink_current(w, pose),
                read_red(w, pose, "left"), read_red(w, pose, "right"))

    a, b = readings(orient), readings(orient + 90 * k)
    for u, v in zip(a, b):
        assert (u is None) == (v is None)
        if u is not None:
            assert v == pytest.approx(u, rel=1e-9, abs=1e-9)


def test_unrelated_removal_invisible():
    a, b = Cube(0, "red", 60, 60), Cube(1, "green", 120, 95)
    w = world(a, b, lights=[BlinkLight(cube_id=0)])
    pose = Pose(35, 60, 0)
    before = (read_ultrasound(w, pose), blink_current(w, pose), read_red(w, pose, "left"))
    b.removed = True
    assert (read_ultrasound(w, pose), blink_current(w, pose), read_red(w, pose, "left")) == before


# -- delay line ------------------------------------------------------------------

def test_delay_examples():
    line = BlinkDelay(25)
    seen = []
    for t in range(40):
        seen.append(line.read())
        line.push(float(t))
    # read at tick t happens before the push of tick t
    assert seen[24] == 0.0
    assert seen[25] == 0.0 and seen[26] == 1.0
    line = BlinkDelay(25)
    for _ in range(25):
        line.push(7.0)
    assert line.read() == 7.0
    line.reset()
    assert line.read() == 0.0
    with pytest.raises(ValueError):
        BlinkDelay(0)


@given(st.lists(st.floats(0, 100), min_size=26, max_size=120))
def test_delay_line_exact(raw):
    line = BlinkDelay(25)
    for t, v in enumerate(raw):
        line.push(v)
        if t >= 24:
            # after push t, the oldest entry is push t - 24: r(t+1 - 25)
            assert line.read() == raw[t - 24]


# -- red reflection ----------------------------------------------------------------

def test_red_rays():
    angles = ray_angles()
    assert len(angles) == 21
    assert angles[0] == -10 and angles[-1] == 10
    steps = {round(b - a, 12) for a, b in zip(angles, angles[1:])}
    assert steps == {1.0}


def test_red_examples():
    assert read_red(world(), Pose(75, 60, 0), "left") == FITS.red_ambient
    left_sensor = Pose(75, 60, 0).compose(RIG.light_left_offset)
    # red cube close ahead of the left sensor: every ray hits
    w = world(Cube(0, "red", left_sensor.x + 6, left_sensor.y))
    v = read_red(w, Pose(75, 60, 0), "left")
    assert v > 0
    blue = world(Cube(0, "blue", left_sensor.x + 6, left_sensor.y))
    assert 0 <= read_red(blue, Pose(75, 60, 0), "left") < v
    with pytest.raises(ValueError):
        read_red(w, Pose(75, 60, 0), "left", channel="blue")
    with pytest.raises(ValueError):
        read_red(w, Pose(75, 60, 0), "middle")


@given(st.floats(20, 130), st.floats(20, 100), st.floats(0, 360), st.sampled_from(["left", "right"]))
def test_red_nonnegative(x, y, h, side):
    w = world(Cube(0, "red", 75, 60, 10), Cube(1, "green", 60, 50))
    assert read_red(w, Pose(x, y, h), side) >= 0.0
