"""Deterministic fixed-tick episode loop and the controller API.

A controller is a callable ``controller(robot)`` returning a generator. A bare
``yield`` (or ``yield from robot.yield_tick()``) hands control back until the
next tick; blocking primitives are used with ``yield from``::

    def square(robot):
        for _ in range(4):
            robot.set_motor(60, 60)
            yield from robot.wait(2000)
            yield from robot.turn(90, 40)

Each tick first resumes every runnable task until it yields, then runs the
fixed update (acceleration, pose integration, physics, blink delay line,
removal, completion and failure checks). Simulated time is the only clock.
"""

from __future__ import annotations

import inspect
import json
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Iterator

from .config import Calibration
from .dynamics import (
    MotorState,
    effective_angular_speed,
    effective_translation_speed,
    integrate_pose,
    robot_failed,
    step_acceleration,
    step_physics,
    turn_rate,
)
from .geometry import Pose
from .sensors import BlinkDelay, blink_current, read_red, read_reflection, read_ultrasound
from .world import Scenario, World, task_complete

TRAJECTORY_SCHEMA = "cubesim.trajectory/1"
RESULT_SCHEMA = "cubesim.result/1"

COMPLETED = "completed"
TIMEOUT = "timeout"
DROVE_OFF = "drove_off"
ERROR = "error"
STATUSES = (COMPLETED, TIMEOUT, DROVE_OFF, ERROR)

Controller = Callable[["Robot"], Iterator[Any]]


class ControllerError(RuntimeError):
    pass


class FuelExhausted(ControllerError):
    """A controller made too many API calls without yielding."""


@dataclass(frozen=True)
class RunLimits:
    timeout_s: float = 300.0
    stride: int = 1
    fuel_per_tick: int = 10_000

    def __post_init__(self):
        if not self.timeout_s > 0:
            raise ValueError("timeout must be positive")
        if self.stride < 1:
            raise ValueError("trajectory stride must be >= 1")
        if self.fuel_per_tick < 1:
            raise ValueError("fuel_per_tick must be >= 1")


@dataclass
class EpisodeClock:
    tick_ms: int = 20
    tick: int = 0

    @property
    def elapsed_ms(self) -> int:
        return self.tick * self.tick_ms

    @property
    def elapsed_s(self) -> float:
        return self.elapsed_ms / 1000.0


# trajectory rows are kept as tuples while running:
# (tick, x, y, heading, ((id, x, y, orientation, removed), ...), reflection, ultrasound, blink)

def _row_to_record(row, tick_ms: int) -> dict[str, Any]:
    tick, x, y, h, cubes, refl, us, blink = row
    return {
        "tick": tick,
        "t": tick * tick_ms / 1000.0,
        "robot": {"x": x, "y": y, "heading": h},
        "cubes": [{"id": i, "x": cx, "y": cy, "orientation": co, "removed": rm}
                  for i, cx, cy, co, rm in cubes],
        "sensors": {"reflection": refl, "ultrasound": us, "blink": blink},
    }


def _record_to_row(rec: dict[str, Any]):
    r = rec["robot"]
    s = rec["sensors"]
    cubes = tuple((c["id"], c["x"], c["y"], c["orientation"], c["removed"]) for c in rec["cubes"])
    return (rec["tick"], r["x"], r["y"], r["heading"], cubes, s["reflection"], s["ultrasound"], s["blink"])


@dataclass
class RunResult:
    status: str
    completion_time: float | None
    ticks: int
    trajectory: list[tuple] = field(default_factory=list)
    removals: list[tuple[int, int]] = field(default_factory=list)  # (cube id, tick)
    diagnostic: str | None = None
    tick_ms: int = 20

    def __post_init__(self):
        if self.status not in STATUSES:
            raise ValueError(f"unknown status {self.status!r}")
        if (self.completion_time is not None) != (self.status == COMPLETED):
            raise ValueError("completion_time is set exactly for completed runs")

    @property
    def failed(self) -> bool:
        return self.status != COMPLETED

    def records(self) -> list[dict[str, Any]]:
        return [_row_to_record(row, self.tick_ms) for row in self.trajectory]

    def to_dict(self, trajectory: bool = True) -> dict[str, Any]:
        d = {
            "schema": RESULT_SCHEMA,
            "status": self.status,
            "completion_time": self.completion_time,
            "ticks": self.ticks,
            "tick_ms": self.tick_ms,
            "removals": [{"cube": c, "tick": t} for c, t in self.removals],
            "diagnostic": self.diagnostic,
        }
        if trajectory:
            d["trajectory"] = self.records()
        return d

    def to_json(self, trajectory: bool = True) -> str:
        return json.dumps(self.to_dict(trajectory), sort_keys=True, separators=(",", ":"))

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> RunResult:
        if d.get("schema", RESULT_SCHEMA) != RESULT_SCHEMA:
            raise ValueError(f"unsupported result schema {d.get('schema')!r}")
        return cls(
            status=d["status"],
            completion_time=d["completion_time"],
            ticks=d["ticks"],
            trajectory=[_record_to_row(r) for r in d.get("trajectory", [])],
            removals=[(r["cube"], r["tick"]) for r in d["removals"]],
            diagnostic=d.get("diagnostic"),
            tick_ms=d.get("tick_ms", 20),
        )


def write_trajectory_jsonl(result: RunResult, path) -> None:
    with open(path, "w") as fh:
        header = {"schema": TRAJECTORY_SCHEMA, "status": result.status,
                  "completion_time": result.completion_time, "ticks": result.ticks,
                  "removals": [{"cube": c, "tick": t} for c, t in result.removals],
                  "diagnostic": result.diagnostic, "tick_ms": result.tick_ms}
        fh.write(json.dumps(header, sort_keys=True) + "\n")
        for rec in result.records():
            fh.write(json.dumps(rec, sort_keys=True) + "\n")


def read_trajectory_jsonl(path) -> RunResult:
    with open(path) as fh:
        lines = [json.loads(line) for line in fh if line.strip()]
    if not lines or lines[0].get("schema") != TRAJECTORY_SCHEMA:
        raise ValueError(f"{path} is not a {TRAJECTORY_SCHEMA} file")
    head = lines[0]
    return RunResult(
        status=head["status"],
        completion_time=head["completion_time"],
        ticks=head["ticks"],
        trajectory=[_record_to_row(r) for r in lines[1:]],
        removals=[(r["cube"], r["tick"]) for r in head["removals"]],
        diagnostic=head.get("diagnostic"),
        tick_ms=head.get("tick_ms", 20),
    )


class Robot:
    """The API a controller sees. Non-blocking calls are plain methods;
    ``wait``, ``turn`` and ``yield_tick`` are generators for ``yield from``."""

    def __init__(self, sim: Simulation):
        self._sim = sim

    def _spend(self):
        sim = self._sim
        sim.calls += 1
        if sim.calls > sim.limits.fuel_per_tick:
            raise FuelExhausted(f"more than {sim.limits.fuel_per_tick} API calls in tick {sim.clock.tick}")

    @property
    def time_ms(self) -> int:
        return self._sim.clock.elapsed_ms

    def set_motor(self, left: float, right: float) -> None:
        self._spend()
        sim = self._sim
        m = sim.motor
        sim.motor = MotorState(float(left), float(right), m.effective_left, m.effective_right)

    def read_reflection(self) -> int:
        self._spend()
        sim = self._sim
        return read_reflection(sim.world, sim.pose, sim.cal.rig, sim.cal.fits)

    def read_ultrasound(self) -> float | None:
        self._spend()
        sim = self._sim
        return read_ultrasound(sim.world, sim.pose, sim.cal.rig, sim.cal.fits)

    def read_blink(self) -> float:
        self._spend()
        return self._sim.blink.read()

    def read_red(self, side: str) -> float:
        self._spend()
        sim = self._sim
        return read_red(sim.world, sim.pose, side, "red", sim.cal.rig, sim.cal.fits)

    def yield_tick(self):
        yield

    def wait(self, ms: float):
        """Block until at least ``ms`` of simulated time has passed; motors keep running."""
        self._spend()
        if ms < 0:
            raise ValueError("wait time must be non-negative")
        for _ in range(math.ceil(ms / self._sim.clock.tick_ms - 1e-9)):
            yield

    def turn(self, degrees: float, speed: float):
        """Rotate on the spot by ``degrees`` (counter-clockwise positive).

        Belts are zeroed and the orientation is driven directly, one step per
        tick, yielding after each step; returns once the stop heading is set.
        """
        self._spend()
        if speed == 0:
            raise ValueError("turn speed must be non-zero")
        sim = self._sim
        sim.motor = MotorState()
        if degrees == 0:
            return
        step = turn_rate(speed, sim.cal.motion) * sim.cal.motion.tick_s
        n = math.ceil(abs(degrees) / step - 1e-9)
        start = sim.pose.heading
        target = start + degrees
        sign = 1.0 if degrees > 0 else -1.0
        sim.turning += 1
        try:
            for i in range(1, n + 1):
                heading = target if i == n else start + sign * step * i
                sim.pose = Pose(sim.pose.x, sim.pose.y, heading)
                sim.motor = MotorState()
                yield
        finally:
            sim.turning -= 1

    def start_task(self, controller: Controller) -> None:
        """Run another controller task alongside, starting next tick."""
        self._sim.add_task(controller)


class Simulation:
    def __init__(self, scenario: Scenario, calibration: Calibration | None = None,
                 limits: RunLimits | None = None):
        self.cal = calibration or Calibration()
        self.limits = limits or RunLimits()
        self.world: World = scenario.build_world()
        self.pose: Pose = scenario.start
        self.tick_start_pose: Pose = self.pose
        self.motor = MotorState()
        self.clock = EpisodeClock(self.cal.motion.tick_ms)
        self.blink = BlinkDelay.for_calibration(self.cal)
        self.pushing = False
        self.turning = 0
        self.calls = 0
        self.robot = Robot(self)
        self.tasks: list[Iterator[Any]] = []
        self._pending: list[Iterator[Any]] = []

    def add_task(self, controller: Controller) -> None:
        task = controller(self.robot)
        if task is None:
            return  # plain function: ran to completion synchronously
        if not inspect.isgenerator(task):
            raise ControllerError("controller must return a generator")
        self._pending.append(task)

    def controller_phase(self) -> None:
        self.calls = 0
        if self._pending:
            self.tasks.extend(self._pending)
            self._pending = []
        for task in list(self.tasks):
            try:
                next(task)
            except StopIteration:
                self.tasks.remove(task)

    def fixed_update(self) -> list[int]:
        """Advance the world by one tick; returns ids of cubes removed."""
        motion = self.cal.motion
        dt = motion.tick_s
        start = self.tick_start_pose
        self.motor = step_acceleration(self.motor, motion.accel_limit_pp_per_tick)
        v = effective_translation_speed(self.motor, self.pushing, motion)
        w = effective_angular_speed(self.motor, motion)
        self.pose = integrate_pose(self.pose, v, w, dt)
        velocity = ((self.pose.x - start.x) / dt, (self.pose.y - start.y) / dt,
                    (self.pose.heading - start.heading) / dt)
        report = step_physics(self.world, self.pose, velocity, dt, self.cal.robot)
        self.pushing = bool(report.contacts)
        self.blink.push(blink_current(self.world, self.pose, self.cal.rig, self.cal.fits))
        self.clock.tick += 1
        self.world.elapsed_ms = self.clock.elapsed_ms
        return report.removed

    def snapshot(self):
        w, p, cal = self.world, self.pose, self.cal
        cubes = tuple((c.id, c.x, c.y, c.orientation, c.removed) for c in w.cubes)
        return (self.clock.tick, p.x, p.y, p.heading, cubes,
                read_reflection(w, p, cal.rig, cal.fits),
                read_ultrasound(w, p, cal.rig, cal.fits),
                self.blink.read())


def run_episode(scenario: Scenario, controller: Controller, limits: RunLimits | None = None,
                calibration: Calibration | None = None,
                observer: Callable[[Simulation], None] | None = None) -> RunResult:
    """Run one episode to completion, drive-off, controller error or timeout."""
    sim = Simulation(scenario, calibration, limits)
    limits = sim.limits
    tick_ms = sim.clock.tick_ms
    timeout_ticks = math.ceil(limits.timeout_s * 1000.0 / tick_ms - 1e-9)
    trajectory = [sim.snapshot()]
    removals: list[tuple[int, int]] = []

    def finish(status, diagnostic=None):
        if trajectory[-1][0] != sim.clock.tick:
            trajectory.append(sim.snapshot())
        done = sim.clock.elapsed_s if status == COMPLETED else None
        return RunResult(status, done, sim.clock.tick, trajectory, removals, diagnostic, tick_ms)

    if task_complete(sim.world):
        return finish(COMPLETED)
    if robot_failed(sim.world.arena, sim.pose, sim.cal.robot):
        return finish(DROVE_OFF)
    try:
        sim.add_task(controller)
    except Exception as exc:  # controller construction is user code
        return finish(ERROR, f"{type(exc).__name__}: {exc}")

    while sim.clock.tick < timeout_ticks:
        sim.tick_start_pose = sim.pose
        try:
            sim.controller_phase()
        except Exception as exc:
            return finish(ERROR, f"{type(exc).__name__}: {exc}")
        for cube_id in sim.fixed_update():
            removals.append((cube_id, sim.clock.tick))
        if observer is not None:
            observer(sim)
        if sim.clock.tick % limits.stride == 0:
            trajectory.append(sim.snapshot())
        if task_complete(sim.world):
            return finish(COMPLETED)
        if robot_failed(sim.world.arena, sim.pose, sim.cal.robot):
            return finish(DROVE_OFF)
    return finish(TIMEOUT)
