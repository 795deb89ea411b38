"""Reference controllers: two ultrasound searches and a blink-light search.

Each factory returns a controller usable with ``run_episode``. Clockwise
turns are negative degrees / (left forward, right backward) belt commands.
"""

from __future__ import annotations

from dataclasses import dataclass, fields

from .runtime import Controller, Robot


@dataclass(frozen=True)
class SolutionParams:
    search_speed: float = 40.0  # %
    drive_speed: float = 60.0  # %
    detect_cm: float = 120.0
    blink_threshold: float = 13.0
    step_deg: float = 20.0
    pause_ms: int = 1000
    abort_steps: int = 18
    reposition_ms: int = 2000
    push_past_ms: int = 500
    lost_light_ms: int = 1000
    turn_back_deg: float = 180.0
    face_step_deg: float = 2.0
    retreat_turn_deg: float = 135.0  # after an edge stop; 180 retraces the path
    edge_threshold: float = 41.5  # reflection below this is "off the white area"

    @classmethod
    def from_dict(cls, d) -> SolutionParams:
        known = {f.name: f.type for f in fields(cls)}
        unknown = set(d) - set(known)
        if unknown:
            raise ValueError(f"unknown solution params: {sorted(unknown)}")
        return cls(**d)


def _edge(robot: Robot, p: SolutionParams) -> bool:
    return robot.read_reflection() < p.edge_threshold


def ultrasound1(params: SolutionParams | None = None) -> Controller:
    """Drive straight while a cube is in ultrasound range, otherwise spin clockwise."""
    p = params or SolutionParams()

    def controller(robot: Robot):
        while True:
            dist = robot.read_ultrasound()
            if dist is not None and dist < p.detect_cm:
                robot.set_motor(p.drive_speed, p.drive_speed)
            else:
                robot.set_motor(p.search_speed, -p.search_speed)
            yield

    return controller


def ultrasound2(params: SolutionParams | None = None) -> Controller:
    """Spin to a cube, keep turning while the range still shrinks, then drive to
    the white-area edge, push a little further and turn back."""
    p = params or SolutionParams()

    def detected(dist):
        return dist is not None and dist < p.detect_cm

    def controller(robot: Robot):
        while True:
            # a cube only counts once it enters the cone during the clockwise sweep
            robot.set_motor(p.search_speed, -p.search_speed)
            seen = detected(robot.read_ultrasound())
            while True:
                yield
                dist = robot.read_ultrasound()
                if detected(dist) and not seen:
                    break
                seen = detected(dist)
            best = dist
            while True:
                yield from robot.turn(-p.face_step_deg, p.search_speed)
                dist = robot.read_ultrasound()
                if dist is None or dist >= best:
                    break
                best = dist
            robot.set_motor(p.drive_speed, p.drive_speed)
            while not _edge(robot, p):
                yield
            yield from robot.wait(p.push_past_ms)
            yield from robot.turn(-p.turn_back_deg, p.search_speed)

    return controller


def blink_solution(params: SolutionParams | None = None) -> Controller:
    """Step clockwise looking for a blink light, approach it, reposition after a
    fruitless full rotation."""
    p = params or SolutionParams()
    tick_ms = 20

    def drive(robot: Robot, duration_ms=None):
        # returns True when stopped by the white-area edge
        robot.set_motor(p.drive_speed, p.drive_speed)
        elapsed = 0
        unseen = 0
        while True:
            if _edge(robot, p):
                robot.set_motor(0, 0)
                return True
            if duration_ms is not None and elapsed >= duration_ms:
                break
            if duration_ms is None:
                unseen = 0 if robot.read_blink() > p.blink_threshold else unseen + tick_ms
                if unseen > p.lost_light_ms:
                    break
            yield
            elapsed += tick_ms
        robot.set_motor(0, 0)
        return False

    def controller(robot: Robot):
        # settle once so the first reading is not the delay line's zero fill
        yield from robot.wait(p.pause_ms)
        found = robot.read_blink() > p.blink_threshold
        while True:
            steps = 0
            while not found and steps < p.abort_steps:
                yield from robot.turn(-p.step_deg, p.search_speed)
                yield from robot.wait(p.pause_ms)
                steps += 1
                found = robot.read_blink() > p.blink_threshold
            if found and (yield from drive(robot)):
                yield from robot.turn(-p.retreat_turn_deg, p.search_speed)
            # move on to a different spot before searching again
            if (yield from drive(robot, p.reposition_ms)):
                yield from robot.turn(-p.retreat_turn_deg, p.search_speed)
            found = False

    return controller


SOLUTIONS = {
    "ultrasound1": ultrasound1,
    "ultrasound2": ultrasound2,
    "blink": blink_solution,
}


def make_solution(name: str, params: SolutionParams | None = None) -> Controller:
    try:
        factory = SOLUTIONS[name]
    except KeyError:
        raise ValueError(f"unknown solution {name!r}; choose from {sorted(SOLUTIONS)}") from None
    return factory(params)
