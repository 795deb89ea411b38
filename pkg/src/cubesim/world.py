"""Playground geometry, cube bookkeeping and scenario files."""

from __future__ import annotations

import copy
import json
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any

from .geometry import Point, Pose, rect_corners

SCENARIO_SCHEMA = "cubesim.scenario/1"
COLORS = ("red", "green", "blue")
MAX_LIGHTS = 3


class InvalidArenaError(ValueError):
    pass


class SurfaceKind(Enum):
    WHITE = "white"
    CARDBOARD = "cardboard"
    OFF = "off"


@dataclass(frozen=True)
class Arena:
    """Cardboard rectangle with origin at its lower-left corner; the white
    area is the same rectangle shrunk by ``fringe`` on every side."""

    cardboard_width: float = 150.0
    cardboard_height: float = 120.0
    fringe: float = 17.0

    def __post_init__(self):
        w, h, f = self.cardboard_width, self.cardboard_height, self.fringe
        if not (w > 0 and h > 0):
            raise InvalidArenaError(f"cardboard dimensions must be positive, got {w} x {h}")
        if f < 0 or 2 * f >= w or 2 * f >= h:
            raise InvalidArenaError(f"fringe {f} leaves no white area in {w} x {h}")

    @property
    def white_width(self) -> float:
        return self.cardboard_width - 2 * self.fringe

    @property
    def white_height(self) -> float:
        return self.cardboard_height - 2 * self.fringe

    @property
    def white_bounds(self) -> tuple[float, float, float, float]:
        f = self.fringe
        return f, f, self.cardboard_width - f, self.cardboard_height - f

    @property
    def center(self) -> Point:
        return self.cardboard_width / 2, self.cardboard_height / 2


def make_arena(cardboard_width: float = 150.0, cardboard_height: float = 120.0, fringe: float = 17.0) -> Arena:
    return Arena(float(cardboard_width), float(cardboard_height), float(fringe))


def classify_point(arena: Arena, point: Point) -> SurfaceKind:
    x, y = point
    x0, y0, x1, y1 = arena.white_bounds
    if x0 <= x <= x1 and y0 <= y <= y1:
        return SurfaceKind.WHITE
    if 0.0 <= x <= arena.cardboard_width and 0.0 <= y <= arena.cardboard_height:
        return SurfaceKind.CARDBOARD
    return SurfaceKind.OFF


def in_white(arena: Arena, x: float, y: float) -> bool:
    x0, y0, x1, y1 = arena.white_bounds
    return x0 <= x <= x1 and y0 <= y <= y1


@dataclass
class Cube:
    id: int
    color: str
    x: float
    y: float
    orientation: float = 0.0
    side: float = 5.0
    drag: float = 6.0  # 1/s
    vx: float = 0.0
    vy: float = 0.0
    removed: bool = False

    def corners(self) -> list[Point]:
        return rect_corners(self.x, self.y, self.orientation, self.side, self.side)

    def to_dict(self) -> dict[str, Any]:
        return {
            "id": self.id,
            "color": self.color,
            "x": self.x,
            "y": self.y,
            "orientation": self.orientation,
            "side": self.side,
            "drag": self.drag,
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> Cube:
        color = d.get("color", "red")
        if color not in COLORS:
            raise ValueError(f"unknown cube color {color!r}")
        side = float(d.get("side", 5.0))
        if side <= 0:
            raise ValueError("cube side must be positive")
        return cls(
            id=int(d["id"]),
            color=color,
            x=float(d["x"]),
            y=float(d["y"]),
            orientation=float(d.get("orientation", 0.0)),
            side=side,
            drag=float(d.get("drag", 6.0)),
        )


@dataclass(frozen=True)
class BlinkLight:
    """Either fixed at ``position`` or riding inside cube ``cube_id``."""

    position: Point | None = None
    cube_id: int | None = None

    def __post_init__(self):
        if (self.position is None) == (self.cube_id is None):
            raise ValueError("blink light needs exactly one of position or cube_id")

    def to_dict(self) -> dict[str, Any]:
        if self.cube_id is not None:
            return {"cube": self.cube_id}
        return {"x": self.position[0], "y": self.position[1]}

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> BlinkLight:
        if "cube" in d:
            return cls(cube_id=int(d["cube"]))
        return cls(position=(float(d["x"]), float(d["y"])))


@dataclass
class World:
    arena: Arena
    cubes: list[Cube] = field(default_factory=list)
    lights: list[BlinkLight] = field(default_factory=list)
    elapsed_ms: int = 0

    def __post_init__(self):
        if len(self.lights) > MAX_LIGHTS:
            raise ValueError(f"at most {MAX_LIGHTS} blink lights, got {len(self.lights)}")
        ids = [c.id for c in self.cubes]
        if len(set(ids)) != len(ids):
            raise ValueError("duplicate cube ids")
        self.cubes.sort(key=lambda c: c.id)
        self._by_id = {c.id: c for c in self.cubes}
        for light in self.lights:
            if light.cube_id is not None and light.cube_id not in self._by_id:
                raise ValueError(f"blink light attached to unknown cube {light.cube_id}")

    def cube(self, cube_id: int) -> Cube:
        return self._by_id[cube_id]

    def live_cubes(self) -> list[Cube]:
        return [c for c in self.cubes if not c.removed]

    def active_lights(self) -> list[tuple[float, float, Cube | None]]:
        """(x, y, host cube or None) for every light that is still visible."""
        out = []
        for light in self.lights:
            if light.cube_id is None:
                out.append((light.position[0], light.position[1], None))
            else:
                c = self._by_id[light.cube_id]
                if not c.removed:
                    out.append((c.x, c.y, c))
        return out


def cube_fully_outside_white(arena: Arena, cube: Cube) -> bool:
    r = 0.7072 * cube.side  # bounds the half-diagonal
    x0, y0, x1, y1 = arena.white_bounds
    if x0 + r <= cube.x <= x1 - r and y0 + r <= cube.y <= y1 - r:
        return False
    return not any(in_white(arena, x, y) for x, y in cube.corners())


def task_complete(world: World) -> bool:
    return all(c.removed for c in world.cubes)


@dataclass
class Scenario:
    arena: Arena = field(default_factory=Arena)
    cubes: list[Cube] = field(default_factory=list)
    lights: list[BlinkLight] = field(default_factory=list)
    start: Pose = field(default_factory=lambda: Pose(75.0, 60.0, 90.0))
    name: str = "scenario"

    def build_world(self) -> World:
        world = World(self.arena, copy.deepcopy(self.cubes), list(self.lights))
        # cubes that start off the white area count as already removed
        for c in world.cubes:
            if cube_fully_outside_white(world.arena, c):
                c.removed = True
        return world

    def with_start(self, start: Pose) -> Scenario:
        out = copy.copy(self)
        out.start = start
        return out

    def to_dict(self) -> dict[str, Any]:
        return {
            "schema": SCENARIO_SCHEMA,
            "name": self.name,
            "arena": {
                "cardboard_width": self.arena.cardboard_width,
                "cardboard_height": self.arena.cardboard_height,
                "fringe": self.arena.fringe,
            },
            "cubes": [c.to_dict() for c in self.cubes],
            "lights": [l.to_dict() for l in self.lights],
            "start": self.start.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> Scenario:
        schema = d.get("schema")
        if schema != SCENARIO_SCHEMA:
            raise ValueError(f"unsupported scenario schema {schema!r}")
        arena = make_arena(**d.get("arena", {}))
        cubes = [Cube.from_dict(c) for c in d.get("cubes", [])]
        lights = [BlinkLight.from_dict(l) for l in d.get("lights", [])]
        start = Pose.from_dict(d["start"]) if "start" in d else Pose(*arena.center, 90.0)
        scenario = cls(arena, cubes, lights, start, d.get("name", "scenario"))
        scenario.build_world()  # validates ids and light attachments
        return scenario


def default_scenario() -> Scenario:
    """Three cubes spread over the white area, each carrying a blink light."""
    cubes = [
        Cube(0, "red", 52.0, 70.0, 0.0),
        Cube(1, "green", 98.0, 38.0, 20.0),
        Cube(2, "blue", 102.0, 80.0, 45.0),
    ]
    lights = [BlinkLight(cube_id=c.id) for c in cubes]
    return Scenario(Arena(), cubes, lights, Pose(75.0, 60.0, 90.0), "default")


def load_scenario(path: str | Path | None) -> Scenario:
    if path is None:
        return default_scenario()
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ValueError(f"cannot read scenario file {path}: {exc}") from exc
    return Scenario.from_dict(data)


def save_scenario(scenario: Scenario, path: str | Path) -> None:
    Path(path).write_text(json.dumps(scenario.to_dict(), indent=2) + "\n")
