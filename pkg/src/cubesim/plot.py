"""Trajectory plots as plain SVG: arena, cube paths, robot path, removals."""

from __future__ import annotations

import xml.etree.ElementTree as ET
from pathlib import Path

from .config import RobotGeometry
from .dynamics import robot_corners
from .geometry import Pose, rect_corners
from .runtime import RunResult
from .world import Scenario, default_scenario

SCALE = 4.0  # px per cm
MARGIN = 10.0
FILL = {"red": "#d62728", "green": "#2ca02c", "blue": "#1f77b4"}


def _fmt(v: float) -> str:
    return f"{v:.2f}"


class _Canvas:
    def __init__(self, width_cm: float, height_cm: float):
        self.h = height_cm
        w = width_cm * SCALE + 2 * MARGIN
        h = height_cm * SCALE + 2 * MARGIN
        self.root = ET.Element("svg", {"xmlns": "http://www.w3.org/2000/svg", "width": _fmt(w),
                                       "height": _fmt(h), "viewBox": f"0 0 {_fmt(w)} {_fmt(h)}"})

    def xy(self, x: float, y: float) -> tuple[str, str]:
        # world y points up, svg y points down
        return _fmt(MARGIN + x * SCALE), _fmt(MARGIN + (self.h - y) * SCALE)

    def points(self, pts) -> str:
        return " ".join(",".join(self.xy(x, y)) for x, y in pts)

    def add(self, tag: str, **attrs) -> ET.Element:
        return ET.SubElement(self.root, tag, {k.replace("_", "-"): v for k, v in attrs.items()})

    def polygon(self, pts, **attrs):
        return self.add("polygon", points=self.points(pts), **attrs)

    def polyline(self, pts, **attrs):
        thin = [p for i, p in enumerate(pts) if i == 0 or p != pts[i - 1]]
        return self.add("polyline", points=self.points(thin), fill="none", **attrs)


def trajectory_svg(result: RunResult, scenario: Scenario | None = None,
                   robot: RobotGeometry = RobotGeometry(), title: str | None = None) -> bytes:
    scenario = scenario or default_scenario()
    arena = scenario.arena
    cv = _Canvas(arena.cardboard_width, arena.cardboard_height)
    cv.polygon(rect_corners(arena.cardboard_width / 2, arena.cardboard_height / 2, 0.0,
                            arena.cardboard_width, arena.cardboard_height), fill="#c9a66b")
    x0, y0, x1, y1 = arena.white_bounds
    cv.polygon(rect_corners((x0 + x1) / 2, (y0 + y1) / 2, 0.0, x1 - x0, y1 - y0),
               fill="#ffffff", stroke="#999999", stroke_width="1")

    records = result.records()
    colors = {c.id: FILL.get(c.color, "#7f7f7f") for c in scenario.cubes}
    sides = {c.id: c.side for c in scenario.cubes}
    paths: dict[int, list[tuple[float, float]]] = {}
    last: dict[int, dict] = {}
    for rec in records:
        for c in rec["cubes"]:
            paths.setdefault(c["id"], []).append((c["x"], c["y"]))
            last[c["id"]] = c
    for cid in sorted(paths):
        color = colors.get(cid, "#7f7f7f")
        cv.polyline(paths[cid], stroke=color, stroke_width="1.5", stroke_dasharray="4 2")
        c = last[cid]
        cv.polygon(rect_corners(c["x"], c["y"], c["orientation"], sides.get(cid, 5.0), sides.get(cid, 5.0)),
                   fill=color, fill_opacity="0.35" if c["removed"] else "1")

    if records:
        path = [(r["robot"]["x"], r["robot"]["y"]) for r in records]
        cv.polyline(path, stroke="#333333", stroke_width="1.5")
        start, end = records[0]["robot"], records[-1]["robot"]
        cv.polygon(robot_corners(Pose(start["x"], start["y"], start["heading"]), robot),
                   fill="none", stroke="#333333", stroke_dasharray="3 2")
        cv.polygon(robot_corners(Pose(end["x"], end["y"], end["heading"]), robot),
                   fill="#333333", fill_opacity="0.3", stroke="#333333")

    for cid, tick in result.removals:
        at = last.get(cid)
        if at is None:
            continue
        x, y = cv.xy(at["x"], at["y"])
        cv.add("circle", cx=x, cy=y, r="7", fill="none", stroke="#000000", stroke_width="1.5")
        label = cv.add("text", x=_fmt(float(x) + 9), y=y, font_size="10", font_family="sans-serif")
        label.text = f"{tick * result.tick_ms / 1000.0:.2f} s"

    caption = title or (f"{result.status}" + (f", {result.completion_time:.2f} s"
                                             if result.completion_time is not None else ""))
    text = cv.add("text", x=_fmt(MARGIN + 4), y=_fmt(MARGIN + 14), font_size="12", font_family="sans-serif")
    text.text = caption
    ET.indent(cv.root)
    return ET.tostring(cv.root, encoding="utf-8", xml_declaration=True) + b"\n"


def export_trajectory_svg(result: RunResult, path: str | Path, scenario: Scenario | None = None,
                          robot: RobotGeometry = RobotGeometry(), title: str | None = None) -> Path:
    path = Path(path)
    path.write_bytes(trajectory_svg(result, scenario, robot, title))
    return path
