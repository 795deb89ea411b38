"""Planar geometry helpers shared by the physics and sensor code.

Angles are degrees, counter-clockwise positive, measured from the +x axis.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

Point = tuple[float, float]


@dataclass(frozen=True)
class Pose:
    x: float
    y: float
    heading: float = 0.0

    def compose(self, offset: Point, facing: float = 0.0) -> Pose:
        """Pose of a frame mounted at ``offset`` (robot frame) on this pose."""
        c, s = _cos_sin(self.heading)
        ox, oy = offset
        return Pose(self.x + c * ox - s * oy, self.y + s * ox + c * oy, self.heading + facing)

    def to_dict(self) -> dict[str, float]:
        return {"x": self.x, "y": self.y, "heading": self.heading}

    @classmethod
    def from_dict(cls, d) -> Pose:
        return cls(float(d["x"]), float(d["y"]), float(d.get("heading", 0.0)))


def _cos_sin(deg: float) -> tuple[float, float]:
    r = math.radians(deg)
    return math.cos(r), math.sin(r)


def wrap_deg(angle: float) -> float:
    """Wrap to (-180, 180]."""
    a = math.fmod(angle, 360.0)
    if a <= -180.0:
        a += 360.0
    elif a > 180.0:
        a -= 360.0
    return a


def fold_quarter(angle: float) -> float:
    """Fold an angle to the nearest multiple of 90 deg; result in [0, 45]."""
    a = math.fmod(abs(angle), 90.0)
    return 90.0 - a if a > 45.0 else a


def rect_corners(cx: float, cy: float, heading: float, length: float, width: float) -> list[Point]:
    """Corners of a rectangle centred at (cx, cy), counter-clockwise order."""
    c, s = _cos_sin(heading)
    hl, hw = length / 2.0, width / 2.0
    ax, ay = c * hl, s * hl  # half-length along heading
    bx, by = -s * hw, c * hw  # half-width to the left
    return [
        (cx + ax - bx, cy + ay - by),
        (cx + ax + bx, cy + ay + by),
        (cx - ax + bx, cy - ay + by),
        (cx - ax - bx, cy - ay - by),
    ]


def _axes(poly: list[Point]) -> list[Point]:
    # rectangles only need two edge normals
    out = []
    for i in (0, 1):
        x0, y0 = poly[i]
        x1, y1 = poly[i + 1]
        ex, ey = x1 - x0, y1 - y0
        n = math.hypot(ex, ey)
        out.append((-ey / n, ex / n))
    return out


def _project(poly: list[Point], nx: float, ny: float) -> tuple[float, float]:
    vals = [px * nx + py * ny for px, py in poly]
    return min(vals), max(vals)


def rect_mtv(a: list[Point], b: list[Point], tol: float = 0.0) -> tuple[float, float, float] | None:
    """Minimum translation that moves rectangle ``b`` out of rectangle ``a``.

    Returns ``(depth, nx, ny)`` with the unit normal pointing from ``a``
    towards ``b``, or None when they are separated by more than ``tol``.
    With ``tol > 0`` a near-touching pair yields a depth in ``(-tol, 0]``.
    """
    best = None
    acx = sum(p[0] for p in a) / 4.0
    acy = sum(p[1] for p in a) / 4.0
    bcx = sum(p[0] for p in b) / 4.0
    bcy = sum(p[1] for p in b) / 4.0
    for nx, ny in _axes(a) + _axes(b):
        amin, amax = _project(a, nx, ny)
        bmin, bmax = _project(b, nx, ny)
        overlap = min(amax, bmax) - max(amin, bmin)
        if overlap <= -tol or (tol == 0.0 and overlap == 0.0):
            return None
        if best is None or overlap < best[0]:
            if (bcx - acx) * nx + (bcy - acy) * ny < 0.0:
                nx, ny = -nx, -ny
            best = (overlap, nx, ny)
    return best


def rects_overlap(a: list[Point], b: list[Point], margin: float = 0.0) -> bool:
    """True if the rectangles overlap or come closer than ``margin``."""
    for nx, ny in _axes(a) + _axes(b):
        amin, amax = _project(a, nx, ny)
        bmin, bmax = _project(b, nx, ny)
        if min(amax, bmax) - max(amin, bmin) < -margin:
            return False
    return True


def ray_segment(ox: float, oy: float, dx: float, dy: float, a: Point, b: Point) -> float | None:
    """Distance along the unit ray to segment ab, or None."""
    ex, ey = b[0] - a[0], b[1] - a[1]
    den = dx * ey - dy * ex
    if den == 0.0:
        return None
    wx, wy = a[0] - ox, a[1] - oy
    t = (wx * ey - wy * ex) / den
    u = (wx * dy - wy * dx) / den
    if t < 0.0 or u < 0.0 or u > 1.0:
        return None
    return t


def ray_circle(ox: float, oy: float, dx: float, dy: float, cx: float, cy: float, r: float) -> float | None:
    """Distance along the unit ray to the first crossing of a circle, or None."""
    wx, wy = ox - cx, oy - cy
    b = wx * dx + wy * dy
    c = wx * wx + wy * wy - r * r
    disc = b * b - c
    if disc < 0.0:
        return None
    root = math.sqrt(disc)
    t = -b - root
    if t < 0.0:
        t = -b + root  # origin inside the circle
        if t < 0.0:
            return None
        return 0.0
    return t
