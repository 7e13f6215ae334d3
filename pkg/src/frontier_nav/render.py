"""Deterministic SVG rendering of an episode trace over its scene: obstacle
raster, final unknown-space shading, trajectory polyline, reflection markers,
and the true target."""

from __future__ import annotations

import math

from .errors import RejectedInputError
from .runner import scene_hash
from .sim import Scene

SCALE = 40.0  # px per meter


def _f(v: float) -> str:
    return f"{v:.2f}"


def _star(cx: float, cy: float, r: float) -> str:
    points = []
    for k in range(10):
        rad = r if k % 2 == 0 else r * 0.4
        ang = math.radians(-90 + 36 * k)
        points.append(f"{_f(cx + rad * math.cos(ang))},{_f(cy + rad * math.sin(ang))}")
    return " ".join(points)


def render_svg(scene: Scene, trace: list) -> str:
    """Render a trace (header/step/result records) on top of its scene.

    Raises RejectedInputError when the trace header does not match the scene.
    """
    if not trace or trace[0].get("type") != "header":
        raise RejectedInputError("trace must start with a header record")
    header = trace[0]
    if header.get("scene") != scene_hash(scene):
        raise RejectedInputError(
            f"trace was recorded on scene {header.get('scene')}, "
            f"not {scene_hash(scene)}")

    s = scene.voxel_size * SCALE
    w = scene.width * s
    h = scene.height * s
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_f(w)}" '
        f'height="{_f(h)}" viewBox="0 0 {_f(w)} {_f(h)}">',
        f'<rect width="{_f(w)}" height="{_f(h)}" fill="#ffffff"/>',
    ]

    for iy in range(scene.height):
        for ix in range(scene.width):
            if scene.obstacles[ix, iy]:
                parts.append(
                    f'<rect x="{_f(ix * s)}" y="{_f(iy * s)}" width="{_f(s)}" '
                    f'height="{_f(s)}" fill="#222222"/>')

    result = trace[-1] if trace[-1].get("type") == "result" else None
    if result and "raster" in result:
        rows = result["raster"].splitlines()
        for iy, row in enumerate(rows):
            for ix, ch in enumerate(row):
                if ch == "?" and not scene.obstacles[ix, iy]:
                    parts.append(
                        f'<rect x="{_f(ix * s)}" y="{_f(iy * s)}" width="{_f(s)}" '
                        f'height="{_f(s)}" fill="#8899aa" fill-opacity="0.45"/>')

    steps = [r for r in trace if r.get("type") == "step"]
    if steps:
        pts = [(r["x"], r["y"]) for r in steps]
        pts.append((steps[-1]["x2"], steps[-1]["y2"]))
        poly = " ".join(f"{_f(x * SCALE)},{_f(y * SCALE)}" for x, y in pts)
        parts.append(
            f'<polyline points="{poly}" fill="none" stroke="#1166cc" '
            'stroke-width="2"/>')
        sx, sy = pts[0]
        parts.append(
            f'<circle cx="{_f(sx * SCALE)}" cy="{_f(sy * SCALE)}" r="5" '
            'fill="#1166cc"/>')
        for r in steps:
            if r.get("reflected"):
                parts.append(
                    f'<circle cx="{_f(r["x"] * SCALE)}" cy="{_f(r["y"] * SCALE)}" '
                    'r="7" fill="none" stroke="#cc3311" stroke-width="2"/>')

    target = scene.object_by_id(scene.targets[header.get("target_index", 0)].object_id)
    tx, ty = target.position
    parts.append(
        f'<polygon points="{_star(tx * SCALE, ty * SCALE, 9.0)}" '
        'fill="#ddaa00" stroke="#886600" stroke-width="1"/>')

    parts.append("</svg>")
    return "\n".join(parts) + "\n"
