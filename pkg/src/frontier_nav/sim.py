"""Deterministic 2D grid world: scene files, planar depth raycasting,
simulated object detections, and collision-checked motion.

Scene file format (UTF-8, line oriented, coordinates in meters):

    GRID <width> <height> <voxel_size_m>
    ROW <chars>            # x height, '.' free / '#' obstacle
    OBJECT <id> <category> <x> <y> [attr="..."] [feat=<r,r,...>]
    AGENT <x> <y> <heading_deg>
    TARGET <object|description|image> <payload>
    # comment lines ignored
"""

from __future__ import annotations

import math
import re
import shlex
from dataclasses import dataclass, field

import numpy as np

from .errors import RejectedInputError, SceneFormatError
from .semantic_map import Detection, TaskInstruction, unit
from .voxel_map import SensorConfig

CONTACT_MARGIN = 0.05  # m, keeps the agent off exact cell boundaries


@dataclass
class AgentPose:
    position: tuple[float, float]
    heading: float  # degrees in [0, 360)


@dataclass
class SceneObject:
    id: int
    category: str
    position: tuple[float, float]
    attribute: str = ""
    feature: tuple[float, ...] | None = None


@dataclass
class TargetSpec:
    instruction: TaskInstruction
    object_id: int


@dataclass
class Scene:
    """Immutable after load; safe to share across parallel episodes."""

    width: int
    height: int
    voxel_size: float
    obstacles: np.ndarray  # bool, indexed [ix, iy]
    objects: list[SceneObject]
    start_pose: AgentPose
    targets: list[TargetSpec]

    @property
    def target(self) -> TargetSpec:
        return self.targets[0]

    def object_by_id(self, oid: int) -> SceneObject:
        for obj in self.objects:
            if obj.id == oid:
                return obj
        raise KeyError(oid)

    def cell_of(self, point) -> tuple[int, int]:
        return (
            int(math.floor(point[0] / self.voxel_size)),
            int(math.floor(point[1] / self.voxel_size)),
        )

    def in_bounds(self, cell) -> bool:
        return 0 <= cell[0] < self.width and 0 <= cell[1] < self.height

    def is_free_cell(self, cell) -> bool:
        return self.in_bounds(cell) and not self.obstacles[cell[0], cell[1]]

    def is_free_point(self, point) -> bool:
        return self.is_free_cell(self.cell_of(point))

    def diameter(self) -> float:
        return math.hypot(self.width * self.voxel_size, self.height * self.voxel_size)


def load_scene(text: str) -> Scene:
    width = height = None
    voxel_size = None
    rows: list[str] = []
    objects: list[SceneObject] = []
    agent = None
    target_lines: list[tuple[int, list[str]]] = []

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        try:
            parts = shlex.split(line)
        except ValueError as exc:
            raise SceneFormatError(str(exc), lineno)
        directive = parts[0]
        if directive == "GRID":
            if len(parts) != 4:
                raise SceneFormatError("GRID expects <width> <height> <voxel_size>", lineno)
            width, height = int(parts[1]), int(parts[2])
            voxel_size = float(parts[3])
            if width < 1 or height < 1 or voxel_size <= 0:
                raise SceneFormatError("GRID dimensions must be positive", lineno)
        elif directive == "ROW":
            if width is None:
                raise SceneFormatError("ROW before GRID", lineno)
            body = line[4:].strip()
            if len(body) != width or any(c not in ".#" for c in body):
                raise SceneFormatError(
                    f"ROW must be {width} chars of '.' or '#'", lineno)
            rows.append(body)
        elif directive == "OBJECT":
            if len(parts) < 5:
                raise SceneFormatError(
                    "OBJECT expects <id> <category> <x> <y> [attr=...] [feat=...]", lineno)
            oid, category = int(parts[1]), parts[2]
            x, y = float(parts[3]), float(parts[4])
            attr = ""
            feat = None
            for extra in parts[5:]:
                if extra.startswith("attr="):
                    attr = extra[5:]
                elif extra.startswith("feat="):
                    feat = unit(tuple(float(v) for v in extra[5:].split(",")))
                else:
                    raise SceneFormatError(f"unknown OBJECT field '{extra}'", lineno)
            objects.append(SceneObject(oid, category, (x, y), attr, feat))
        elif directive == "AGENT":
            if len(parts) != 4:
                raise SceneFormatError("AGENT expects <x> <y> <heading_deg>", lineno)
            agent = AgentPose((float(parts[1]), float(parts[2])), float(parts[3]) % 360.0)
        elif directive == "TARGET":
            if len(parts) < 3:
                raise SceneFormatError("TARGET expects <kind> <payload>", lineno)
            target_lines.append((lineno, parts[1:]))
        else:
            raise SceneFormatError(f"unknown directive '{directive}'", lineno)

    if width is None:
        raise SceneFormatError("missing GRID line")
    if len(rows) != height:
        raise SceneFormatError(f"expected {height} ROW lines, got {len(rows)}")
    if agent is None:
        raise SceneFormatError("missing AGENT line")
    if not target_lines:
        raise SceneFormatError("missing TARGET line")

    obstacles = np.zeros((width, height), dtype=bool)
    for iy, row in enumerate(rows):
        for ix, ch in enumerate(row):
            obstacles[ix, iy] = ch == "#"

    scene = Scene(width, height, voxel_size, obstacles, objects, agent, [])

    ids = [o.id for o in objects]
    if len(set(ids)) != len(ids):
        raise SceneFormatError("duplicate object ids")
    for obj in objects:
        if not scene.is_free_point(obj.position):
            raise SceneFormatError(f"object {obj.id} lies on a non-free cell")
    if not scene.is_free_point(agent.position):
        raise SceneFormatError("agent start cell is not free")

    for lineno, parts in target_lines:
        kind = parts[0]
        try:
            if kind == "object":
                obj = scene.object_by_id(int(parts[1]))
                ins = TaskInstruction(kind="object", target_category=obj.category)
            elif kind == "description":
                obj = scene.object_by_id(int(parts[1]))
                qualifier = " ".join(parts[2:]) or None
                ins = TaskInstruction(kind="description", target_category=obj.category,
                                      qualifier=qualifier)
            elif kind == "image":
                obj = scene.object_by_id(int(parts[1]))
                if obj.feature is None:
                    raise SceneFormatError(
                        f"image target requires object {obj.id} to carry feat=", lineno)
                ins = TaskInstruction(kind="image", target_category=obj.category,
                                      feature=obj.feature)
            else:
                raise SceneFormatError(f"unknown target kind '{kind}'", lineno)
        except KeyError as exc:
            raise SceneFormatError(f"TARGET references unknown object id {exc.args[0]}", lineno)
        scene.targets.append(TargetSpec(instruction=ins, object_id=obj.id))
    return scene


def load_scene_file(path) -> Scene:
    with open(path, "r", encoding="utf-8") as fh:
        return load_scene(fh.read())


def raycast(scene: Scene, origin, angle_deg: float, max_range: float) -> float | None:
    """Distance along the ray to the first obstacle cell boundary, or None if
    nothing is hit within max_range (grid exits count as no return)."""
    a = math.radians(angle_deg)
    dx, dy = math.cos(a), math.sin(a)
    x, y = origin
    s = scene.voxel_size
    ix, iy = scene.cell_of(origin)
    step_x = 1 if dx > 0 else -1
    step_y = 1 if dy > 0 else -1
    t_max_x = math.inf if dx == 0 else (((ix + (step_x > 0)) * s - x) / dx)
    t_max_y = math.inf if dy == 0 else (((iy + (step_y > 0)) * s - y) / dy)
    t_delta_x = math.inf if dx == 0 else abs(s / dx)
    t_delta_y = math.inf if dy == 0 else abs(s / dy)
    t = 0.0
    while True:
        if t_max_x < t_max_y:
            t = t_max_x
            t_max_x += t_delta_x
            ix += step_x
        else:
            t = t_max_y
            t_max_y += t_delta_y
            iy += step_y
        if t > max_range:
            return None
        if not scene.in_bounds((ix, iy)):
            return None
        if scene.obstacles[ix, iy]:
            return t


def _ang_diff(a: float, b: float) -> float:
    d = (a - b) % 360.0
    return d - 360.0 if d > 180.0 else d


def ray_angles(heading: float, cfg: SensorConfig) -> list[float]:
    if cfg.fov_deg >= 360.0:
        return [heading - 180.0 + 360.0 * k / cfg.rays for k in range(cfg.rays)]
    half = cfg.fov_deg / 2.0
    return [heading - half + cfg.fov_deg * k / (cfg.rays - 1) for k in range(cfg.rays)]


@dataclass
class SensorFrame:
    rays: list[tuple[float, float | None]]
    detections: list[Detection]


def sense(scene: Scene, pose: AgentPose, cfg: SensorConfig, seed: int = 0,
          detection_noise: float = 0.0) -> SensorFrame:
    """Planar sweep plus simulated detections. Fully determined by
    (scene, pose, cfg, seed)."""
    cfg.validate()
    rays = [(ang, raycast(scene, pose.position, ang, cfg.max_range))
            for ang in ray_angles(pose.heading, cfg)]

    rng = np.random.default_rng(seed)
    detections = []
    half = cfg.fov_deg / 2.0 + 1e-9
    for obj in sorted(scene.objects, key=lambda o: o.id):
        ox, oy = obj.position
        d = math.dist(pose.position, obj.position)
        noise = float(rng.uniform(-detection_noise, detection_noise)) if detection_noise else 0.0
        if d > cfg.max_range:
            continue
        bearing = math.degrees(math.atan2(oy - pose.position[1], ox - pose.position[0]))
        if abs(_ang_diff(bearing, pose.heading)) > half:
            continue
        hit = raycast(scene, pose.position, bearing, d)
        if hit is not None and hit < d - 1e-9:
            continue  # occluded
        conf = max(0.0, min(1.0, 1.0 - d / (2.0 * cfg.max_range) + noise))
        detections.append(Detection(category=obj.category, confidence=conf,
                                    position=obj.position, feature=obj.feature,
                                    attribute=obj.attribute))
    return SensorFrame(rays=rays, detections=detections)


@dataclass
class Action:
    kind: str  # move | rotate | stop
    param: float = 0.0


def step(scene: Scene, pose: AgentPose, action: Action) -> tuple[AgentPose, bool]:
    """Apply one action. Moves truncate at the first obstacle boundary minus
    the contact margin; rotation always succeeds; stop is identity."""
    if action.kind == "stop":
        return pose, False
    if action.kind == "rotate":
        return AgentPose(pose.position, (pose.heading + action.param) % 360.0), False
    if action.kind != "move":
        raise RejectedInputError(f"unknown action kind '{action.kind}'")
    d = float(action.param)
    if d > 1.0 + 1e-9:
        raise RejectedInputError(f"move distance {d} exceeds 1.0 m per step")
    if d < 0:
        raise RejectedInputError("move distance must be >= 0")
    hit = raycast(scene, pose.position, pose.heading, d + CONTACT_MARGIN)
    allowed = d if hit is None else max(0.0, hit - CONTACT_MARGIN)
    if allowed <= 1e-12:
        return pose, False
    a = math.radians(pose.heading)
    new = (pose.position[0] + allowed * math.cos(a),
           pose.position[1] + allowed * math.sin(a))
    return AgentPose(new, pose.heading), True
