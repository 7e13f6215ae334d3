"""Volumetric map: truncated signed-distance fusion, voxel state partition,
frontier extraction and frontier-region aggregation.

The grid stores a normalized signed distance in [-1, +1] per voxel together
with an integer accumulation weight. A voxel with weight below ``min_weight``
is unknown; otherwise its sign decides occupied (sdf <= 0) vs free. Frontiers
are free voxels with at least one face-adjacent unknown neighbor.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import RejectedInputError

FREE = "free"
OCCUPIED = "occupied"
UNKNOWN = "unknown"

# numeric state codes used by the vectorized paths
_S_FREE, _S_OCC, _S_UNK = 0, 1, 2


@dataclass
class SensorConfig:
    """Planar depth sensor parameters (defaults follow the target robot:
    120 deg horizontal fov, 1.7 m effective range)."""

    fov_deg: float = 120.0
    max_range: float = 1.7
    rays: int = 61
    trunc_dist: float = 0.6
    min_weight: int = 1

    def validate(self) -> None:
        if not (0.0 < self.fov_deg <= 360.0):
            raise RejectedInputError(f"fov_deg must be in (0, 360], got {self.fov_deg}")
        if self.max_range <= 0:
            raise RejectedInputError("max_range must be > 0")
        if self.trunc_dist <= 0:
            raise RejectedInputError("trunc_dist must be > 0")
        if self.rays < 3:
            raise RejectedInputError("rays must be >= 3")


class VoxelGrid:
    """Fused volumetric map. Single-writer: integrate_frame needs exclusive
    access; read-only queries may run concurrently between writes."""

    def __init__(self, dims, voxel_size: float, origin=(0.0, 0.0, 0.0), min_weight: int = 1):
        nx, ny, nz = (int(d) for d in dims)
        if nx < 1 or ny < 1 or nz < 1:
            raise RejectedInputError(f"grid dims must be >= 1, got {dims}")
        if voxel_size <= 0:
            raise RejectedInputError("voxel_size must be > 0")
        self.dims = (nx, ny, nz)
        self.voxel_size = float(voxel_size)
        self.origin = (float(origin[0]), float(origin[1]), float(origin[2]))
        self.min_weight = int(min_weight)
        self.sdf = np.zeros((nx, ny, nz), dtype=np.float64)
        self.weight = np.zeros((nx, ny, nz), dtype=np.int64)

    # --- geometry helpers ---

    def in_bounds(self, idx) -> bool:
        ix, iy, iz = idx
        nx, ny, nz = self.dims
        return 0 <= ix < nx and 0 <= iy < ny and 0 <= iz < nz

    def world_to_index(self, point) -> tuple[int, int, int]:
        x, y = point[0], point[1]
        z = point[2] if len(point) > 2 else self.origin[2] + 0.5 * self.voxel_size
        return (
            int(math.floor((x - self.origin[0]) / self.voxel_size)),
            int(math.floor((y - self.origin[1]) / self.voxel_size)),
            int(math.floor((z - self.origin[2]) / self.voxel_size)),
        )

    def index_center(self, idx) -> tuple[float, float, float]:
        ix, iy, iz = idx
        s = self.voxel_size
        return (
            self.origin[0] + (ix + 0.5) * s,
            self.origin[1] + (iy + 0.5) * s,
            self.origin[2] + (iz + 0.5) * s,
        )

    def point_in_bounds(self, point) -> bool:
        return self.in_bounds(self.world_to_index(point))

    # --- derived state ---

    def state_codes(self) -> np.ndarray:
        codes = np.full(self.dims, _S_UNK, dtype=np.uint8)
        observed = self.weight >= self.min_weight
        codes[observed & (self.sdf <= 0.0)] = _S_OCC
        codes[observed & (self.sdf > 0.0)] = _S_FREE
        return codes


def voxel_state(grid: VoxelGrid, idx) -> str:
    if not grid.in_bounds(idx):
        raise RejectedInputError(f"voxel index {idx} out of bounds for dims {grid.dims}")
    if grid.weight[idx] < grid.min_weight:
        return UNKNOWN
    return OCCUPIED if grid.sdf[idx] <= 0.0 else FREE


def integrate_frame(grid: VoxelGrid, depth_rays, pose, cfg: SensorConfig) -> VoxelGrid:
    """Fuse one planar depth sweep into the grid.

    ``depth_rays`` is a list of (absolute angle in degrees, measured range or
    None). For a hit at range d, every voxel whose along-ray center distance r
    satisfies d - r >= -trunc_dist receives sample clamp((d - r)/trunc, -1, 1);
    a no-return ray carves free space (+1) out to max_range. Fusion is the
    cumulative weighted average with unit sample weights.

    Raises RejectedInputError (without mutating) if the pose is out of bounds
    or a ray angle falls outside the sensor fov.
    """
    cfg.validate()
    px, py = float(pose.position[0]), float(pose.position[1])
    heading = float(pose.heading)
    if not grid.point_in_bounds((px, py)):
        raise RejectedInputError(f"pose ({px}, {py}) outside grid bounds")
    half_fov = cfg.fov_deg / 2.0 + 1e-9
    for angle, _rng in depth_rays:
        if abs(_ang_diff(angle, heading)) > half_fov:
            raise RejectedInputError(
                f"ray angle {angle} outside fov [{heading - half_fov}, {heading + half_fov}]"
            )

    s = grid.voxel_size
    step = s / 3.0
    sz = grid.origin[2] + 0.5 * s  # planar sweep through the z=0 slice
    for angle, rng in depth_rays:
        a = math.radians(angle)
        dx, dy = math.cos(a), math.sin(a)
        if rng is None:
            t_max = cfg.max_range
        else:
            t_max = min(float(rng) + cfg.trunc_dist, cfg.max_range + cfg.trunc_dist)
        seen: set[tuple[int, int, int]] = set()
        t = step * 0.5
        while t <= t_max:
            idx = grid.world_to_index((px + t * dx, py + t * dy, sz))
            t += step
            if idx in seen or not grid.in_bounds(idx):
                continue
            seen.add(idx)
            cx, cy, _ = grid.index_center(idx)
            r = (cx - px) * dx + (cy - py) * dy
            if rng is None:
                if r > cfg.max_range:
                    continue
                sample = 1.0
            else:
                raw = float(rng) - r
                if raw < -cfg.trunc_dist:
                    continue
                sample = max(-1.0, min(1.0, raw / cfg.trunc_dist))
            w = grid.weight[idx]
            grid.sdf[idx] = (grid.sdf[idx] * w + sample) / (w + 1)
            grid.weight[idx] = w + 1
    return grid


def _ang_diff(a: float, b: float) -> float:
    d = (a - b) % 360.0
    return d - 360.0 if d > 180.0 else d


def extract_frontiers(grid: VoxelGrid) -> set[tuple[int, int, int]]:
    """Free voxels with at least one face-adjacent unknown neighbor
    (4-neighborhood in 2D mode, 6 in 3D)."""
    codes = grid.state_codes()
    free = codes == _S_FREE
    unk = codes == _S_UNK
    near_unk = np.zeros_like(unk)
    for axis in range(3):
        if grid.dims[axis] == 1:
            continue
        shifted = np.zeros_like(unk)
        sl_dst = [slice(None)] * 3
        sl_src = [slice(None)] * 3
        sl_dst[axis], sl_src[axis] = slice(None, -1), slice(1, None)
        shifted[tuple(sl_dst)] |= unk[tuple(sl_src)]
        sl_dst[axis], sl_src[axis] = slice(1, None), slice(None, -1)
        shifted[tuple(sl_dst)] |= unk[tuple(sl_src)]
        near_unk |= shifted
    mask = free & near_unk
    return {tuple(int(v) for v in idx) for idx in np.argwhere(mask)}


@dataclass
class FrontierRegion:
    """Connected component of frontier voxels; the unit of planning."""

    id: int
    cells: frozenset
    centroid: tuple[float, float, float]
    extent: tuple[float, float, float]

    @property
    def centroid_2d(self) -> tuple[float, float]:
        return (self.centroid[0], self.centroid[1])


_FACE_OFFSETS = [(-1, 0, 0), (1, 0, 0), (0, -1, 0), (0, 1, 0), (0, 0, -1), (0, 0, 1)]


def aggregate_regions(frontier_cells, grid: VoxelGrid, min_region_cells: int = 2) -> list[FrontierRegion]:
    """Group frontier voxels into face-adjacent connected components, drop
    components smaller than min_region_cells, and sort by centroid row-major
    (z, then y, then x) for deterministic ids."""
    remaining = set(frontier_cells)
    components: list[list[tuple[int, int, int]]] = []
    while remaining:
        seed = remaining.pop()
        comp = [seed]
        stack = [seed]
        while stack:
            cx, cy, cz = stack.pop()
            for ox, oy, oz in _FACE_OFFSETS:
                nb = (cx + ox, cy + oy, cz + oz)
                if nb in remaining:
                    remaining.remove(nb)
                    comp.append(nb)
                    stack.append(nb)
        if len(comp) >= min_region_cells:
            components.append(comp)

    regions = []
    for comp in components:
        centers = [grid.index_center(c) for c in comp]
        cx = sum(p[0] for p in centers) / len(centers)
        cy = sum(p[1] for p in centers) / len(centers)
        cz = sum(p[2] for p in centers) / len(centers)
        ext = tuple(
            max(p[i] for p in centers) - min(p[i] for p in centers) + grid.voxel_size
            for i in range(3)
        )
        regions.append((cz, cy, cx, comp, ext))
    regions.sort(key=lambda r: (r[0], r[1], r[2]))
    return [
        FrontierRegion(
            id=i,
            cells=frozenset(comp),
            centroid=(cx, cy, cz),
            extent=ext,
        )
        for i, (cz, cy, cx, comp, ext) in enumerate(regions)
    ]


def unknown_volume(grid: VoxelGrid) -> int:
    return int((grid.weight < grid.min_weight).sum())


def render_raster(grid: VoxelGrid, frontiers=None) -> str:
    """Debug dump of the z=0 slice: '.' free, '#' occupied, '?' unknown,
    'F' frontier. Row-major, newline-terminated rows."""
    if frontiers is None:
        frontiers = extract_frontiers(grid)
    codes = grid.state_codes()[:, :, 0]
    chars = {_S_FREE: ".", _S_OCC: "#", _S_UNK: "?"}
    nx, ny, _ = grid.dims
    lines = []
    for iy in range(ny):
        row = []
        for ix in range(nx):
            if (ix, iy, 0) in frontiers:
                row.append("F")
            else:
                row.append(chars[int(codes[ix, iy])])
        lines.append("".join(row))
    return "\n".join(lines) + "\n"
