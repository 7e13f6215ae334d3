"""Stagnation detection and reflective correction.

The monitor watches per-step exploration gain (drop in unknown volume); a full
window of low gains plus an elapsed cooldown triggers a reflection, which
produces structured Avoid/Try rules that modulate subsequent frontier scores.
"""

from __future__ import annotations

import math
from collections import Counter, deque
from dataclasses import dataclass, field

from .episodic_memory import EpisodicMemory
from .semantic_map import TaskInstruction
from .voxel_map import FrontierRegion


@dataclass
class StagnationMonitor:
    eps_gain: float = 1.0
    n_stag: int = 3
    t_cool: int = 10
    t_last: int = 0
    gains: deque = field(default_factory=deque)

    def __post_init__(self):
        if self.n_stag < 1:
            raise ValueError("n_stag must be >= 1")
        if self.t_cool < 0:
            raise ValueError("t_cool must be >= 0")
        self.gains = deque(self.gains, maxlen=self.n_stag)


def record_gain(mon: StagnationMonitor, unknown_prev: int, unknown_now: int) -> StagnationMonitor:
    mon.gains.append(unknown_prev - unknown_now)
    return mon


def detect(mon: StagnationMonitor, t: int) -> bool:
    """Deadlock trigger: every gain in a full window below eps_gain and the
    cooldown since the last reflection elapsed. Pure; the caller updates
    t_last on a True result."""
    if len(mon.gains) < mon.n_stag:
        return False
    low = sum(1 for g in mon.gains if g < mon.eps_gain)
    return low >= mon.n_stag and (t - mon.t_last) >= mon.t_cool


@dataclass
class AvoidDisc:
    center: tuple[float, float]
    radius: float


@dataclass
class TrySector:
    center_deg: float
    half_width_deg: float
    weight: float


@dataclass
class ReflectionSummary:
    avoid: list[AvoidDisc] = field(default_factory=list)
    try_hints: list[TrySector] = field(default_factory=list)
    evidence: str = ""


_QUADRANT_CENTERS = (45.0, 135.0, 225.0, 315.0)


class StatisticalReflector:
    """Built-in reflector: avoid the densest visited cell, try the least
    visited angular quadrant (relative to the episode start position)."""

    def __init__(self, cell_size: float = 0.5, sigma: float = 1.0):
        self.cell_size = cell_size
        self.sigma = sigma

    def generate(self, mem: EpisodicMemory, instruction: TaskInstruction) -> ReflectionSummary:
        positions = [pos for _step, pos in mem.footprint]
        if not positions:
            return ReflectionSummary(evidence="no footprint yet")

        counts = Counter(
            (math.floor(p[0] / self.cell_size), math.floor(p[1] / self.cell_size))
            for p in positions
        )
        # modal cell, ties broken by smallest (y, x)
        modal = min(counts, key=lambda c: (-counts[c], c[1], c[0]))
        center = ((modal[0] + 0.5) * self.cell_size, (modal[1] + 0.5) * self.cell_size)
        avoid = [AvoidDisc(center=center, radius=2.0 * self.sigma)]

        origin = positions[0]
        quad_counts = [0, 0, 0, 0]
        for p in positions:
            dx, dy = p[0] - origin[0], p[1] - origin[1]
            if abs(dx) < 1e-9 and abs(dy) < 1e-9:
                continue
            bearing = math.degrees(math.atan2(dy, dx)) % 360.0
            quad_counts[int(bearing // 90.0)] += 1
        lo = min(quad_counts)
        candidates = [q for q in range(4) if quad_counts[q] == lo]
        hi = max(quad_counts)
        densest = [q for q in range(4) if quad_counts[q] == hi]
        if len(densest) == 1 and (densest[0] + 2) % 4 in candidates:
            pick = (densest[0] + 2) % 4
        else:
            pick = candidates[0]
        hints = [TrySector(center_deg=_QUADRANT_CENTERS[pick], half_width_deg=45.0, weight=1.0)]
        evidence = (
            f"visits concentrated near ({center[0]:.2f}, {center[1]:.2f}) "
            f"({counts[modal]} visits); quadrant centered {_QUADRANT_CENTERS[pick]:.0f} deg "
            f"least explored ({lo} visits)"
        )
        return ReflectionSummary(avoid=avoid, try_hints=hints, evidence=evidence)


def generate(reflector, mem: EpisodicMemory, instruction: TaskInstruction):
    """Run a reflector with built-in fallback. Returns (summary, failed)."""
    try:
        return reflector.generate(mem, instruction), False
    except Exception:
        return StatisticalReflector().generate(mem, instruction), True


def _ang_diff(a: float, b: float) -> float:
    d = (a - b) % 360.0
    return d - 360.0 if d > 180.0 else d


def apply_rules(
    rules: ReflectionSummary | None,
    region: FrontierRegion,
    base_score: float,
    current: tuple[float, float],
    avoid_factor: float = 0.2,
) -> float:
    """Modulate a semantic score by the active Avoid/Try rules.

    Avoid only lowers, Try only raises, output stays in [0, 1]."""
    score = base_score
    if rules is None:
        return score
    cx, cy = region.centroid_2d
    for disc in rules.avoid:
        if math.dist((cx, cy), disc.center) <= disc.radius:
            score *= avoid_factor
            break
    dx, dy = cx - current[0], cy - current[1]
    if abs(dx) > 1e-12 or abs(dy) > 1e-12:
        bearing = math.degrees(math.atan2(dy, dx)) % 360.0
        for sector in rules.try_hints:
            if abs(_ang_diff(bearing, sector.center_deg)) <= sector.half_width_deg:
                score = score + sector.weight * (1.0 - score)
                break
    return max(0.0, min(1.0, score))
