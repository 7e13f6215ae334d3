"""History-aware frontier selection: utility maximization over semantic score,
min-max normalized geometric cost, and the episodic penalty; plus BFS path
planning on known free space and the known-target shortcut."""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field

from .episodic_memory import EpisodicMemory, PenaltyParams, episodic_penalty
from .errors import RejectedInputError, ScorerError
from .reflection import ReflectionSummary, apply_rules
from .scoring import ScoringRequest
from .semantic_map import SemanticMap, TaskInstruction, localize_target
from .voxel_map import (
    FrontierRegion,
    VoxelGrid,
    aggregate_regions,
    extract_frontiers,
    voxel_state,
)


@dataclass
class PlannerWeights:
    alpha: float = 1.0
    beta: float = 0.5
    gamma: float = 0.5

    def validate(self) -> None:
        if min(self.alpha, self.beta, self.gamma) < 0:
            raise RejectedInputError("weights must be non-negative")
        if self.alpha + self.beta + self.gamma <= 0:
            raise RejectedInputError("at least one weight must be positive")


@dataclass
class PlannerConfig:
    weights: PlannerWeights = field(default_factory=PlannerWeights)
    n_replan: int = 3
    penalty: PenaltyParams = field(default_factory=PenaltyParams)
    theta_loc: float = 0.7
    theta_feat_goal: float = 0.8
    min_region_cells: int = 2
    avoid_factor: float = 0.2
    geodesic_cost: bool = False

    def validate(self) -> None:
        self.weights.validate()
        self.penalty.validate()
        if self.n_replan < 1:
            raise RejectedInputError("n_replan must be >= 1")


@dataclass
class UtilityBreakdown:
    region_id: int
    s_sem: float
    c_geo: float
    p_ep: float
    utility: float

    def as_dict(self) -> dict:
        return {
            "region_id": self.region_id,
            "s_sem": self.s_sem,
            "c_geo": self.c_geo,
            "p_ep": self.p_ep,
            "utility": self.utility,
        }


def geometric_costs(current, regions) -> list[float]:
    """Min-max normalized 2D Euclidean distances to region centroids."""
    if not regions:
        raise RejectedInputError("geometric_costs needs at least one region")
    dists = [math.dist(current, r.centroid_2d) for r in regions]
    lo, hi = min(dists), max(dists)
    if hi == lo:
        return [0.0 for _ in dists]
    return [(d - lo) / (hi - lo) for d in dists]


def select_frontier(scores, costs, penalties, weights: PlannerWeights):
    """Argmax of alpha*s - beta*c - gamma*p with ties broken by lowest index.
    Returns (best index, full breakdown list)."""
    weights.validate()
    if not scores:
        raise RejectedInputError("select_frontier needs at least one candidate")
    if not (len(scores) == len(costs) == len(penalties)):
        raise RejectedInputError(
            f"length mismatch: {len(scores)} scores, {len(costs)} costs, "
            f"{len(penalties)} penalties")
    for s in scores:
        if not (0.0 <= s <= 1.0):
            raise RejectedInputError(f"score {s} outside [0, 1]")
    breakdowns = []
    best = 0
    for i, (s, c, p) in enumerate(zip(scores, costs, penalties)):
        u = weights.alpha * s - weights.beta * c - weights.gamma * p
        breakdowns.append(UtilityBreakdown(region_id=i, s_sem=s, c_geo=c, p_ep=p,
                                           utility=u))
        if u > breakdowns[best].utility:
            best = i
    return best, breakdowns


_NEIGHBOR_ORDER = ((0, -1), (-1, 0), (1, 0), (0, 1))  # row-major


def plan_path(grid: VoxelGrid, start, goal) -> list[tuple[float, float]]:
    """Shortest 4-connected path over known free cells from the start cell to
    the nearest free cell within one voxel of the goal. Returns cell centers;
    empty when unreachable."""
    start_idx = grid.world_to_index((start[0], start[1]))
    if not grid.in_bounds(start_idx) or voxel_state(grid, start_idx) != "free":
        raise RejectedInputError(f"start cell {start_idx} is not free")
    goal_idx = grid.world_to_index((goal[0], goal[1]))

    start2 = (start_idx[0], start_idx[1])
    parents = {start2: None}
    queue = deque([start2])
    nx, ny, _ = grid.dims
    while queue:
        cx, cy = queue.popleft()
        for ox, oy in _NEIGHBOR_ORDER:
            nb = (cx + ox, cy + oy)
            if nb in parents or not (0 <= nb[0] < nx and 0 <= nb[1] < ny):
                continue
            if voxel_state(grid, (nb[0], nb[1], start_idx[2])) != "free":
                continue
            parents[nb] = (cx, cy)
            queue.append(nb)

    # candidate destinations: free, reached cells within one voxel of the goal
    candidates = []
    for ox in (-1, 0, 1):
        for oy in (-1, 0, 1):
            cell = (goal_idx[0] + ox, goal_idx[1] + oy)
            if cell in parents:
                center = grid.index_center((cell[0], cell[1], start_idx[2]))
                d = math.dist((center[0], center[1]), (goal[0], goal[1]))
                candidates.append((d, cell[1], cell[0], cell))
    if not candidates:
        return []
    candidates.sort()
    dest = candidates[0][3]
    cells = []
    cur = dest
    while cur is not None:
        cells.append(cur)
        cur = parents[cur]
    cells.reverse()
    return [
        (grid.index_center((c[0], c[1], start_idx[2]))[0],
         grid.index_center((c[0], c[1], start_idx[2]))[1])
        for c in cells
    ]


def geodesic_grid_costs(grid: VoxelGrid, current, regions) -> list[float]:
    """Min-max normalized BFS distances over known free cells (config option
    replacing the Euclidean default)."""
    if not regions:
        raise RejectedInputError("geodesic costs need at least one region")
    start_idx = grid.world_to_index((current[0], current[1]))
    dist = {}
    if grid.in_bounds(start_idx) and voxel_state(grid, start_idx) == "free":
        s2 = (start_idx[0], start_idx[1])
        dist[s2] = 0
        queue = deque([s2])
        nx, ny, _ = grid.dims
        while queue:
            cx, cy = queue.popleft()
            for ox, oy in _NEIGHBOR_ORDER:
                nb = (cx + ox, cy + oy)
                if nb in dist or not (0 <= nb[0] < nx and 0 <= nb[1] < ny):
                    continue
                if voxel_state(grid, (nb[0], nb[1], start_idx[2])) != "free":
                    continue
                dist[nb] = dist[(cx, cy)] + 1
                queue.append(nb)
    raw = []
    worst = (max(dist.values()) + 1) if dist else 1
    for r in regions:
        cell = grid.world_to_index(r.centroid_2d)
        raw.append(dist.get((cell[0], cell[1]), worst) * grid.voxel_size)
    lo, hi = min(raw), max(raw)
    if hi == lo:
        return [0.0 for _ in raw]
    return [(v - lo) / (hi - lo) for v in raw]


# --- planning cycle ---

@dataclass
class GoalReach:
    point: tuple[float, float]
    entry_id: int
    path: list


@dataclass
class Explore:
    region: FrontierRegion
    path: list
    breakdowns: list


@dataclass
class Terminate:
    reason: str  # exhausted | budget


@dataclass
class PlanningContext:
    grid: VoxelGrid
    semantic_map: SemanticMap
    memory: EpisodicMemory
    instruction: TaskInstruction
    scorer: object
    config: PlannerConfig
    current: tuple[float, float]
    step: int
    rules: ReflectionSummary | None = None
    allow_scorer_call: bool = True
    cached_scores: list | None = None  # [(centroid, adjusted score)] from last call


@dataclass
class CycleInfo:
    scorer_called: bool = False
    scorer_failed: bool = False
    scored: list | None = None  # cache to reuse inside the replanning interval


def _inherit_score(cached, centroid) -> float:
    if not cached:
        return 0.5
    best = min(cached, key=lambda cs: math.dist(cs[0], centroid))
    return best[1]


def plan_cycle(ctx: PlanningContext):
    """One planning decision: known-target shortcut, else batched frontier
    scoring (or cached-score reuse inside the replanning interval) and utility
    argmax. Returns (decision, CycleInfo)."""
    ctx.config.validate()
    info = CycleInfo()

    loc = localize_target(ctx.semantic_map, ctx.instruction, ctx.config.theta_loc,
                          ctx.config.theta_feat_goal)
    if loc is not None:
        point, entry_id = loc
        path = plan_path(ctx.grid, ctx.current, point)
        return GoalReach(point=point, entry_id=entry_id, path=path), info

    frontier_cells = extract_frontiers(ctx.grid)
    regions = aggregate_regions(frontier_cells, ctx.grid,
                                min_region_cells=ctx.config.min_region_cells)
    if not regions and frontier_cells:
        # only sub-threshold components remain (e.g. diagonal staircases at
        # fov boundaries); plan toward them rather than declaring exhaustion
        regions = aggregate_regions(frontier_cells, ctx.grid, min_region_cells=1)
    if not regions:
        return _exhausted(ctx, info)

    if ctx.allow_scorer_call:
        request = ScoringRequest(
            instruction=ctx.instruction,
            map_digest=list(ctx.semantic_map.entries),
            regions=[(r.id, r.centroid_2d, (r.extent[0], r.extent[1])) for r in regions],
            rules=ctx.rules,
            long_term_summary="; ".join(s.strategy for s in ctx.memory.long_term) or None,
        )
        info.scorer_called = True
        try:
            response = ctx.scorer.score(request)
            by_id = response.as_dict()
            base_scores = [by_id[r.id] for r in regions]
        except ScorerError:
            info.scorer_failed = True
            base_scores = [0.5 for _ in regions]
    else:
        base_scores = [_inherit_score(ctx.cached_scores, r.centroid_2d) for r in regions]

    scores = [
        apply_rules(ctx.rules, r, s, ctx.current, avoid_factor=ctx.config.avoid_factor)
        for r, s in zip(regions, base_scores)
    ]
    info.scored = [(r.centroid_2d, s) for r, s in zip(regions, scores)]

    if ctx.config.geodesic_cost:
        costs = geodesic_grid_costs(ctx.grid, ctx.current, regions)
    else:
        costs = geometric_costs(ctx.current, regions)
    penalties = []
    for r in regions:
        raw = episodic_penalty(ctx.config.penalty, ctx.memory.footprint,
                               r.centroid_2d, ctx.step)
        penalties.append(raw / (1.0 + raw))  # clamp to [0, 1) for shared scale

    _best, breakdowns = select_frontier(scores, costs, penalties, ctx.config.weights)
    order = sorted(range(len(regions)),
                   key=lambda i: (-breakdowns[i].utility, regions[i].id))
    for i in order:
        path = plan_path(ctx.grid, ctx.current, regions[i].centroid_2d)
        if path:
            chosen = [
                UtilityBreakdown(regions[j].id, breakdowns[j].s_sem, breakdowns[j].c_geo,
                                 breakdowns[j].p_ep, breakdowns[j].utility)
                for j in range(len(regions))
            ]
            return Explore(region=regions[i], path=path, breakdowns=chosen), info
    return _exhausted(ctx, info)


def _exhausted(ctx: PlanningContext, info: CycleInfo):
    """No explorable frontier is left. Before terminating, walk to the best
    below-threshold candidate of the target category (if any) to verify it
    up close, where detection confidence is highest."""
    candidate = localize_target(ctx.semantic_map, ctx.instruction, 0.0,
                                ctx.config.theta_feat_goal)
    if candidate is not None:
        point, entry_id = candidate
        path = plan_path(ctx.grid, ctx.current, point)
        return GoalReach(point=point, entry_id=entry_id, path=path), info
    return Terminate(reason="exhausted"), info
