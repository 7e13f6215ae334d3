"""Episode runner: the closed loop of sensing, map fusion, memory logging,
stagnation-triggered reflection, and frontier planning, plus suite execution
and success/efficiency metrics.

One logical step = one sensor frame, one planning decision, and at most 1.0 m
of motion along the planned path. Semantic scorer calls are gated to at most
one per ``n_replan`` steps; a reflection resets the gate, so the total obeys
scorer_calls <= ceil(steps / n_replan) + reflections.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import math
from collections import deque
from dataclasses import dataclass, field

from .episodic_memory import (
    ActionRecord,
    EpisodeEntry,
    EpisodicMemory,
    Rationale,
    StatisticalSummarizer,
    compress,
    log_step,
)
from .planner import Explore, GoalReach, PlannerConfig, PlanningContext, Terminate, plan_cycle
from .reflection import StagnationMonitor, StatisticalReflector, detect, generate, record_gain
from .semantic_map import SemanticMap
from .sim import Action, AgentPose, Scene, sense
from .sim import step as sim_step
from .voxel_map import SensorConfig, VoxelGrid, integrate_frame, render_raster, unknown_volume


@dataclass
class RunnerConfig:
    planner: PlannerConfig = field(default_factory=PlannerConfig)
    sensor: SensorConfig = field(default_factory=SensorConfig)
    eps_gain: float = 1.0
    n_stag: int = 3
    t_cool: int = 10
    memory_capacity: int = 5
    summarize: bool = True
    reflect: bool = True
    max_steps: int = 50
    seed: int = 0
    detection_noise: float = 0.0
    r_assoc: float = 0.5
    theta_feat: float = 0.8
    success_radius: float = 1.0
    stop_radius: float = 0.5

    def validate(self) -> None:
        self.planner.validate()
        self.sensor.validate()
        if self.max_steps < 1:
            raise ValueError("max_steps must be >= 1")
        if self.stop_radius > self.success_radius:
            raise ValueError("stop_radius must not exceed success_radius")

    def fingerprint(self) -> str:
        canon = json.dumps(dataclasses.asdict(self), sort_keys=True,
                           separators=(",", ":"))
        return hashlib.sha256(canon.encode()).hexdigest()[:16]


def scene_hash(scene: Scene) -> str:
    canon = json.dumps({
        "width": scene.width,
        "height": scene.height,
        "voxel_size": scene.voxel_size,
        "obstacles": ["".join("#" if scene.obstacles[ix, iy] else "."
                              for ix in range(scene.width))
                      for iy in range(scene.height)],
        "objects": [[o.id, o.category, list(o.position), o.attribute,
                     list(o.feature) if o.feature else None]
                    for o in scene.objects],
        "start": [list(scene.start_pose.position), scene.start_pose.heading],
        "targets": [[t.object_id, t.instruction.kind] for t in scene.targets],
    }, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()[:16]


def shortest_path_length(scene: Scene, start, goal) -> float:
    """BFS shortest path in meters over true free cells; inf if disconnected."""
    s, g = scene.cell_of(start), scene.cell_of(goal)
    if s == g:
        return 0.0
    dist = {s: 0}
    queue = deque([s])
    while queue:
        cx, cy = queue.popleft()
        for ox, oy in ((0, -1), (-1, 0), (1, 0), (0, 1)):
            nb = (cx + ox, cy + oy)
            if nb in dist or not scene.is_free_cell(nb):
                continue
            dist[nb] = dist[(cx, cy)] + 1
            if nb == g:
                return dist[nb] * scene.voxel_size
            queue.append(nb)
    return math.inf


def compute_spl(success: bool, shortest: float, actual: float) -> float:
    """Success weighted by path length: shortest / max(actual, shortest)."""
    if not success:
        return 0.0
    if shortest <= 0.0:
        return 1.0
    return shortest / max(actual, shortest)


@dataclass
class EpisodeResult:
    success: bool
    termination: str  # success | budget | exhausted
    steps: int
    path_length: float
    shortest_length: float
    spl: float
    scorer_calls: int
    reflections: int
    summaries: int
    scorer_failures: int
    revisit_rate: float
    final_position: tuple[float, float]
    trace: list = field(default_factory=list)

    def metrics(self) -> dict:
        return {
            "success": self.success,
            "termination": self.termination,
            "steps": self.steps,
            "path_length": self.path_length,
            "spl": self.spl,
            "scorer_calls": self.scorer_calls,
            "reflections": self.reflections,
            "summaries": self.summaries,
            "scorer_failures": self.scorer_failures,
            "revisit_rate": self.revisit_rate,
        }


def write_trace(result: EpisodeResult, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for record in result.trace:
            fh.write(json.dumps(record, sort_keys=True, separators=(",", ":")))
            fh.write("\n")


def trace_bytes(result: EpisodeResult) -> bytes:
    return b"".join(
        json.dumps(r, sort_keys=True, separators=(",", ":")).encode() + b"\n"
        for r in result.trace
    )


@dataclass
class _World:
    """Mutable state shared across the legs of a multi-target run."""

    grid: VoxelGrid
    semantic_map: SemanticMap
    pose: AgentPose


def _fresh_world(scene: Scene, cfg: RunnerConfig) -> _World:
    grid = VoxelGrid((scene.width, scene.height, 1), scene.voxel_size,
                     min_weight=cfg.sensor.min_weight)
    smap = SemanticMap(r_assoc=cfg.r_assoc, theta_feat=cfg.theta_feat)
    return _World(grid=grid, semantic_map=smap, pose=scene.start_pose)


def _stamp_agent_cell(grid: VoxelGrid, position) -> None:
    # the agent occupies this cell, so it is free regardless of fusion noise
    idx = grid.world_to_index((position[0], position[1]))
    if grid.weight[idx] < grid.min_weight:
        grid.weight[idx] = grid.min_weight
    if grid.sdf[idx] <= 0.0:
        grid.sdf[idx] = 1.0


def _advance(scene: Scene, pose: AgentPose, path, budget: float = 1.0):
    """Walk waypoints for up to ``budget`` meters; collisions truncate."""
    moved = 0.0
    for wp in path:
        if budget - moved <= 1e-9:
            break
        d = math.dist(pose.position, wp)
        if d <= 1e-9:
            continue
        bearing = math.degrees(math.atan2(wp[1] - pose.position[1],
                                          wp[0] - pose.position[0])) % 360.0
        pose = AgentPose(pose.position, bearing)
        want = min(d, budget - moved)
        new_pose, _ok = sim_step(scene, pose, Action("move", want))
        got = math.dist(new_pose.position, pose.position)
        pose = new_pose
        moved += got
        if got + 1e-9 < want:
            break  # blocked short of the waypoint
    return pose, moved


def _move_or_scan(world: _World, moved: float, config: RunnerConfig) -> ActionRecord:
    """A step that produced no motion rotates the sensor by one fov instead,
    so blocked or already-arrived agents keep revealing new space."""
    if moved > 1e-9:
        return ActionRecord("move", moved)
    world.pose = AgentPose(world.pose.position,
                           (world.pose.heading + config.sensor.fov_deg) % 360.0)
    return ActionRecord("rotate", config.sensor.fov_deg)


def run_episode(scene: Scene, config: RunnerConfig, scorer,
                reflector=None, summarizer=None,
                target_index: int = 0, world: _World | None = None) -> EpisodeResult:
    """Run one navigation episode and return its result with a full trace."""
    config.validate()
    if reflector is None:
        reflector = StatisticalReflector(sigma=config.planner.penalty.sigma)
    if summarizer is None:
        summarizer = StatisticalSummarizer()
    if world is None:
        world = _fresh_world(scene, config)

    target_spec = scene.targets[target_index]
    instruction = target_spec.instruction
    true_target = scene.object_by_id(target_spec.object_id).position
    start = world.pose.position
    shortest = shortest_path_length(scene, start, true_target)

    memory = EpisodicMemory(capacity=config.memory_capacity)
    monitor = StagnationMonitor(eps_gain=config.eps_gain, n_stag=config.n_stag,
                                t_cool=config.t_cool)
    rules = None
    cached_scores = None
    steps_since_score = config.planner.n_replan  # first cycle may call

    scorer_calls = reflections = summaries = scorer_failures = 0
    path_length = 0.0
    prev_unknown = unknown_volume(world.grid)
    visited = set()
    revisits = 0
    success = False
    termination = "budget"
    steps = 0
    full_turn = max(1, math.ceil(360.0 / config.sensor.fov_deg))
    scans_left = full_turn

    trace = [{
        "type": "header", "v": 1,
        "scene": scene_hash(scene),
        "config": config.fingerprint(),
        "seed": config.seed,
        "target_index": target_index,
    }]

    for t in range(1, config.max_steps + 1):
        steps = t
        frame = sense(scene, world.pose, config.sensor,
                      seed=config.seed * 1000003 + t,
                      detection_noise=config.detection_noise)
        integrate_frame(world.grid, frame.rays, world.pose, config.sensor)
        _stamp_agent_cell(world.grid, world.pose.position)
        world.semantic_map.update(frame.detections)

        unknown = unknown_volume(world.grid)
        record_gain(monitor, prev_unknown, unknown)
        gain = prev_unknown - unknown
        prev_unknown = unknown

        reflected = False
        if config.reflect and detect(monitor, t):
            rules, _failed = generate(reflector, memory, instruction)
            monitor.t_last = t
            memory.last_reflection_step = t
            reflections += 1
            reflected = True
            steps_since_score = config.planner.n_replan  # gate reset

        ctx = PlanningContext(
            grid=world.grid,
            semantic_map=world.semantic_map,
            memory=memory,
            instruction=instruction,
            scorer=scorer,
            config=config.planner,
            current=world.pose.position,
            step=t,
            rules=rules,
            allow_scorer_call=steps_since_score >= config.planner.n_replan,
            cached_scores=cached_scores,
        )
        decision, info = plan_cycle(ctx)
        if info.scorer_called:
            scorer_calls += 1
            steps_since_score = 0
            if info.scorer_failed:
                scorer_failures += 1
            else:
                cached_scores = info.scored
        steps_since_score += 1

        record = {
            "type": "step", "step": t,
            "x": world.pose.position[0], "y": world.pose.position[1],
            "heading": world.pose.heading,
            "gain": gain, "reflected": reflected,
            "scorer_called": info.scorer_called,
        }
        rationale = Rationale()
        action = ActionRecord("move", 0.0)

        if isinstance(decision, Terminate):
            # scan a full turn before giving up: the fov cone leaves blind
            # spots whose frontiers only appear after rotating in place
            if decision.reason == "exhausted" and scans_left > 0:
                scans_left -= 1
                record["decision"] = "scan"
                world.pose = AgentPose(
                    world.pose.position,
                    (world.pose.heading + config.sensor.fov_deg) % 360.0)
                action = ActionRecord("rotate", config.sensor.fov_deg)
            else:
                record["decision"] = "terminate"
                termination = decision.reason
                action = ActionRecord("stop")
        elif isinstance(decision, GoalReach):
            scans_left = full_turn
            record["decision"] = "goal"
            rationale = Rationale(text=f"approach entry {decision.entry_id}")
            if math.dist(world.pose.position, decision.point) <= config.stop_radius:
                action = ActionRecord("stop")
                termination = "success"
                success = math.dist(world.pose.position, true_target) <= config.success_radius
            else:
                path = list(decision.path) + [decision.point]
                world.pose, moved = _advance(scene, world.pose, path)
                path_length += moved
                action = _move_or_scan(world, moved, config)
        else:
            scans_left = full_turn
            record["decision"] = "explore"
            record["region_id"] = decision.region.id
            chosen = next(b for b in decision.breakdowns
                          if b.region_id == decision.region.id)
            rationale = Rationale(region_id=decision.region.id,
                                  utility=chosen.as_dict())
            record["utility"] = round(chosen.utility, 6)
            world.pose, moved = _advance(scene, world.pose, decision.path)
            path_length += moved
            action = _move_or_scan(world, moved, config)

        cell = scene.cell_of(world.pose.position)
        if cell in visited:
            revisits += 1
        visited.add(cell)

        if len(memory.short_term) >= memory.capacity:
            if config.summarize:
                compress(memory, summarizer)
                summaries += 1
            else:
                memory.clear_short_term()
        log_step(memory, EpisodeEntry(step=t, position=world.pose.position,
                                      action=action, rationale=rationale))

        record["x2"] = world.pose.position[0]
        record["y2"] = world.pose.position[1]
        record["action"] = action.kind
        trace.append(record)

        if action.kind == "stop":
            break

    revisit_rate = revisits / steps if steps else 0.0
    spl = compute_spl(success, shortest, path_length)
    trace.append({
        "type": "result",
        "success": success, "termination": termination, "steps": steps,
        "path_length": round(path_length, 9), "spl": round(spl, 9),
        "scorer_calls": scorer_calls, "reflections": reflections,
        "summaries": summaries,
        "scorer_failures": scorer_failures,
        "revisit_rate": round(revisit_rate, 9),
        "raster": render_raster(world.grid),
    })
    return EpisodeResult(
        success=success,
        termination=termination,
        steps=steps,
        path_length=path_length,
        shortest_length=shortest,
        spl=spl,
        scorer_calls=scorer_calls,
        reflections=reflections,
        summaries=summaries,
        scorer_failures=scorer_failures,
        revisit_rate=revisit_rate,
        final_position=world.pose.position,
        trace=trace,
    )


def run_lifelong(scene: Scene, config: RunnerConfig, scorer_factory,
                 reflector=None, summarizer=None) -> list[EpisodeResult]:
    """Visit every target of the scene in order, sharing the volumetric and
    semantic maps across legs; episodic memory restarts per leg."""
    world = _fresh_world(scene, config)
    results = []
    for idx in range(len(scene.targets)):
        scorer = scorer_factory(scene, idx)
        results.append(run_episode(scene, config, scorer,
                                   reflector=reflector, summarizer=summarizer,
                                   target_index=idx, world=world))
    return results


@dataclass
class SuiteResult:
    rows: list  # (name, EpisodeResult)

    def aggregates(self) -> dict:
        n = len(self.rows)
        if n == 0:
            return {"scenes": 0}
        results = [r for _n, r in self.rows]
        return {
            "scenes": n,
            "sr": sum(r.success for r in results) / n,
            "spl": sum(r.spl for r in results) / n,
            "steps": sum(r.steps for r in results) / n,
            "scorer_calls": sum(r.scorer_calls for r in results) / n,
            "reflections": sum(r.reflections for r in results) / n,
            "revisit_rate": sum(r.revisit_rate for r in results) / n,
        }

    def as_json(self) -> dict:
        return {
            "rows": [dict(name=name, **r.metrics()) for name, r in self.rows],
            "aggregates": self.aggregates(),
        }


def run_suite(items, config: RunnerConfig, scorer_factory, jobs: int = 1) -> SuiteResult:
    """Run one episode per (name, scene) pair. Results are ordered and
    deterministic regardless of the worker count."""
    def one(pair):
        name, scene = pair
        return name, run_episode(scene, config, scorer_factory(scene, 0))

    if jobs > 1:
        from concurrent.futures import ThreadPoolExecutor
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(one, items))
    else:
        rows = [one(pair) for pair in items]
    return SuiteResult(rows=rows)


def format_table(suite: SuiteResult) -> str:
    header = f"{'scene':<24} {'ok':>3} {'spl':>6} {'steps':>5} {'calls':>5} {'refl':>4}"
    lines = [header, "-" * len(header)]
    for name, r in suite.rows:
        lines.append(
            f"{name:<24} {'yes' if r.success else 'no':>3} {r.spl:>6.3f} "
            f"{r.steps:>5d} {r.scorer_calls:>5d} {r.reflections:>4d}"
        )
    agg = suite.aggregates()
    lines.append("-" * len(header))
    lines.append(
        f"{'mean':<24} {agg['sr']:>3.2f} {agg['spl']:>6.3f} {agg['steps']:>5.1f} "
        f"{agg['scorer_calls']:>5.1f} {agg['reflections']:>4.1f}"
    )
    return "\n".join(lines) + "\n"
