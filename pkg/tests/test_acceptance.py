"""Acceptance gate: one test per release criterion, each printing a single
PASS/FAIL line. Run with -s to see the lines directly."""

import json
import math
import random
import time
from pathlib import Path

import pytest

from frontier_nav import protocol
from frontier_nav.episodic_memory import PenaltyParams, episodic_penalty
from frontier_nav.planner import PlannerConfig, PlannerWeights
from frontier_nav.reflection import StagnationMonitor, detect
from frontier_nav.runner import RunnerConfig, compute_spl, run_suite, trace_bytes
from frontier_nav.scoring import NoisyScorer, OracleScorer
from frontier_nav.sim import load_scene_file, ray_angles, sense
from frontier_nav.voxel_map import (
    SensorConfig,
    VoxelGrid,
    extract_frontiers,
    integrate_frame,
    voxel_state,
)

ROOT = Path(__file__).resolve().parent.parent
SUITE = sorted((ROOT / "scenes" / "suite").glob("*.scene"))
FIXTURES = sorted((ROOT / "scenes" / "fixtures").glob("*.scene"))
GOLDEN = ROOT / "fixtures" / "protocol"


def check(name: str, ok: bool, detail: str = ""):
    line = f"{'PASS' if ok else 'FAIL'} {name}"
    if detail:
        line += f" ({detail})"
    print(line)
    assert ok, line


def full_config(n_replan=3):
    return RunnerConfig(planner=PlannerConfig(n_replan=n_replan))


def no_reflect_config():
    return RunnerConfig(reflect=False)


def greedy_config():
    return RunnerConfig(
        planner=PlannerConfig(weights=PlannerWeights(alpha=1.0, beta=0.0, gamma=0.0)),
        reflect=False)


def oracle(scene, idx):
    return OracleScorer(scene, target_index=idx)


def noisy(scene, idx):
    return NoisyScorer(OracleScorer(scene, target_index=idx), noise_level=0.6, seed=0)


def suite_scenes():
    return [(p.name, load_scene_file(p)) for p in SUITE]


def fixture_scenes():
    return [(p.name, load_scene_file(p)) for p in FIXTURES]


@pytest.fixture(scope="module")
def suite_full():
    return run_suite(suite_scenes(), full_config(), oracle)


@pytest.fixture(scope="module")
def suite_stepwise():
    return run_suite(suite_scenes(), full_config(n_replan=1), oracle)


def test_frontier_brute_force_oracle():
    rng = random.Random(99)
    start = time.monotonic()
    for case in range(200):
        if case % 2 == 0:
            dims = (rng.randint(1, 32), rng.randint(1, 32), 1)
        else:
            dims = (rng.randint(1, 12), rng.randint(1, 12), rng.randint(1, 12))
        grid = VoxelGrid(dims, 0.5)
        nx, ny, nz = dims
        for _ in range(rng.randint(0, nx * ny * nz)):
            idx = (rng.randrange(nx), rng.randrange(ny), rng.randrange(nz))
            grid.sdf[idx] = rng.uniform(-1, 1)
            grid.weight[idx] = rng.randint(0, 3)

        expected = set()
        for ix in range(nx):
            for iy in range(ny):
                for iz in range(nz):
                    if voxel_state(grid, (ix, iy, iz)) != "free":
                        continue
                    for ox, oy, oz in ((1, 0, 0), (-1, 0, 0), (0, 1, 0),
                                       (0, -1, 0), (0, 0, 1), (0, 0, -1)):
                        nb = (ix + ox, iy + oy, iz + oz)
                        if grid.in_bounds(nb) and voxel_state(grid, nb) == "unknown":
                            expected.add((ix, iy, iz))
                            break
        assert extract_frontiers(grid) == expected, f"mismatch on case {case}"
    elapsed = time.monotonic() - start
    check("frontier extraction matches brute force on 200 grids",
          elapsed < 5.0, f"{elapsed:.2f}s")


def test_partition_invariant_during_fusion():
    cfg = SensorConfig()
    for name, scene in suite_scenes()[:4]:
        grid = VoxelGrid((scene.width, scene.height, 1), scene.voxel_size)
        pose = scene.start_pose
        rng = random.Random(hash(name) & 0xFFFF)
        for _step in range(25):
            frame = sense(scene, pose, cfg, seed=rng.randrange(10**6))
            integrate_frame(grid, frame.rays, pose, cfg)
            unknown = grid.weight < grid.min_weight
            occupied = (~unknown) & (grid.sdf <= 0.0)
            free = (~unknown) & (grid.sdf > 0.0)
            total = int(unknown.sum()) + int(occupied.sum()) + int(free.sum())
            assert total == grid.sdf.size
            assert not (unknown & occupied).any()
            assert not (unknown & free).any()
            assert not (occupied & free).any()
            from frontier_nav.sim import AgentPose
            pose = AgentPose(pose.position, (pose.heading + rng.choice([0, 90, 180, 270])) % 360)
    check("free/occupied/unknown partition holds after every fusion step", True)


def test_penalty_direct_summation_oracle():
    rng = random.Random(7)
    worst = 0.0
    for _ in range(1000):
        lam = rng.uniform(0.5, 0.999)
        sigma = rng.uniform(0.2, 3.0)
        params = PenaltyParams(lam=lam, sigma=sigma)
        t = rng.randint(1, 60)
        footprint = [(tau, (rng.uniform(-5, 5), rng.uniform(-5, 5)))
                     for tau in range(1, rng.randint(2, t + 1))]
        q = (rng.uniform(-5, 5), rng.uniform(-5, 5))
        got = episodic_penalty(params, footprint, q, t)
        want = 0.0
        for tau, (px, py) in reversed(footprint):
            want += lam ** (t - tau) * math.exp(
                -((q[0] - px) ** 2 + (q[1] - py) ** 2) / (2.0 * sigma ** 2))
        worst = max(worst, abs(got - want))
    check("penalty matches direct summation on 1000 cases within 1e-9",
          worst <= 1e-9, f"max err {worst:.2e}")

    params = PenaltyParams(lam=0.87, sigma=1.3)
    footprint = [(4, (1.0, 2.0))]
    ratios = []
    for t in range(5, 20):
        a = episodic_penalty(params, footprint, (3.0, 0.5), t)
        b = episodic_penalty(params, footprint, (3.0, 0.5), t + 1)
        ratios.append(abs(b / a - params.lam))
    check("single-visit temporal decay ratio equals lambda within 1e-12",
          max(ratios) <= 1e-12, f"max err {max(ratios):.2e}")


def test_stagnation_truth_table():
    eps, n_stag, t_cool = 1.0, 3, 10
    low, high = 0.0, 5.0
    cases = 0
    for bits in range(8):
        gains = [low if bits & (1 << k) else high for k in range(3)]
        for t_last in (0, 5):
            for t in (t_last + t_cool - 1, t_last + t_cool, t_last + t_cool + 4):
                mon = StagnationMonitor(eps_gain=eps, n_stag=n_stag,
                                        t_cool=t_cool, t_last=t_last)
                for g in gains:
                    mon.gains.append(g)
                want = all(g < eps for g in gains) and (t - t_last) >= t_cool
                assert detect(mon, t) == want, (gains, t_last, t)
                cases += 1
    # partial windows never trigger
    for nfill in (0, 1, 2):
        mon = StagnationMonitor(eps_gain=eps, n_stag=n_stag, t_cool=0)
        for _ in range(nfill):
            mon.gains.append(low)
        assert detect(mon, 100) is False
        cases += 1
    check("stagnation trigger matches exhaustive truth table", True,
          f"{cases} cases")


def test_query_efficiency(suite_full, suite_stepwise):
    calls3 = sum(r.scorer_calls for _n, r in suite_full.rows)
    calls1 = sum(r.scorer_calls for _n, r in suite_stepwise.rows)
    sr3 = suite_full.aggregates()["sr"]
    sr1 = suite_stepwise.aggregates()["sr"]
    reduction = 1 - calls3 / calls1
    check("n_replan=3 saves >= 60% scorer calls at equal-or-better SR",
          reduction >= 0.60 and sr3 >= sr1,
          f"calls {calls3} vs {calls1} ({reduction:.1%}), SR {sr3:.2f} vs {sr1:.2f}")


def test_oscillation_escape():
    scenes = fixture_scenes()
    greedy = run_suite(scenes, greedy_config(), noisy)
    full = run_suite(scenes, full_config(), noisy)
    greedy_fail = sum(not r.success for _n, r in greedy.rows)
    full_ok = sum(r.success for _n, r in full.rows)
    both = [(g.revisit_rate, f.revisit_rate)
            for (_n, g), (_m, f) in zip(greedy.rows, full.rows)
            if g.success and f.success]
    revisit_ok = all(f <= 0.7 * g for g, f in both)
    check("deadlock fixtures: greedy fails >= 4/5, full succeeds >= 4/5, "
          "revisit cut >= 30% where both succeed",
          greedy_fail >= 4 and full_ok >= 4 and revisit_ok,
          f"greedy fails {greedy_fail}/5, full ok {full_ok}/5, "
          f"both-succeed comparisons {len(both)}")


def test_ablation_ordering(suite_full):
    scenes = suite_scenes()
    sr_full = suite_full.aggregates()["sr"]
    sr_norefl = run_suite(scenes, no_reflect_config(), oracle).aggregates()["sr"]
    sr_greedy = run_suite(scenes, greedy_config(), oracle).aggregates()["sr"]
    check("suite SR ordering full >= no-reflection >= greedy",
          sr_full >= sr_norefl >= sr_greedy,
          f"{sr_full:.2f} >= {sr_norefl:.2f} >= {sr_greedy:.2f}")


def test_determinism(suite_full):
    again = run_suite(suite_scenes(), full_config(), oracle)
    same_traces = all(
        trace_bytes(a) == trace_bytes(b)
        for (_n, a), (_m, b) in zip(suite_full.rows, again.rows))
    same_report = suite_full.as_json() == again.as_json()
    check("identical seeds give byte-identical traces and reports",
          same_traces and same_report)


def test_spl_hand_values():
    ok = (compute_spl(True, 5.0, 10.0) == 0.5
          and compute_spl(True, 5.0, 5.0) == 1.0
          and compute_spl(False, 5.0, 5.0) == 0.0)
    check("compute_spl matches hand values (0.5, 1.0, 0)", ok)


def test_protocol_golden_files():
    with open(GOLDEN / "score_request.json") as fh:
        body = json.load(fh)
    req = protocol.scoring_request_from_json(body)
    assert protocol.scoring_request_to_json(req) == body

    with open(GOLDEN / "score_response.json") as fh:
        body = json.load(fh)
    resp = protocol.scoring_response_from_json(body, expected_ids=[0, 1])
    assert protocol.scoring_response_to_json(resp) == body

    with open(GOLDEN / "reflect_response.json") as fh:
        body = json.load(fh)
    rules = protocol.reflect_response_from_json(body)
    assert protocol.reflect_response_to_json(rules) == body

    with open(GOLDEN / "summarize_response.json") as fh:
        body = json.load(fh)
    summary = protocol.summarize_response_from_json(body)
    assert protocol.summarize_response_to_json(summary) == body

    # request bodies the engine only ever serializes: shape check
    for name, keys in (("reflect_request.json", {"v", "instruction", "long_term", "recent"}),
                       ("summarize_request.json", {"v", "entries"})):
        with open(GOLDEN / name) as fh:
            body = json.load(fh)
        assert body["v"] == 1 and set(body) == keys
    check("golden protocol fixtures round-trip through the client parsers", True)
