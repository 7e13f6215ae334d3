"""Command line front end: run single episodes, benchmark scene suites,
validate scene files, and render traces to SVG.

Exit codes: 0 success, 1 usage/config/input error, 2 navigation failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from .config import build_runner_config, config_hash, load_config, parse_config
from .errors import ConfigError, SceneFormatError
from .render import render_svg
from .runner import (
    format_table,
    run_episode,
    run_lifelong,
    run_suite,
    scene_hash,
    write_trace,
)
from .scoring import NoisyScorer, OracleScorer, RemoteScorer
from .sim import load_scene_file


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _load_values(args):
    if getattr(args, "config", None):
        values = load_config(args.config, args.set or [])
    else:
        values = parse_config("", args.set or [])
    if getattr(args, "seed", None) is not None:
        values["seed"] = args.seed
    if getattr(args, "scorer", None):
        values["scorer.kind"] = args.scorer
    if getattr(args, "endpoint", None):
        values["scorer.endpoint"] = args.endpoint
    return values


def _scorer_factory(values):
    kind = values["scorer.kind"]
    if kind == "oracle":
        return lambda scene, idx: OracleScorer(scene, target_index=idx)
    if kind == "noisy":
        noise, seed = values["scorer.noise"], values["seed"]
        return lambda scene, idx: NoisyScorer(
            OracleScorer(scene, target_index=idx), noise_level=noise, seed=seed)
    if kind == "remote":
        endpoint = values["scorer.endpoint"] or os.environ.get("NAV_GATEWAY_URL", "")
        if not endpoint:
            raise ConfigError("remote scorer needs --endpoint or NAV_GATEWAY_URL",
                              "scorer.endpoint")
        deadline = values["scorer.deadline_ms"]
        return lambda scene, idx: RemoteScorer(endpoint, deadline_ms=deadline)
    raise ConfigError(f"unknown scorer kind '{kind}'", "scorer.kind")


def cmd_run(args) -> int:
    values = _load_values(args)
    cfg = build_runner_config(values)
    scene = load_scene_file(args.scene)
    factory = _scorer_factory(values)
    if args.lifelong:
        results = run_lifelong(scene, cfg, factory)
    else:
        results = [run_episode(scene, cfg, factory(scene, 0))]
    if args.trace:
        base, dot, ext = args.trace.rpartition(".")
        for i, result in enumerate(results):
            path = args.trace if len(results) == 1 else f"{base}.{i}{dot}{ext}"
            write_trace(result, path)
    payload = [r.metrics() for r in results]
    print(json.dumps(payload[0] if len(payload) == 1 else payload, indent=2,
                     sort_keys=True))
    return 0 if all(r.success for r in results) else 2


def cmd_bench(args) -> int:
    values = _load_values(args)
    cfg = build_runner_config(values)
    items = [(os.path.basename(path), load_scene_file(path)) for path in args.scenes]
    suite = run_suite(items, cfg, _scorer_factory(values), jobs=args.jobs)
    if args.json:
        print(json.dumps(suite.as_json(), indent=2, sort_keys=True))
    else:
        print(format_table(suite), end="")
    return 0


def cmd_validate(args) -> int:
    failures = 0
    for path in args.scenes:
        try:
            scene = load_scene_file(path)
        except (SceneFormatError, OSError) as exc:
            print(f"{path}: {exc}", file=sys.stderr)
            failures += 1
            continue
        print(f"{path}: ok ({scene.width}x{scene.height}, "
              f"{len(scene.objects)} objects, {len(scene.targets)} targets, "
              f"hash {scene_hash(scene)})")
    return 1 if failures else 0


def cmd_render(args) -> int:
    scene = load_scene_file(args.scene)
    trace = []
    with open(args.trace, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                trace.append(json.loads(line))
    if args.config or args.set:
        values = _load_values(args)
        cfg = build_runner_config(values)
        if trace and trace[0].get("config") != cfg.fingerprint():
            print(f"config fingerprint mismatch: trace has "
                  f"{trace[0].get('config')}, config gives {cfg.fingerprint()}",
                  file=sys.stderr)
            return 1
    svg = render_svg(scene, trace)
    with open(args.output, "w", encoding="utf-8") as fh:
        fh.write(svg)
    print(f"wrote {args.output}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="frontier-nav",
                     description="Exploration-driven object navigation.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="config file of dotted key = value lines")
        p.add_argument("--set", action="append", metavar="KEY=VALUE",
                       help="override one config key")
        p.add_argument("--seed", type=int, help="override the run seed")
        p.add_argument("--scorer", choices=("oracle", "noisy", "remote"))
        p.add_argument("--endpoint", help="gateway URL for the remote scorer")

    p_run = sub.add_parser("run", help="run one episode on a scene")
    p_run.add_argument("scene")
    p_run.add_argument("--trace", help="write a JSONL trace to this path")
    p_run.add_argument("--lifelong", action="store_true",
                       help="visit every TARGET of the scene in order")
    common(p_run)
    p_run.set_defaults(func=cmd_run)

    p_bench = sub.add_parser("bench", help="run a suite of scenes")
    p_bench.add_argument("scenes", nargs="+")
    p_bench.add_argument("--jobs", type=int, default=1)
    p_bench.add_argument("--json", action="store_true")
    common(p_bench)
    p_bench.set_defaults(func=cmd_bench)

    p_val = sub.add_parser("validate", help="check scene files")
    p_val.add_argument("scenes", nargs="+")
    p_val.set_defaults(func=cmd_validate)

    p_render = sub.add_parser("render", help="render a trace to SVG")
    p_render.add_argument("trace")
    p_render.add_argument("scene")
    p_render.add_argument("-o", "--output", required=True)
    common(p_render)
    p_render.set_defaults(func=cmd_render)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, SceneFormatError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
