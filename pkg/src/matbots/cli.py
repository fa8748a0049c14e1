"""Command line entry points: run, bench, replay, serve."""

from __future__ import annotations

import argparse
import asyncio
import json
import math
import os
import sys
import time
from pathlib import Path

from .config import ConfigError, EngineConfig, load_config
from .engine import MetricsReport, run_scenario
from .hand import TrajectoryError
from .protocol import encode_message
from .scenario import ScenarioError, ScenarioSpec, load_scenario
from .scene import SceneError
from .trace import TraceError, TraceWriter, iter_ticks, read_trace, tick_to_world_state

USER_ERRORS = (ScenarioError, ConfigError, SceneError, TrajectoryError, TraceError)


def _fail(msg: str, code: int = 2) -> int:
    print(f"error: {msg}", file=sys.stderr)
    return code


def _check_no_nan(report: MetricsReport) -> None:
    for key, value in report.to_dict().items():
        if isinstance(value, float) and math.isnan(value):
            raise ValueError(f"metric {key} is NaN")
        if isinstance(value, list) and any(
                isinstance(v, float) and math.isnan(v) for v in value):
            raise ValueError(f"metric {key} contains NaN")


def _write_metrics(report: MetricsReport, out: Path, stem: str) -> Path:
    out.mkdir(parents=True, exist_ok=True)
    path = out / f"{stem}.json"
    path.write_text(json.dumps(report.to_dict(), indent=2) + "\n")
    csv_path = out / f"{stem}.csv"
    doc = report.to_dict()
    scalars = {k: v for k, v in doc.items() if not isinstance(v, list)}
    csv_path.write_text(",".join(scalars) + "\n"
                        + ",".join(str(v) for v in scalars.values()) + "\n")
    if report.reach_times:
        (out / f"{stem}_reach_times.csv").write_text(
            "trial,reach_time_s\n"
            + "".join(f"{i},{t!r}\n" for i, t in enumerate(report.reach_times)))
    return path


def cmd_run(args) -> int:
    try:
        spec = load_scenario(args.scenario)
        if args.robots is not None:
            spec.robot_count = args.robots
        if args.seed is not None:
            spec.seed = args.seed
        if args.scene is not None:
            spec.scene_path = args.scene
        if args.trajectory is not None:
            spec.trajectory_path = args.trajectory
            spec.generator = None
        spec.validate()
        base = load_config(args.config) if args.config else None
    except USER_ERRORS as exc:
        return _fail(str(exc))

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    writer = TraceWriter(out / "trace.csv", meta={
        "kind": spec.kind, "robots": spec.robot_count, "seed": spec.seed,
    }) if args.trace else None
    try:
        report = run_scenario(
            spec, base,
            on_tick=(lambda eng: writer.write_snapshot(eng.snapshot())) if writer else None)
    finally:
        if writer:
            writer.close()

    try:
        _check_no_nan(report)
    except ValueError as exc:
        _fail(str(exc), 1)
        return 1
    metrics_path = _write_metrics(report, out, "metrics")
    print(f"metrics: {metrics_path}")

    if args.figures and writer is not None:
        from . import report as rpt
        _meta, rows = read_trace(out / "trace.csv")
        cfg = spec.build_config(base)
        rpt.trajectory_figure(rows, (0.55, 0.55), out / "trajectories.png")
        rpt.separation_figure(rows, 2 * cfg.rvo.agent_radius, out / "separation.png")
        rpt.height_figure(rows, out / "heights.png")
        print(f"figures: {out}/trajectories.png separation.png heights.png")
    if report.collision_count > 0:
        _fail(f"collision ticks: {report.collision_count}", 1)
        return 1
    return 0


def cmd_bench(args) -> int:
    try:
        counts = [int(tok) for tok in args.robots.split(",") if tok]
        if not counts or any(c < 1 for c in counts):
            raise ValueError
    except ValueError:
        return _fail("--robots must be a comma list of positive integers")
    try:
        base = load_config(args.config) if args.config else None
    except USER_ERRORS as exc:
        return _fail(str(exc))

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    reports: dict[int, MetricsReport] = {}
    print(f"{'robots':>7}  {'mean reach [s]':>15}  {'trials':>7}  {'timeouts':>8}  {'wall [s]':>8}")
    for n in counts:
        spec = ScenarioSpec(kind="reach-bench", robot_count=n, trials=args.trials,
                            trial_period=args.trial_period, seed=args.seed,
                            targets_per_trial=args.targets_per_trial)
        t0 = time.perf_counter()
        rep = run_scenario(spec, base)
        wall = time.perf_counter() - t0
        reports[n] = rep
        _write_metrics(rep, out, f"bench_{n}robots")
        mean = f"{rep.mean_reach_time:.3f}" if rep.mean_reach_time is not None else "-"
        print(f"{n:>7}  {mean:>15}  {len(rep.reach_times):>7}  {rep.reach_timeouts:>8}  {wall:>8.1f}")

    rows = ["robots,mean_reach_time_s,trials,timeouts"]
    for n in counts:
        rep = reports[n]
        rows.append(f"{n},{rep.mean_reach_time!r},{len(rep.reach_times)},{rep.reach_timeouts}")
    (out / "bench.csv").write_text("\n".join(rows) + "\n")
    if args.figures:
        from . import report as rpt
        rpt.bench_figure(reports, out / "bench.png")
        print(f"figure: {out}/bench.png")
    return 0


def cmd_replay(args) -> int:
    try:
        _meta, rows = read_trace(args.trace)
    except TraceError as exc:
        return _fail(str(exc), 1)
    if args.speed <= 0:
        return _fail("--speed must be positive")
    ticks = list(iter_ticks(rows))
    if args.limit is not None:
        ticks = ticks[:args.limit]
    start = time.perf_counter()
    t0 = ticks[0][1][0].time if ticks else 0.0
    try:
        for tick, tick_rows in ticks:
            target = (tick_rows[0].time - t0) / args.speed
            delay = target - (time.perf_counter() - start)
            if delay > 0:
                time.sleep(delay)
            state = tick_to_world_state(tick, tick_rows)
            sys.stdout.write(encode_message("world_state", state, tick=tick) + "\n")
            sys.stdout.flush()
    except BrokenPipeError:
        # downstream consumer (head, UI pipe) closed: not an error
        devnull = os.open(os.devnull, os.O_WRONLY)
        os.dup2(devnull, sys.stdout.fileno())
    return 0


def cmd_serve(args) -> int:
    try:
        cfg = load_config(args.config) if args.config else EngineConfig()
        if args.robots is not None or args.seed is not None:
            doc = cfg.to_dict()
            if args.robots is not None:
                doc["robot_count"] = args.robots
            if args.seed is not None:
                doc["seed"] = args.seed
            cfg = EngineConfig.from_dict(doc)
        from .server import SessionServer
        server = SessionServer(cfg, scene_path=args.scene, host=args.host, port=args.port)
    except USER_ERRORS as exc:
        return _fail(str(exc))
    print(f"serving on ws://{args.host}:{args.port} "
          f"(scene: {args.scene or 'none'}, robots: {cfg.robot_count})")
    try:
        asyncio.run(server.run())
    except KeyboardInterrupt:
        pass
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="matbots",
                                description="Desk-scale haptic robot swarm simulator")
    sub = p.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run a scenario file and write metrics")
    run_p.add_argument("scenario")
    run_p.add_argument("--out", default="matbots_out")
    run_p.add_argument("--config", default=None)
    run_p.add_argument("--robots", type=int, default=None)
    run_p.add_argument("--seed", type=int, default=None)
    run_p.add_argument("--scene", default=None, help="override the scenario's scene file")
    run_p.add_argument("--trajectory", default=None,
                       help="override the scenario's finger trajectory file")
    run_p.add_argument("--trace", action="store_true", help="write trace.csv")
    run_p.add_argument("--no-figures", dest="figures", action="store_false")
    run_p.set_defaults(func=cmd_run)

    bench_p = sub.add_parser("bench", help="randomized-target reach-time benchmark")
    bench_p.add_argument("--robots", default="1,3,7")
    bench_p.add_argument("--trials", type=int, default=100)
    bench_p.add_argument("--trial-period", type=float, default=5.0)
    bench_p.add_argument("--targets-per-trial", type=int, default=1)
    bench_p.add_argument("--seed", type=int, default=42)
    bench_p.add_argument("--out", default="matbots_out")
    bench_p.add_argument("--config", default=None)
    bench_p.add_argument("--no-figures", dest="figures", action="store_false")
    bench_p.set_defaults(func=cmd_bench)

    replay_p = sub.add_parser("replay", help="re-emit a recorded trace as world states")
    replay_p.add_argument("trace")
    replay_p.add_argument("--speed", type=float, default=1.0)
    replay_p.add_argument("--limit", type=int, default=None)
    replay_p.set_defaults(func=cmd_replay)

    serve_p = sub.add_parser("serve", help="live session service for the UI")
    serve_p.add_argument("--scene", default=None)
    serve_p.add_argument("--host", default="127.0.0.1")
    serve_p.add_argument("--port", type=int, default=8765)
    serve_p.add_argument("--config", default=None)
    serve_p.add_argument("--robots", type=int, default=None)
    serve_p.add_argument("--seed", type=int, default=None)
    serve_p.set_defaults(func=cmd_serve)

    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except USER_ERRORS as exc:
        return _fail(str(exc))


if __name__ == "__main__":
    sys.exit(main())
