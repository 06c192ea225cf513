"""Command-line entry point.

Subcommands wire ingestion -> estimation -> tracking -> evaluation, plus
dataset simulation, parameter sweeps, and throughput benchmarking.  Exit
codes: 0 success, 1 I/O failure, 2 validation failure.
"""

from __future__ import annotations

import argparse
import gc
import json
import math
import sys
import time
from dataclasses import replace
from pathlib import Path

from .errors import DomainError, ParseError
from .geodesy import AxisConvention, GeoPoint
from .camera import CameraIntrinsics
from .evaluation import emit_report, score
from .ingestion import (
    DETECTIONS_NATIVE_CSV,
    DETECTIONS_YOLO,
    join_frames,
    parse_detections,
    read_telemetry,
    read_truth,
)
from .pipeline import count_unestimable, estimate_frames, write_fixes_csv
from .simulator import (
    DroneKeyframe,
    RobotKeyframe,
    RobotPath,
    ScenarioConfig,
    generate,
    load_scenario,
    sweep,
    write_sweep_csv,
    write_sweep_summary_csv,
)
from .tracking import GateConfig, associate, read_tracks_csv, write_tracks_csv

_CONVENTIONS = {c.value: c for c in AxisConvention}

BENCH_FRAME_FLOOR = 3000


def _add_io_flags(sp: argparse.ArgumentParser) -> None:
    sp.add_argument("--telemetry", required=True, help="telemetry CSV/JSONL file")
    sp.add_argument("--detections", required=True,
                    help="detections CSV file or YOLO label directory")
    sp.add_argument("--detections-format", default=DETECTIONS_NATIVE_CSV,
                    choices=[DETECTIONS_NATIVE_CSV, DETECTIONS_YOLO])
    sp.add_argument("--lenient", action="store_true",
                    help="skip malformed data rows, counting them")
    sp.add_argument("--threads", type=int, default=0,
                    help="worker threads for the frame map (0 = serial)")


def _add_common_flags(sp: argparse.ArgumentParser) -> None:
    sp.add_argument("--out", required=True, help="output directory")
    sp.add_argument("--convention", default="corrected", choices=sorted(_CONVENTIONS),
                    help="axis pairing for meter-to-degree conversion")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="aquafix",
        description="Estimate GNSS positions of near-surface marine robots from "
                    "aerial drone telemetry and per-frame detections.")
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("estimate", help="per-detection position fixes")
    _add_io_flags(sp)
    _add_common_flags(sp)
    sp.set_defaults(func=cmd_estimate)

    sp = sub.add_parser("track", help="estimate and associate fixes into tracks")
    _add_io_flags(sp)
    _add_common_flags(sp)
    sp.add_argument("--gate-m", type=float, default=10.0)
    sp.add_argument("--max-coast-frames", type=int, default=90)
    sp.set_defaults(func=cmd_track)

    sp = sub.add_parser("evaluate", help="score tracks against recorded truth")
    sp.add_argument("--tracks", required=True, help="tracks.csv from the track command")
    sp.add_argument("--truth", required=True, help="truth CSV file")
    sp.add_argument("--fixes", default=None,
                    help="optional fixes.csv used to count unestimable detections")
    sp.add_argument("--match", action="append", default=[], metavar="LABEL=TRACK_ID",
                    help="explicit truth-to-track mapping (repeatable); default auto")
    sp.add_argument("--auto-gate-m", type=float, default=50.0)
    sp.add_argument("--format", default="csv", choices=["csv", "json"],
                    help="error series container")
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_evaluate)

    sp = sub.add_parser("simulate", help="generate a synthetic dataset")
    sp.add_argument("--scenario", required=True, help="scenario JSON config")
    sp.add_argument("--seed", type=int, default=None, help="override the config seed")
    sp.add_argument("--labels-format", default=DETECTIONS_NATIVE_CSV,
                    choices=[DETECTIONS_NATIVE_CSV, DETECTIONS_YOLO])
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("sweep", help="Monte Carlo noise-parameter sweep")
    sp.add_argument("--scenario", required=True)
    sp.add_argument("--param", action="append", required=True,
                    metavar="PATH=V1,V2,...",
                    help="grid axis, e.g. noise.gnss_sigma_m=0.5,1.5,3.0 (repeatable)")
    sp.add_argument("--replicates", type=int, default=5)
    sp.add_argument("--seed", type=int, default=None)
    sp.add_argument("--gate-m", type=float, default=10.0)
    sp.add_argument("--out", required=True)
    sp.add_argument("--convention", default="corrected", choices=sorted(_CONVENTIONS))
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("bench", help="math-pipeline throughput benchmark")
    sp.add_argument("--dataset", default=None,
                    help="existing dataset directory; default benches synthetic "
                         "single- and three-robot variants")
    sp.add_argument("--frames", type=int, default=BENCH_FRAME_FLOOR,
                    help="frames for the synthetic variants")
    sp.add_argument("--repetitions", type=int, default=3)
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_bench)
    return parser


def _convention(args) -> AxisConvention:
    return _CONVENTIONS[args.convention]


def _outdir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _load_bundles(args):
    skipped: list[ParseError] = []
    on_skip = skipped.append if args.lenient else None
    telemetry = read_telemetry(args.telemetry, lenient=args.lenient, on_skip=on_skip)
    intr = telemetry[0].intrinsics() if telemetry else None
    detections = parse_detections(args.detections, args.detections_format, intr,
                                  lenient=args.lenient, on_skip=on_skip)
    bundles = join_frames(telemetry, detections)
    if skipped:
        print(f"skipped {len(skipped)} malformed rows", file=sys.stderr)
    return bundles


def cmd_estimate(args) -> int:
    bundles = _load_bundles(args)
    results = estimate_frames(bundles, _convention(args), threads=args.threads)
    out = _outdir(args)
    with open(out / "fixes.csv", "w", encoding="utf-8", newline="") as handle:
        write_fixes_csv(results, handle)
    fixes = sum(len(r.fixes) for r in results)
    failures = sum(len(r.failures) for r in results)
    print(f"estimated {fixes} fixes over {len(results)} frames "
          f"({failures} unestimable)", file=sys.stderr)
    return 0


def cmd_track(args) -> int:
    bundles = _load_bundles(args)
    results = estimate_frames(bundles, _convention(args), threads=args.threads)
    cfg = GateConfig(gate_m=args.gate_m, max_coast_frames=args.max_coast_frames)
    tracks = associate([list(r.fixes) for r in results], cfg)
    out = _outdir(args)
    with open(out / "tracks.csv", "w", encoding="utf-8", newline="") as handle:
        write_tracks_csv(tracks, handle)
    print(f"{len(tracks)} tracks over {len(results)} frames", file=sys.stderr)
    return 0


def cmd_evaluate(args) -> int:
    with open(args.tracks, encoding="utf-8") as handle:
        tracks = read_tracks_csv(handle, source=args.tracks)
    truth = read_truth(args.truth)
    matching: str | dict[str, int] = "auto"
    if args.match:
        matching = {}
        for item in args.match:
            label, _, track_id = item.partition("=")
            if not track_id:
                raise DomainError(f"--match expects LABEL=TRACK_ID, got {item!r}")
            matching[label] = int(track_id)
    unestimable = 0
    if args.fixes:
        with open(args.fixes, encoding="utf-8") as handle:
            unestimable = count_unestimable(handle)
    report = score(tracks, truth, matching, auto_gate_m=args.auto_gate_m,
                   frames_unestimable=unestimable)
    emit_report(report, _outdir(args), args.format)
    print(f"evaluated {report.frames_evaluated} fixes: mean "
          f"{report.overall.mean_m:.3f} m, median {report.overall.median_m:.3f} m",
          file=sys.stderr)
    return 0


def cmd_simulate(args) -> int:
    cfg = load_scenario(args.scenario)
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
    dataset = generate(cfg, _outdir(args), labels_format=args.labels_format)
    print(f"wrote {len(dataset.telemetry)} frames, "
          f"{len(dataset.detections)} detections", file=sys.stderr)
    for warning in dataset.manifest["warnings"]:
        print(f"warning: {warning}", file=sys.stderr)
    return 0


def _parse_grid(items: list[str]) -> dict[str, list]:
    grid: dict[str, list] = {}
    for item in items:
        path, _, text = item.partition("=")
        if not text:
            raise DomainError(f"--param expects PATH=V1,V2,..., got {item!r}")
        values = []
        for piece in text.split(","):
            try:
                values.append(json.loads(piece))
            except json.JSONDecodeError:
                values.append(piece)
        grid[path] = values
    return grid


def cmd_sweep(args) -> int:
    cfg = load_scenario(args.scenario)
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
    grid = _parse_grid(args.param)
    rows, summaries = sweep(cfg, grid, args.replicates,
                            convention=_CONVENTIONS[args.convention],
                            gate=GateConfig(gate_m=args.gate_m))
    out = _outdir(args)
    names = list(grid)
    with open(out / "sweep.csv", "w", encoding="utf-8", newline="") as handle:
        write_sweep_csv(rows, names, handle)
    with open(out / "sweep_summary.csv", "w", encoding="utf-8", newline="") as handle:
        write_sweep_summary_csv(summaries, names, handle)
    failed = sum(1 for row in rows if row["error"])
    print(f"{len(rows)} sweep runs ({failed} failed)", file=sys.stderr)
    return 0


def _bench_scenario(robots: int, frames: int, seed: int) -> ScenarioConfig:
    spots = ((0.0, 45.0), (-25.0, 40.0), (25.0, 52.0))
    return ScenarioConfig(
        seed=seed,
        anchor=GeoPoint(13.19, -59.64),
        duration_frames=frames,
        drone_path=(DroneKeyframe(0.0, 0.0, 0.0, 60.0, 0.0, 35.0),),
        robot_paths=tuple(RobotPath(f"robot{i}", (RobotKeyframe(0.0, e, n),))
                          for i, (e, n) in enumerate(spots[:robots])),
        intrinsics=CameraIntrinsics(8.8, 13.2, 8.8, 1920, 1080),
    )


def _timed_once(fn) -> float:
    # Collection pauses would bill whichever variant happens to trigger
    # them, so garbage collection is suspended while the clock runs.
    was_enabled = gc.isenabled()
    gc.disable()
    try:
        start = time.perf_counter()
        fn()
        return time.perf_counter() - start
    finally:
        if was_enabled:
            gc.enable()


def run_bench(out_dir, frames: int = BENCH_FRAME_FLOOR, repetitions: int = 3,
              dataset_dir=None,
              detections_format: str = DETECTIONS_NATIVE_CSV) -> dict:
    """Benchmark the math pipeline; returns the bench.json payload.

    Without a dataset, synthesizes single-robot and three-robot variants of
    the requested length.  Math-only timing excludes parsing; a combined
    parse-plus-math figure is reported separately.  Repetitions are
    interleaved across variants (best-of), so drifting machine load cannot
    skew their ratio.
    """
    if frames < 1:
        raise DomainError("benchmark needs at least one frame")
    if repetitions < 1:
        raise DomainError("benchmark needs at least one repetition")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    variant_dirs: dict[str, Path] = {}
    if dataset_dir is not None:
        variant_dirs["dataset"] = Path(dataset_dir)
    else:
        for name, robots in (("single_robot", 1), ("three_robot", 3)):
            directory = out / "_work" / name
            generate(_bench_scenario(robots, frames, seed=7), directory)
            variant_dirs[name] = directory

    loaded: dict[str, dict] = {}
    for name, directory in variant_dirs.items():
        telemetry_path = directory / "telemetry.csv"
        detections_path = (directory / "labels"
                           if detections_format == DETECTIONS_YOLO
                           else directory / "detections.csv")
        telemetry = read_telemetry(telemetry_path)
        intr = telemetry[0].intrinsics() if telemetry else None
        detections = parse_detections(detections_path, detections_format, intr)
        bundles = join_frames(telemetry, detections)
        if not bundles:
            raise DomainError(f"dataset '{name}' has zero frames")
        if len(bundles) < BENCH_FRAME_FLOOR:
            print(f"warning: '{name}' has {len(bundles)} frames, below the "
                  f"{BENCH_FRAME_FLOOR}-frame averaging floor", file=sys.stderr)
        loaded[name] = {
            "bundles": bundles,
            "telemetry_path": telemetry_path,
            "detections_path": detections_path,
            "math_best": float("inf"),
            "full_best": float("inf"),
        }

    def parse_and_estimate(state):
        records = read_telemetry(state["telemetry_path"])
        found = parse_detections(state["detections_path"], detections_format,
                                 records[0].intrinsics() if records else None)
        estimate_frames(join_frames(records, found))

    for _ in range(repetitions):
        for state in loaded.values():
            state["math_best"] = min(
                state["math_best"],
                _timed_once(lambda: estimate_frames(state["bundles"])))
        for state in loaded.values():
            state["full_best"] = min(state["full_best"],
                                     _timed_once(lambda: parse_and_estimate(state)))

    payload: dict = {"repetitions": repetitions, "variants": {}}
    for name, state in loaded.items():
        bundles = state["bundles"]
        per_frame = state["math_best"] / len(bundles)
        payload["variants"][name] = {
            "frames": len(bundles),
            "detections": sum(len(b.detections) for b in bundles),
            "math_s_per_frame": per_frame,
            "math_fps": math.inf if per_frame == 0.0 else 1.0 / per_frame,
            "parse_plus_math_s_per_frame": state["full_best"] / len(bundles),
        }

    single = payload["variants"].get("single_robot")
    three = payload["variants"].get("three_robot")
    if single and three:
        payload["three_to_single_math_ratio"] = (
            three["math_s_per_frame"] / single["math_s_per_frame"])
    with open(out / "bench.json", "w", encoding="utf-8", newline="\n") as handle:
        json.dump(payload, handle, indent=2, sort_keys=True)
        handle.write("\n")
    return payload


def cmd_bench(args) -> int:
    payload = run_bench(args.out, frames=args.frames, repetitions=args.repetitions,
                        dataset_dir=args.dataset)
    for name, stats in payload["variants"].items():
        print(f"{name}: {stats['math_fps']:.0f} frames/s math-only "
              f"({stats['frames']} frames)", file=sys.stderr)
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
