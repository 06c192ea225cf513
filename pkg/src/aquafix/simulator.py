"""Deterministic synthetic field-trial generator.

Drone and robot trajectories come from linearly interpolated keyframes;
detections are rendered through the exact pinhole projection from the true
(noise-free) geometry; sensor noise is then injected from per-stream seeded
generators, so adding one noise stream never perturbs the draws of another.
Output files use the toolkit's native formats, and identical configs
produce byte-identical datasets.

Noise model per the observed error sources: Gaussian jitter on the drone
GNSS fix, heading, and reported altitude; a constant-plus-drift tide term
on altitude; Gaussian jitter on detection centers; Gaussian misalignment on
recorded truth; and a Bernoulli per-detection dropout.
"""

from __future__ import annotations

import hashlib
import itertools
import json
import math
import random
import statistics
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .camera import CameraIntrinsics, PixelPoint
from .errors import BehindCameraError, DomainError, OutOfFrameError
from .evaluation import score
from .geodesy import AxisConvention, GeoPoint
from .ingestion import (
    DETECTIONS_NATIVE_CSV,
    DETECTIONS_YOLO,
    DetectionRecord,
    TelemetryRecord,
    TruthRecord,
    join_frames,
    write_detections_csv,
    write_telemetry_csv,
    write_truth_csv,
    write_yolo_labels,
)
from .oracle import EnuAnchor, LocalScene, project_to_pixel
from .pipeline import estimate_frames
from .tracking import GateConfig, associate

TRAJECTORY_COLUMNS = ("frame_id", "robot_label", "lat_deg", "lon_deg")

# Apparent target extent used to synthesize bounding boxes.
_ROBOT_LENGTH_M = 0.65
_ROBOT_HEIGHT_M = 0.35


@dataclass(frozen=True)
class DroneKeyframe:
    time_s: float
    east_m: float
    north_m: float
    altitude_m: float
    heading_deg: float
    depression_deg: float


@dataclass(frozen=True)
class RobotKeyframe:
    time_s: float
    east_m: float
    north_m: float


@dataclass(frozen=True)
class RobotPath:
    label: str
    keyframes: tuple[RobotKeyframe, ...]

    def __post_init__(self):
        if not self.label:
            raise DomainError("robot label must be non-empty")
        object.__setattr__(self, "keyframes", tuple(self.keyframes))
        if not self.keyframes:
            raise DomainError(f"robot '{self.label}' needs at least one keyframe")
        _require_sorted([k.time_s for k in self.keyframes], f"robot '{self.label}'")

    def moves(self) -> bool:
        head = self.keyframes[0]
        return any(abs(k.east_m - head.east_m) > 1e-9
                   or abs(k.north_m - head.north_m) > 1e-9 for k in self.keyframes)


@dataclass(frozen=True)
class NoiseModel:
    """Noise magnitudes; all default to zero (perfect sensors)."""

    gnss_sigma_m: float = 0.0
    heading_sigma_deg: float = 0.0
    altitude_sigma_m: float = 0.0
    tide_bias_m: float = 0.0
    tide_drift_m_per_min: float = 0.0
    pixel_sigma_px: float = 0.0
    truth_misalignment_sigma_m: float = 0.0
    detection_dropout_prob: float = 0.0

    def __post_init__(self):
        for name in ("gnss_sigma_m", "heading_sigma_deg", "altitude_sigma_m",
                     "pixel_sigma_px", "truth_misalignment_sigma_m"):
            if getattr(self, name) < 0.0:
                raise DomainError(f"{name} must be >= 0")
        if not 0.0 <= self.detection_dropout_prob <= 1.0:
            raise DomainError("detection_dropout_prob must lie in [0, 1]")


@dataclass(frozen=True)
class ScenarioConfig:
    seed: int
    anchor: GeoPoint
    duration_frames: int
    drone_path: tuple[DroneKeyframe, ...]
    robot_paths: tuple[RobotPath, ...]
    intrinsics: CameraIntrinsics
    fps: float = 30.0
    noise: NoiseModel = NoiseModel()

    def __post_init__(self):
        object.__setattr__(self, "drone_path", tuple(self.drone_path))
        object.__setattr__(self, "robot_paths", tuple(self.robot_paths))
        if self.duration_frames < 1:
            raise DomainError("duration_frames must be >= 1")
        if not self.fps > 0.0:
            raise DomainError("fps must be positive")
        if not self.drone_path:
            raise DomainError("drone_path needs at least one keyframe")
        _require_sorted([k.time_s for k in self.drone_path], "drone path")
        if not self.robot_paths:
            raise DomainError("at least one robot path is required")
        labels = [p.label for p in self.robot_paths]
        if len(set(labels)) != len(labels):
            raise DomainError("robot labels must be unique")


@dataclass(frozen=True)
class TrajectoryPoint:
    frame_id: int
    robot_label: str
    lat_deg: float
    lon_deg: float


@dataclass
class SimulatedDataset:
    """In-memory dataset; generate() serializes it to files."""

    config: ScenarioConfig
    telemetry: list[TelemetryRecord]
    detections: list[DetectionRecord]
    truth: list[TruthRecord]
    trajectories: list[TrajectoryPoint]
    manifest: dict


def _require_sorted(times: Sequence[float], what: str) -> None:
    if any(b < a for a, b in zip(times, times[1:])):
        raise DomainError(f"{what} keyframes must be time-sorted")


def derive_seed(master: int, *parts) -> int:
    """Stable 64-bit sub-seed from the master seed and a stream path."""
    payload = "|".join(str(p) for p in (master, *parts))
    digest = hashlib.sha256(payload.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")


def stream_rng(master: int, *parts) -> random.Random:
    """Independent generator for one (stream, frame, ...) slot."""
    return random.Random(derive_seed(master, *parts))


def _segment(times: Sequence[float], t: float) -> tuple[int, int, float]:
    if t <= times[0]:
        return 0, 0, 0.0
    if t >= times[-1]:
        last = len(times) - 1
        return last, last, 0.0
    hi = 1
    while times[hi] < t:
        hi += 1
    lo = hi - 1
    span = times[hi] - times[lo]
    return lo, hi, 0.0 if span == 0.0 else (t - times[lo]) / span


def _lerp(a: float, b: float, u: float) -> float:
    return a + (b - a) * u


def drone_state_at(path: Sequence[DroneKeyframe], t: float) -> DroneKeyframe:
    """Linearly interpolated drone keyframe at time t (clamped at the ends)."""
    lo, hi, u = _segment([k.time_s for k in path], t)
    a, b = path[lo], path[hi]
    return DroneKeyframe(
        time_s=t,
        east_m=_lerp(a.east_m, b.east_m, u),
        north_m=_lerp(a.north_m, b.north_m, u),
        altitude_m=_lerp(a.altitude_m, b.altitude_m, u),
        heading_deg=_lerp(a.heading_deg, b.heading_deg, u),
        depression_deg=_lerp(a.depression_deg, b.depression_deg, u),
    )


def robot_position_at(keyframes: Sequence[RobotKeyframe], t: float) -> tuple[float, float]:
    """(east_m, north_m) of a robot at time t (clamped at the ends)."""
    lo, hi, u = _segment([k.time_s for k in keyframes], t)
    a, b = keyframes[lo], keyframes[hi]
    return _lerp(a.east_m, b.east_m, u), _lerp(a.north_m, b.north_m, u)


def _apparent_box(scene: LocalScene, target_e: float, target_n: float,
                  intr: CameraIntrinsics) -> tuple[float, float]:
    east0, north0, up0 = scene.drone_enu
    distance = math.sqrt((target_e - east0) ** 2 + (target_n - north0) ** 2 + up0 ** 2)
    fx = intr.focal_length_mm * intr.image_width_px / intr.sensor_width_mm
    fy = intr.focal_length_mm * intr.image_height_px / intr.sensor_height_mm
    width = min(float(intr.image_width_px), max(2.0, fx * _ROBOT_LENGTH_M / distance))
    height = min(float(intr.image_height_px), max(2.0, fy * _ROBOT_HEIGHT_M / distance))
    return width, height


def simulate(cfg: ScenarioConfig) -> SimulatedDataset:
    """Build the full dataset in memory.

    True poses and robot positions are computed first; telemetry noise,
    detection rendering plus pixel noise, dropout, and truth misalignment
    are applied from per-stream sub-seeded generators.
    """
    anchor = EnuAnchor(cfg.anchor)
    noise = cfg.noise
    telemetry: list[TelemetryRecord] = []
    detections: list[DetectionRecord] = []
    trajectories: list[TrajectoryPoint] = []
    seen_in_frustum = {path.label: 0 for path in cfg.robot_paths}
    dropouts = 0
    off_frame = 0
    pushed_off_frame = 0
    behind_camera = 0
    altitude_clamped = 0

    for frame_id in range(cfg.duration_frames):
        t = frame_id / cfg.fps
        true_drone = drone_state_at(cfg.drone_path, t)

        rng = stream_rng(cfg.seed, "gnss", frame_id)
        east = true_drone.east_m + rng.gauss(0.0, noise.gnss_sigma_m)
        north = true_drone.north_m + rng.gauss(0.0, noise.gnss_sigma_m)
        position = anchor.to_geo(east, north)
        heading = (true_drone.heading_deg
                   + stream_rng(cfg.seed, "heading", frame_id)
                   .gauss(0.0, noise.heading_sigma_deg)) % 360.0
        altitude = (true_drone.altitude_m + noise.tide_bias_m
                    + noise.tide_drift_m_per_min * (t / 60.0)
                    + stream_rng(cfg.seed, "altitude", frame_id)
                    .gauss(0.0, noise.altitude_sigma_m))
        if altitude <= 0.0:
            altitude = 0.1
            altitude_clamped += 1
        telemetry.append(TelemetryRecord(
            frame_id=frame_id, timestamp_s=t,
            lat_deg=position.lat_deg, lon_deg=position.lon_deg,
            altitude_m=altitude, heading_deg=heading,
            depression_deg=true_drone.depression_deg,
            focal_length_mm=cfg.intrinsics.focal_length_mm,
            sensor_width_mm=cfg.intrinsics.sensor_width_mm,
            sensor_height_mm=cfg.intrinsics.sensor_height_mm,
            image_width_px=cfg.intrinsics.image_width_px,
            image_height_px=cfg.intrinsics.image_height_px,
        ))

        scene = LocalScene(
            drone_enu=(true_drone.east_m, true_drone.north_m, true_drone.altitude_m),
            heading_rad=math.radians(true_drone.heading_deg),
            depression_rad=math.radians(true_drone.depression_deg),
            intrinsics=cfg.intrinsics,
        )
        for path in cfg.robot_paths:
            robot_e, robot_n = robot_position_at(path.keyframes, t)
            robot_geo = anchor.to_geo(robot_e, robot_n)
            trajectories.append(TrajectoryPoint(frame_id, path.label,
                                                robot_geo.lat_deg, robot_geo.lon_deg))
            try:
                pixel = project_to_pixel(scene, (robot_e, robot_n))
            except BehindCameraError:
                behind_camera += 1
                continue
            except OutOfFrameError:
                off_frame += 1
                continue
            seen_in_frustum[path.label] += 1
            if (stream_rng(cfg.seed, "dropout", frame_id, path.label).random()
                    < noise.detection_dropout_prob):
                dropouts += 1
                continue
            rng = stream_rng(cfg.seed, "pixel", frame_id, path.label)
            x = pixel.x_px + rng.gauss(0.0, noise.pixel_sigma_px)
            y = pixel.y_px + rng.gauss(0.0, noise.pixel_sigma_px)
            if not (0.0 <= x <= cfg.intrinsics.image_width_px
                    and 0.0 <= y <= cfg.intrinsics.image_height_px):
                pushed_off_frame += 1
                continue
            width, height = _apparent_box(scene, robot_e, robot_n, cfg.intrinsics)
            confidence = stream_rng(cfg.seed, "confidence", frame_id,
                                    path.label).uniform(0.5, 1.0)
            detections.append(DetectionRecord(frame_id, 0, PixelPoint(x, y),
                                              width, height, confidence))

    truth: list[TruthRecord] = []
    for path in cfg.robot_paths:
        start_e, start_n = robot_position_at(path.keyframes, 0.0)
        rng = stream_rng(cfg.seed, "truth", path.label)
        start_e += rng.gauss(0.0, noise.truth_misalignment_sigma_m)
        start_n += rng.gauss(0.0, noise.truth_misalignment_sigma_m)
        geo = anchor.to_geo(start_e, start_n)
        truth.append(TruthRecord(path.label, geo.lat_deg, geo.lon_deg, 0,
                                 cfg.duration_frames - 1))

    warnings_list = [f"robot '{label}' never inside the camera frustum"
                     for label, count in seen_in_frustum.items() if count == 0]
    warnings_list += [f"robot '{path.label}' moves; its truth record uses the "
                      "start-of-scenario position"
                      for path in cfg.robot_paths if path.moves()]
    manifest = {
        "seed": cfg.seed,
        "frames": cfg.duration_frames,
        "fps": cfg.fps,
        "robots": [path.label for path in cfg.robot_paths],
        "in_frustum": dict(sorted(seen_in_frustum.items())),
        "detections_emitted": len(detections),
        "dropouts": dropouts,
        "off_frame": off_frame,
        "pushed_off_frame": pushed_off_frame,
        "behind_camera": behind_camera,
        "altitude_clamped": altitude_clamped,
        "warnings": warnings_list,
    }
    return SimulatedDataset(cfg, telemetry, detections, truth, trajectories, manifest)


def write_trajectories_csv(points: Iterable[TrajectoryPoint], stream) -> None:
    import csv

    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(TRAJECTORY_COLUMNS)
    for p in points:
        writer.writerow([str(p.frame_id), p.robot_label, repr(p.lat_deg),
                         repr(p.lon_deg)])


def generate(cfg: ScenarioConfig, out_dir,
             labels_format: str = DETECTIONS_NATIVE_CSV) -> SimulatedDataset:
    """Simulate and write the dataset files under out_dir.

    Writes telemetry.csv, detections.csv (or labels/ in the YOLO format),
    truth.csv, ground_truth_trajectories.csv, and manifest.json.
    """
    dataset = simulate(cfg)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "telemetry.csv", "w", encoding="utf-8", newline="") as handle:
        write_telemetry_csv(dataset.telemetry, handle)
    if labels_format == DETECTIONS_NATIVE_CSV:
        with open(out / "detections.csv", "w", encoding="utf-8", newline="") as handle:
            write_detections_csv(dataset.detections, handle)
    elif labels_format == DETECTIONS_YOLO:
        write_yolo_labels(dataset.detections, out / "labels", cfg.intrinsics)
    else:
        raise DomainError(f"unknown labels format '{labels_format}'")
    with open(out / "truth.csv", "w", encoding="utf-8", newline="") as handle:
        write_truth_csv(dataset.truth, handle)
    with open(out / "ground_truth_trajectories.csv", "w", encoding="utf-8",
              newline="") as handle:
        write_trajectories_csv(dataset.trajectories, handle)
    with open(out / "manifest.json", "w", encoding="utf-8", newline="\n") as handle:
        json.dump(dataset.manifest, handle, indent=2, sort_keys=True)
        handle.write("\n")
    return dataset


# --- scenario config (de)serialization -------------------------------------

def scenario_to_dict(cfg: ScenarioConfig) -> dict:
    return {
        "seed": cfg.seed,
        "anchor": {"lat_deg": cfg.anchor.lat_deg, "lon_deg": cfg.anchor.lon_deg},
        "duration_frames": cfg.duration_frames,
        "fps": cfg.fps,
        "intrinsics": {
            "focal_length_mm": cfg.intrinsics.focal_length_mm,
            "sensor_width_mm": cfg.intrinsics.sensor_width_mm,
            "sensor_height_mm": cfg.intrinsics.sensor_height_mm,
            "image_width_px": cfg.intrinsics.image_width_px,
            "image_height_px": cfg.intrinsics.image_height_px,
        },
        "drone_path": [vars(k).copy() for k in cfg.drone_path],
        "robot_paths": [{"label": p.label,
                         "keyframes": [vars(k).copy() for k in p.keyframes]}
                        for p in cfg.robot_paths],
        "noise": vars(cfg.noise).copy(),
    }


def _pick(obj: Mapping, allowed: tuple[str, ...], what: str) -> dict:
    for key in obj:
        if key not in allowed:
            raise DomainError(f"unknown key '{key}' in {what}")
    return dict(obj)


def scenario_from_dict(data: Mapping) -> ScenarioConfig:
    top = _pick(data, ("seed", "anchor", "duration_frames", "fps", "intrinsics",
                       "drone_path", "robot_paths", "noise"), "scenario")
    anchor = _pick(top["anchor"], ("lat_deg", "lon_deg"), "anchor")
    noise = _pick(top.get("noise", {}), tuple(vars(NoiseModel()).keys()), "noise")
    return ScenarioConfig(
        seed=int(top["seed"]),
        anchor=GeoPoint(**anchor),
        duration_frames=int(top["duration_frames"]),
        fps=float(top.get("fps", 30.0)),
        intrinsics=CameraIntrinsics(**_pick(
            top["intrinsics"],
            ("focal_length_mm", "sensor_width_mm", "sensor_height_mm",
             "image_width_px", "image_height_px"), "intrinsics")),
        drone_path=tuple(DroneKeyframe(**_pick(
            k, ("time_s", "east_m", "north_m", "altitude_m", "heading_deg",
                "depression_deg"), "drone keyframe")) for k in top["drone_path"]),
        robot_paths=tuple(RobotPath(
            label=p["label"],
            keyframes=tuple(RobotKeyframe(**_pick(
                k, ("time_s", "east_m", "north_m"), "robot keyframe"))
                for k in p["keyframes"]))
            for p in top["robot_paths"]),
        noise=NoiseModel(**noise),
    )


def load_scenario(path) -> ScenarioConfig:
    with open(path, encoding="utf-8") as handle:
        return scenario_from_dict(json.load(handle))


def save_scenario(cfg: ScenarioConfig, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        json.dump(scenario_to_dict(cfg), handle, indent=2)
        handle.write("\n")


# --- parameter sweeps -------------------------------------------------------

SWEEP_STATS = ("frames_evaluated", "median_m", "mean_m", "rms_m", "min_m", "max_m",
               "p95_m")


def _with_param(obj, path: str, value):
    head, _, rest = path.partition(".")
    if not hasattr(obj, head):
        raise DomainError(f"unknown sweep parameter '{path}'")
    if rest:
        return replace(obj, **{head: _with_param(getattr(obj, head), rest, value)})
    return replace(obj, **{head: value})


def sweep(base_cfg: ScenarioConfig, grid: Mapping[str, Sequence], replicates: int, *,
          convention: AxisConvention = AxisConvention.CORRECTED,
          gate: GateConfig = GateConfig(),
          auto_gate_m: float = 50.0) -> tuple[list[dict], list[dict]]:
    """Monte Carlo study over a parameter grid.

    grid maps dotted config paths (for example "noise.gnss_sigma_m") to
    value lists; cells are their cartesian product in the given order.
    Each (cell, replicate) runs simulate -> estimate -> associate -> score
    with a derived sub-seed.  Per-cell failures land in the row's error
    column without aborting the sweep.

    Returns:
        (rows, cell_summaries): one row per (cell, replicate), and one
        aggregate row per cell over its successful replicates.
    """
    if not grid or replicates < 1:
        raise DomainError("sweep needs a non-empty grid and replicates >= 1")
    names = list(grid)
    rows: list[dict] = []
    for cell_index, combo in enumerate(itertools.product(*(grid[n] for n in names))):
        for replicate in range(replicates):
            cfg = base_cfg
            for name, value in zip(names, combo):
                cfg = _with_param(cfg, name, value)
            cfg = replace(cfg, seed=derive_seed(base_cfg.seed, "sweep", cell_index,
                                                replicate))
            row = {"cell_index": cell_index, "replicate": replicate,
                   **dict(zip(names, combo))}
            try:
                dataset = simulate(cfg)
                bundles = join_frames(dataset.telemetry, dataset.detections)
                results = estimate_frames(bundles, convention)
                unestimable = sum(len(r.failures) for r in results)
                tracks = associate([list(r.fixes) for r in results], gate,
                                   anchor=cfg.anchor)
                report = score(tracks, dataset.truth, "auto", auto_gate_m=auto_gate_m,
                               frames_unestimable=unestimable)
                if report.frames_evaluated == 0:
                    raise DomainError("no frames were evaluated")
                row.update(
                    frames_evaluated=report.frames_evaluated,
                    median_m=report.overall.median_m, mean_m=report.overall.mean_m,
                    rms_m=report.overall.rms_m, min_m=report.overall.min_m,
                    max_m=report.overall.max_m, p95_m=report.overall.p95_m, error="")
            except Exception as exc:  # cell isolation is the contract here
                row.update({name: "" for name in SWEEP_STATS})
                row["error"] = f"{type(exc).__name__}: {exc}"
            rows.append(row)

    summaries: list[dict] = []
    for cell_index in sorted({row["cell_index"] for row in rows}):
        cell_rows = [r for r in rows if r["cell_index"] == cell_index]
        ok = [r for r in cell_rows if not r["error"]]
        summary = {"cell_index": cell_index,
                   **{name: cell_rows[0][name] for name in names},
                   "replicates": len(cell_rows), "replicates_ok": len(ok)}
        if ok:
            summary["median_m"] = statistics.median(r["median_m"] for r in ok)
            summary["mean_m"] = statistics.fmean(r["mean_m"] for r in ok)
            summary["max_m"] = max(r["max_m"] for r in ok)
        else:
            summary.update(median_m="", mean_m="", max_m="")
        summaries.append(summary)
    return rows, summaries


def write_sweep_csv(rows: list[dict], names: Sequence[str], stream) -> None:
    import csv

    columns = ["cell_index", "replicate", *names, *SWEEP_STATS, "error"]
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_cell_text(row[c]) for c in columns])


def write_sweep_summary_csv(summaries: list[dict], names: Sequence[str],
                            stream) -> None:
    import csv

    columns = ["cell_index", *names, "replicates", "replicates_ok", "median_m",
               "mean_m", "max_m"]
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(columns)
    for summary in summaries:
        writer.writerow([_cell_text(summary[c]) for c in columns])


def _cell_text(value) -> str:
    return repr(value) if isinstance(value, float) else str(value)
