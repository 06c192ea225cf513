"""Shared builders for simulator-backed tests."""

from __future__ import annotations

import pytest

from aquafix import (
    AxisConvention,
    CameraIntrinsics,
    GateConfig,
    GeoPoint,
    NoiseModel,
    associate,
    join_frames,
    score,
)
from aquafix.pipeline import estimate_frames
from aquafix.simulator import DroneKeyframe, RobotKeyframe, RobotPath, ScenarioConfig

ANCHOR = GeoPoint(13.19, -59.64)


def make_intrinsics() -> CameraIntrinsics:
    return CameraIntrinsics(focal_length_mm=8.8, sensor_width_mm=13.2,
                            sensor_height_mm=8.8, image_width_px=1920,
                            image_height_px=1080)


def make_hover_scenario(*, seed=1, frames=100, robots=((0.0, 28.867513459481287),),
                        labels=None, altitude=50.0, heading=0.0, depression=30.0,
                        noise=NoiseModel(), anchor=ANCHOR, fps=30.0) -> ScenarioConfig:
    """Static drone hovering over static robots given as (east_m, north_m)."""
    paths = []
    for index, (east, north) in enumerate(robots):
        label = labels[index] if labels else f"robot{index}"
        paths.append(RobotPath(label, (RobotKeyframe(0.0, east, north),)))
    return ScenarioConfig(
        seed=seed,
        anchor=anchor,
        duration_frames=frames,
        drone_path=(DroneKeyframe(0.0, 0.0, 0.0, altitude, heading, depression),),
        robot_paths=tuple(paths),
        intrinsics=make_intrinsics(),
        fps=fps,
        noise=noise,
    )


def run_dataset(dataset, convention=AxisConvention.CORRECTED, gate=GateConfig()):
    """simulate() output -> (tracks, report) via the in-memory pipeline."""
    bundles = join_frames(dataset.telemetry, dataset.detections)
    results = estimate_frames(bundles, convention)
    unestimable = sum(len(r.failures) for r in results)
    tracks = associate([list(r.fixes) for r in results], gate,
                       anchor=dataset.config.anchor)
    report = score(tracks, dataset.truth, "auto", frames_unestimable=unestimable)
    return tracks, report


@pytest.fixture
def intr() -> CameraIntrinsics:
    return make_intrinsics()


@pytest.fixture
def hover_scenario():
    return make_hover_scenario


@pytest.fixture
def pipeline_runner():
    return run_dataset
