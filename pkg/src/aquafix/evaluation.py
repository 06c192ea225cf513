"""Scoring of estimated tracks against recorded truth positions.

Per-frame great-circle error plus a signed north/east decomposition in
meters (converted at the truth latitude so magnitudes stay comparable),
with per-track and overall summary statistics.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .errors import AmbiguousMatchError, ParseError, UnmatchedTrackError
from .geodesy import degree_scale_at, haversine_distance, normalize_longitude
from .ingestion import TruthRecord
from .tracking import Track

ERROR_COLUMNS = ("frame_id", "track_id", "haversine_m", "dlat_err_m", "dlon_err_m")

DEFAULT_AUTO_GATE_M = 50.0


@dataclass(frozen=True)
class ErrorSample:
    """One frame's scoring against a truth point.

    dlat_err_m and dlon_err_m are the signed north-axis and east-axis
    errors in meters.
    """

    frame_id: int
    track_id: int
    haversine_m: float
    dlat_err_m: float
    dlon_err_m: float


@dataclass(frozen=True)
class SummaryStats:
    count: int
    min_m: float
    max_m: float
    mean_m: float
    rms_m: float
    median_m: float
    p95_m: float


@dataclass(frozen=True)
class ErrorReport:
    """Per-frame error series plus per-track and overall summaries."""

    samples: tuple[ErrorSample, ...]
    per_track: dict[int, SummaryStats]
    overall: SummaryStats
    frames_evaluated: int
    frames_unestimable: int


def _percentile(sorted_values: Sequence[float], q: float) -> float:
    """Linear interpolation between closest ranks; input must be sorted."""
    if not sorted_values:
        return 0.0
    position = q * (len(sorted_values) - 1)
    low = math.floor(position)
    high = min(low + 1, len(sorted_values) - 1)
    fraction = position - low
    return sorted_values[low] * (1.0 - fraction) + sorted_values[high] * fraction


def summarize(values: Sequence[float]) -> SummaryStats:
    """Summary statistics of an error series; all-zero for an empty one."""
    if not values:
        return SummaryStats(0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0)
    ordered = sorted(values)
    n = len(ordered)
    mean = sum(ordered) / n
    rms = math.sqrt(sum(v * v for v in ordered) / n)
    if n % 2:
        median = ordered[n // 2]
    else:
        median = (ordered[n // 2 - 1] + ordered[n // 2]) / 2.0
    return SummaryStats(
        count=n, min_m=ordered[0], max_m=ordered[-1], mean_m=mean, rms_m=rms,
        median_m=median, p95_m=_percentile(ordered, 0.95))


def _auto_assign(tracks: Sequence[Track], truth: Sequence[TruthRecord],
                 auto_gate_m: float) -> list[tuple[Track, TruthRecord]]:
    claimed: dict[int, int] = {}
    assignments = []
    for track in sorted(tracks, key=lambda t: t.track_id):
        if not track.fixes:
            continue
        first = track.fixes[0]
        frame_lo = first.frame_id
        frame_hi = track.fixes[-1].frame_id
        best: tuple[float, int] | None = None
        for index, record in enumerate(truth):
            if record.valid_to_frame < frame_lo or record.valid_from_frame > frame_hi:
                continue
            distance = haversine_distance(first.estimate, record.position())
            if distance <= auto_gate_m and (best is None or distance < best[0]):
                best = (distance, index)
        if best is None:
            raise UnmatchedTrackError(
                f"track {track.track_id}: no overlapping truth within "
                f"{auto_gate_m} m of its first fix")
        index = best[1]
        if index in claimed:
            raise AmbiguousMatchError(
                f"tracks {claimed[index]} and {track.track_id} both claim truth "
                f"'{truth[index].robot_label}'")
        claimed[index] = track.track_id
        assignments.append((track, truth[index]))
    return assignments


def _mapped_assign(tracks: Sequence[Track], truth: Sequence[TruthRecord],
                   mapping: Mapping[str, int]) -> list[tuple[Track, TruthRecord]]:
    by_id = {t.track_id: t for t in tracks}
    assignments = []
    for label, track_id in mapping.items():
        track = by_id.get(track_id)
        if track is None:
            raise UnmatchedTrackError(f"mapping names unknown track {track_id}")
        records = [r for r in truth if r.robot_label == label]
        if not records:
            raise UnmatchedTrackError(f"mapping names unknown truth label '{label}'")
        for record in records:
            assignments.append((track, record))
    return assignments


def score(tracks: Sequence[Track], truth: Sequence[TruthRecord],
          matching: str | Mapping[str, int] = "auto", *,
          auto_gate_m: float = DEFAULT_AUTO_GATE_M,
          frames_unestimable: int = 0) -> ErrorReport:
    """Score tracks against static truth windows.

    matching is "auto" (each track takes the nearest truth whose frame
    window overlaps it, within auto_gate_m of the track's first fix) or a
    {robot_label: track_id} mapping.  Fixes outside every matched window
    are not evaluated.

    Raises:
        UnmatchedTrackError: a track (or mapping entry) has no usable truth.
        AmbiguousMatchError: two tracks claim the same truth record.
    """
    if matching == "auto":
        assignments = _auto_assign(tracks, truth, auto_gate_m)
    else:
        assignments = _mapped_assign(tracks, truth, matching)

    samples: list[ErrorSample] = []
    for track, record in assignments:
        scale = degree_scale_at(record.lat_deg)
        truth_point = record.position()
        for fix in track.fixes:
            if not record.valid_from_frame <= fix.frame_id <= record.valid_to_frame:
                continue
            samples.append(ErrorSample(
                frame_id=fix.frame_id,
                track_id=track.track_id,
                haversine_m=haversine_distance(fix.estimate, truth_point),
                dlat_err_m=(fix.estimate.lat_deg - truth_point.lat_deg)
                * scale.meters_per_deg_lat,
                dlon_err_m=normalize_longitude(fix.estimate.lon_deg
                                               - truth_point.lon_deg)
                * scale.meters_per_deg_lon,
            ))
    samples.sort(key=lambda s: (s.track_id, s.frame_id))
    per_track: dict[int, SummaryStats] = {}
    for track_id in sorted({s.track_id for s in samples}):
        per_track[track_id] = summarize(
            [s.haversine_m for s in samples if s.track_id == track_id])
    return ErrorReport(
        samples=tuple(samples),
        per_track=per_track,
        overall=summarize([s.haversine_m for s in samples]),
        frames_evaluated=len(samples),
        frames_unestimable=frames_unestimable,
    )


def emit_report(report: ErrorReport, out_dir, fmt: str = "csv") -> list[Path]:
    """Write the error series and summary.json; bytes are deterministic.

    fmt selects the series container: "csv" writes errors.csv, "json"
    writes errors.json.  Rows are sorted by (track_id, frame_id).
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    if fmt == "csv":
        series_path = out / "errors.csv"
        with open(series_path, "w", encoding="utf-8", newline="") as handle:
            writer = csv.writer(handle, lineterminator="\n")
            writer.writerow(ERROR_COLUMNS)
            for s in report.samples:
                writer.writerow([str(s.frame_id), str(s.track_id), repr(s.haversine_m),
                                 repr(s.dlat_err_m), repr(s.dlon_err_m)])
    elif fmt == "json":
        series_path = out / "errors.json"
        with open(series_path, "w", encoding="utf-8", newline="\n") as handle:
            json.dump([asdict(s) for s in report.samples], handle, indent=2)
            handle.write("\n")
    else:
        raise ValueError(f"unknown report format '{fmt}'")
    paths.append(series_path)

    summary_path = out / "summary.json"
    payload = {
        "frames_evaluated": report.frames_evaluated,
        "frames_unestimable": report.frames_unestimable,
        "overall": asdict(report.overall),
        "per_track": {str(track_id): asdict(stats)
                      for track_id, stats in sorted(report.per_track.items())},
    }
    with open(summary_path, "w", encoding="utf-8", newline="\n") as handle:
        json.dump(payload, handle, indent=2, sort_keys=True)
        handle.write("\n")
    paths.append(summary_path)
    return paths


def read_report(out_dir, fmt: str = "csv") -> ErrorReport:
    """Reload a report emitted by emit_report (exact round trip)."""
    out = Path(out_dir)
    samples: list[ErrorSample] = []
    if fmt == "csv":
        with open(out / "errors.csv", encoding="utf-8") as handle:
            reader = csv.reader(handle)
            header = next(reader, None)
            if header is not None and tuple(header) != ERROR_COLUMNS:
                raise ParseError(f"header {header!r} does not match "
                                 f"{list(ERROR_COLUMNS)!r}",
                                 source=str(out / "errors.csv"), line=1)
            for row in reader:
                samples.append(ErrorSample(int(row[0]), int(row[1]), float(row[2]),
                                           float(row[3]), float(row[4])))
    elif fmt == "json":
        with open(out / "errors.json", encoding="utf-8") as handle:
            samples = [ErrorSample(**obj) for obj in json.load(handle)]
    else:
        raise ValueError(f"unknown report format '{fmt}'")
    with open(out / "summary.json", encoding="utf-8") as handle:
        payload = json.load(handle)
    return ErrorReport(
        samples=tuple(samples),
        per_track={int(track_id): SummaryStats(**stats)
                   for track_id, stats in payload["per_track"].items()},
        overall=SummaryStats(**payload["overall"]),
        frames_evaluated=payload["frames_evaluated"],
        frames_unestimable=payload["frames_unestimable"],
    )
