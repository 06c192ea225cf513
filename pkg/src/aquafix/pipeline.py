"""Frame-ordered batch estimation over joined telemetry/detection bundles.

Unestimable detections are recorded with a short error code instead of
being dropped, so per-frame error series keep aligned frame indices.
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Sequence

from .errors import DomainError, HorizonError, PoleSingularityError
from .geodesy import AxisConvention, EnuOffset
from .ingestion import FrameBundle
from .projection import PositionFix, estimate_position

FIX_COLUMNS = (
    "frame_id", "detection_index", "lat_deg", "lon_deg", "theta_x_deg", "theta_y_deg",
    "d_forward_m", "d_lateral_m", "bearing_offset_deg", "ground_range_m",
    "dn_m", "de_m", "error",
)


@dataclass(frozen=True)
class FailedEstimate:
    """Marker for a detection the geometry could not place on the water plane."""

    frame_id: int
    detection_index: int
    code: str
    message: str


@dataclass(frozen=True)
class FrameEstimates:
    """Per-frame estimation output: successful fixes plus failure markers."""

    frame_id: int
    fixes: tuple[PositionFix, ...]
    failures: tuple[FailedEstimate, ...]


def _error_code(exc: Exception) -> str:
    if isinstance(exc, HorizonError):
        return "horizon"
    if isinstance(exc, PoleSingularityError):
        return "pole"
    if isinstance(exc, DomainError):
        return "domain"
    raise exc


def estimate_bundle(bundle: FrameBundle,
                    convention: AxisConvention = AxisConvention.CORRECTED
                    ) -> FrameEstimates:
    """Estimate every detection in one frame."""
    pose = bundle.telemetry.pose()
    intr = bundle.telemetry.intrinsics()
    fixes: list[PositionFix] = []
    failures: list[FailedEstimate] = []
    for index, detection in enumerate(bundle.detections):
        try:
            fixes.append(estimate_position(
                pose, intr, detection.center, convention,
                frame_id=bundle.telemetry.frame_id, detection_index=index))
        except (HorizonError, PoleSingularityError, DomainError) as exc:
            failures.append(FailedEstimate(bundle.telemetry.frame_id, index,
                                           _error_code(exc), str(exc)))
    return FrameEstimates(bundle.telemetry.frame_id, tuple(fixes), tuple(failures))


def estimate_frames(bundles: Sequence[FrameBundle],
                    convention: AxisConvention = AxisConvention.CORRECTED,
                    threads: int = 0) -> list[FrameEstimates]:
    """Estimate a batch of frames, emitting results in frame order.

    threads > 1 maps frames over a thread pool; results are still returned
    in input order regardless of completion order.  0 means serial, which
    is the fast path for this pure-Python math.
    """
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(lambda b: estimate_bundle(b, convention), bundles))
    return [estimate_bundle(bundle, convention) for bundle in bundles]


def write_fixes_csv(results: Iterable[FrameEstimates], stream) -> None:
    """One row per detection, fixes and failures merged in detection order."""
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(FIX_COLUMNS)
    for frame in results:
        rows = []
        for fix in frame.fixes:
            sol = fix.solution
            offset = sol.offset if sol.offset is not None else EnuOffset(0.0, 0.0)
            rows.append((fix.detection_index, [
                str(fix.frame_id), str(fix.detection_index),
                repr(fix.estimate.lat_deg), repr(fix.estimate.lon_deg),
                repr(math.degrees(fix.angles.theta_x_rad)),
                repr(math.degrees(fix.angles.theta_y_rad)),
                repr(sol.d_forward_m), repr(sol.d_lateral_m),
                repr(math.degrees(sol.bearing_offset_rad)),
                repr(sol.ground_range_m),
                repr(offset.north_m), repr(offset.east_m), "",
            ]))
        for failure in frame.failures:
            rows.append((failure.detection_index, [
                str(failure.frame_id), str(failure.detection_index),
                "", "", "", "", "", "", "", "", "", "", failure.code,
            ]))
        for _, row in sorted(rows, key=lambda item: item[0]):
            writer.writerow(row)


def count_unestimable(lines: Iterable[str]) -> int:
    """Number of failure rows in a fixes.csv stream."""
    reader = csv.reader(lines)
    header = next(reader, None)
    if header is None:
        return 0
    try:
        error_at = list(header).index("error")
    except ValueError:
        return 0
    return sum(1 for row in reader if row and row[error_at])
