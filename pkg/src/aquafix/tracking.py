"""Greedy nearest-neighbor association of per-frame fixes into tracks.

Distances are measured in local ENU meters relative to a session anchor,
which makes association invariant to drone motion between frames.  The
policy is deliberately simple: scenes here hold a few well-separated
robots, and greedy matching is deterministic and explainable.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

from .camera import AngularOffset
from .errors import DomainError, ParseError
from .geodesy import EnuOffset, GeoPoint
from .oracle import EnuAnchor
from .projection import GroundSolution, PositionFix

TRACK_COLUMNS = (
    "track_id", "frame_id", "lat_deg", "lon_deg", "theta_x_deg", "theta_y_deg",
    "d_forward_m", "d_lateral_m", "bearing_offset_deg", "ground_range_m",
    "dn_m", "de_m",
)

# Distances are quantized before sorting so float noise cannot flip the
# documented tie-break (lower track id, then lower detection index).
_TIE_QUANTUM_DIGITS = 9


@dataclass(frozen=True)
class GateConfig:
    """Association gate and track lifetime."""

    gate_m: float = 10.0
    max_coast_frames: int = 90

    def __post_init__(self):
        if not self.gate_m > 0.0:
            raise DomainError(f"gate_m must be positive, got {self.gate_m}")
        if self.max_coast_frames < 0:
            raise DomainError(f"max_coast_frames must be >= 0, got "
                              f"{self.max_coast_frames}")


@dataclass
class Track:
    """Frame-ordered fixes attributed to one robot."""

    track_id: int
    fixes: list[PositionFix] = field(default_factory=list)
    last_enu: tuple[float, float] = (0.0, 0.0)
    frames_since_fix: int = field(default=0, compare=False)
    closed: bool = field(default=False, compare=False)


def associate(frames: Sequence[Sequence[PositionFix]],
              cfg: GateConfig = GateConfig(),
              anchor: GeoPoint | None = None) -> list[Track]:
    """Assign per-frame fixes to tracks, greedily in ascending distance.

    Per frame, each fix matches the nearest open track within the gate that
    is not already matched this frame; ties break on lower track id, then
    lower detection index.  Unmatched fixes open new tracks (ids in
    creation order from 0); a track unmatched for more than
    max_coast_frames consecutive frames closes.

    Args:
        frames: per-frame fix lists, in frame order (entries may be empty).
        cfg: gate distance and coasting limit.
        anchor: session ENU anchor; defaults to the first fix's estimate.

    Returns:
        All tracks, open and closed, ordered by track id; every input fix
        appears in exactly one track with its track_id filled in.
    """
    tracks: list[Track] = []
    converter = EnuAnchor(anchor) if anchor is not None else None
    for frame_fixes in frames:
        if converter is None and frame_fixes:
            converter = EnuAnchor(frame_fixes[0].estimate)
        positions = [converter.to_enu(fix.estimate) for fix in frame_fixes]

        open_tracks = {t.track_id: t for t in tracks if not t.closed}
        pairs = []
        for track in open_tracks.values():
            te, tn = track.last_enu
            for index, (fe, fn) in enumerate(positions):
                distance = math.hypot(fe - te, fn - tn)
                if distance <= cfg.gate_m:
                    pairs.append((round(distance, _TIE_QUANTUM_DIGITS),
                                  track.track_id, index))
        pairs.sort()

        assigned: dict[int, Track] = {}
        taken_tracks: set[int] = set()
        for _, track_id, index in pairs:
            if track_id in taken_tracks or index in assigned:
                continue
            taken_tracks.add(track_id)
            assigned[index] = open_tracks[track_id]

        fed: set[int] = set()
        for index, fix in enumerate(frame_fixes):
            track = assigned.get(index)
            if track is None:
                track = Track(track_id=len(tracks))
                tracks.append(track)
            track.fixes.append(replace(fix, track_id=track.track_id))
            track.last_enu = positions[index]
            fed.add(track.track_id)

        for track in tracks:
            if track.closed:
                continue
            if track.track_id in fed:
                track.frames_since_fix = 0
            else:
                track.frames_since_fix += 1
                if track.frames_since_fix > cfg.max_coast_frames:
                    track.closed = True
    return tracks


def write_tracks_csv(tracks: Iterable[Track], stream) -> None:
    """Emit tracks sorted by (track_id, frame_id) with full diagnostics."""
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(TRACK_COLUMNS)
    for track in sorted(tracks, key=lambda t: t.track_id):
        for fix in track.fixes:
            sol = fix.solution
            offset = sol.offset if sol.offset is not None else EnuOffset(0.0, 0.0)
            writer.writerow([
                str(track.track_id), str(fix.frame_id),
                repr(fix.estimate.lat_deg), repr(fix.estimate.lon_deg),
                repr(math.degrees(fix.angles.theta_x_rad)),
                repr(math.degrees(fix.angles.theta_y_rad)),
                repr(sol.d_forward_m), repr(sol.d_lateral_m),
                repr(math.degrees(sol.bearing_offset_rad)),
                repr(sol.ground_range_m),
                repr(offset.north_m), repr(offset.east_m),
            ])


def read_tracks_csv(lines: Iterable[str], *, source: str = "<tracks>") -> list[Track]:
    """Rebuild tracks from a tracks.csv file.

    Association state (coast counters, session anchor) is not
    reconstructed and detection indices are not stored in the file; the
    result is intended for evaluation.
    """
    reader = csv.reader(lines)
    header = next(reader, None)
    if header is None:
        return []
    if tuple(header) != TRACK_COLUMNS:
        raise ParseError(f"header {header!r} does not match {list(TRACK_COLUMNS)!r}",
                         source=source, line=1)
    by_id: dict[int, Track] = {}
    for line_no, row in enumerate(reader, 2):
        if not row:
            continue
        if len(row) != len(TRACK_COLUMNS):
            raise ParseError(f"row has {len(row)} fields, expected "
                             f"{len(TRACK_COLUMNS)}", source=source, line=line_no)
        cells = dict(zip(TRACK_COLUMNS, row))
        try:
            track_id = int(cells["track_id"])
            frame_id = int(cells["frame_id"])
            estimate = GeoPoint(float(cells["lat_deg"]), float(cells["lon_deg"]))
            angles = AngularOffset(math.radians(float(cells["theta_x_deg"])),
                                   math.radians(float(cells["theta_y_deg"])))
            solution = GroundSolution(
                d_forward_m=float(cells["d_forward_m"]),
                d_lateral_m=float(cells["d_lateral_m"]),
                bearing_offset_rad=math.radians(float(cells["bearing_offset_deg"])),
                ground_range_m=float(cells["ground_range_m"]),
                offset=EnuOffset(north_m=float(cells["dn_m"]),
                                 east_m=float(cells["de_m"])),
            )
        except (ValueError, DomainError) as exc:
            raise ParseError(str(exc), source=source, line=line_no) from None
        fix = PositionFix(frame_id=frame_id, detection_index=0, track_id=track_id,
                          estimate=estimate, solution=solution, angles=angles)
        by_id.setdefault(track_id, Track(track_id=track_id)).fixes.append(fix)
    return [by_id[track_id] for track_id in sorted(by_id)]
