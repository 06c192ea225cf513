"""Strict, line-diagnosed parsers and serializers for the dataset formats.

Native formats are UTF-8 CSV with a fixed header (or an equivalent
JSON-lines form for telemetry); the YOLO normalized label format is
supported read-side.  Parsers reject rather than coerce; with lenient=True
malformed data rows are skipped and reported through on_skip, while
structural problems (bad headers, unknown formats) always raise.

Serialization uses shortest round-trip float representation, so
parse(serialize(records)) reproduces the records exactly and canonical
files re-serialize byte-identically.
"""

from __future__ import annotations

import csv
import json
import math
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Iterator

from .camera import CameraIntrinsics, PixelPoint
from .errors import (
    BadFilenamePatternError,
    DuplicateFrameError,
    MissingColumnError,
    NonMonotoneTimestampError,
    OrphanDetectionError,
    ParseError,
    UnitRangeViolationError,
    UnknownFormatError,
    ValueOutOfUnitRangeError,
)
from .geodesy import GeoPoint
from .projection import DronePose

TELEMETRY_COLUMNS = (
    "frame_id", "timestamp_s", "lat_deg", "lon_deg", "altitude_m", "heading_deg",
    "depression_deg", "focal_length_mm", "sensor_width_mm", "sensor_height_mm",
    "image_width_px", "image_height_px",
)
DETECTION_COLUMNS = ("frame_id", "class_id", "cx_px", "cy_px", "w_px", "h_px", "confidence")
TRUTH_COLUMNS = ("robot_label", "lat_deg", "lon_deg", "valid_from_frame", "valid_to_frame")

DETECTIONS_NATIVE_CSV = "native-csv"
DETECTIONS_YOLO = "yolo-normalized"

_YOLO_NAME = re.compile(r"frame_(\d+)\.txt")

OnSkip = Callable[[ParseError], None]


@dataclass(frozen=True)
class TelemetryRecord:
    """One frame of drone pose and camera intrinsics."""

    frame_id: int
    timestamp_s: float
    lat_deg: float
    lon_deg: float
    altitude_m: float
    heading_deg: float
    depression_deg: float
    focal_length_mm: float
    sensor_width_mm: float
    sensor_height_mm: float
    image_width_px: int
    image_height_px: int
    source: str = field(default="", compare=False, repr=False)
    line: int = field(default=0, compare=False, repr=False)

    def position(self) -> GeoPoint:
        return GeoPoint(self.lat_deg, self.lon_deg)

    def pose(self) -> DronePose:
        return DronePose(self.position(), self.altitude_m, self.heading_deg,
                         self.depression_deg)

    def intrinsics(self) -> CameraIntrinsics:
        return CameraIntrinsics(self.focal_length_mm, self.sensor_width_mm,
                                self.sensor_height_mm, self.image_width_px,
                                self.image_height_px)


@dataclass(frozen=True)
class DetectionRecord:
    """One bounding-box detection; consumed, never produced, by this toolkit."""

    frame_id: int
    class_id: int
    center: PixelPoint
    width_px: float
    height_px: float
    confidence: float
    source: str = field(default="", compare=False, repr=False)
    line: int = field(default=0, compare=False, repr=False)
    # Normalized values as parsed from a YOLO label file; reused on write so
    # label round trips stay byte-exact (pixel->normalized->pixel is not).
    normalized: tuple[float, float, float, float] | None = field(
        default=None, compare=False, repr=False)


@dataclass(frozen=True)
class TruthRecord:
    """Recorded true robot position, static over an inclusive frame window."""

    robot_label: str
    lat_deg: float
    lon_deg: float
    valid_from_frame: int
    valid_to_frame: int
    source: str = field(default="", compare=False, repr=False)
    line: int = field(default=0, compare=False, repr=False)

    def position(self) -> GeoPoint:
        return GeoPoint(self.lat_deg, self.lon_deg)


@dataclass
class FrameBundle:
    """One telemetry frame with the detections observed in it."""

    telemetry: TelemetryRecord
    detections: list[DetectionRecord]


def _fmt(value) -> str:
    """Canonical cell text: shortest round-trip repr for floats."""
    return repr(value) if isinstance(value, float) else str(value)


def _split_csv_line(line: str) -> list[str]:
    return next(csv.reader([line]))


def _content_lines(lines: Iterable[str]) -> Iterator[tuple[int, str]]:
    for number, raw in enumerate(lines, 1):
        text = raw.rstrip("\r\n")
        if text:
            yield number, text


def _parse_float(text: str, *, source: str, line: int, name: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise ParseError(f"invalid number {text!r}", source=source, line=line,
                         field=name) from None
    if not math.isfinite(value):
        raise UnitRangeViolationError(f"non-finite value {text!r}", source=source,
                                      line=line, field=name)
    return value


def _parse_int(text: str, *, source: str, line: int, name: str) -> int:
    try:
        return int(text)
    except ValueError:
        raise ParseError(f"invalid integer {text!r}", source=source, line=line,
                         field=name) from None


def _check_range(value, ok: bool, *, source: str, line: int, name: str, expect: str):
    if not ok:
        raise UnitRangeViolationError(f"value {value!r} violates {expect}",
                                      source=source, line=line, field=name)
    return value


def _require_header(cells: list[str], expected: tuple[str, ...], *, source: str):
    for name in expected:
        if name not in cells:
            raise MissingColumnError(f"header lacks required column '{name}'",
                                     source=source, line=1, field=name)
    if tuple(cells) != expected:
        raise ParseError(f"header {cells!r} does not match the canonical column "
                         f"order {list(expected)!r}", source=source, line=1)


def _row_to_cells(text: str, expected: tuple[str, ...], *, source: str,
                  line: int) -> dict[str, str]:
    cells = _split_csv_line(text)
    if len(cells) < len(expected):
        raise MissingColumnError(f"row has {len(cells)} fields, expected "
                                 f"{len(expected)}", source=source, line=line,
                                 field=expected[len(cells)])
    if len(cells) > len(expected):
        raise ParseError(f"row has {len(cells)} fields, expected {len(expected)}",
                         source=source, line=line)
    return dict(zip(expected, cells))


def _build_telemetry(raw: dict[str, str], *, source: str, line: int) -> TelemetryRecord:
    frame_id = _parse_int(raw["frame_id"], source=source, line=line, name="frame_id")
    _check_range(frame_id, frame_id >= 0, source=source, line=line, name="frame_id",
                 expect="frame_id >= 0")
    timestamp = _parse_float(raw["timestamp_s"], source=source, line=line,
                             name="timestamp_s")
    lat = _parse_float(raw["lat_deg"], source=source, line=line, name="lat_deg")
    _check_range(lat, -90.0 <= lat <= 90.0, source=source, line=line, name="lat_deg",
                 expect="lat_deg in [-90, 90]")
    lon = _parse_float(raw["lon_deg"], source=source, line=line, name="lon_deg")
    _check_range(lon, -180.0 < lon <= 180.0, source=source, line=line, name="lon_deg",
                 expect="lon_deg in (-180, 180]")
    altitude = _parse_float(raw["altitude_m"], source=source, line=line,
                            name="altitude_m")
    _check_range(altitude, altitude > 0.0, source=source, line=line, name="altitude_m",
                 expect="altitude_m > 0")
    heading = _parse_float(raw["heading_deg"], source=source, line=line,
                           name="heading_deg")
    _check_range(heading, 0.0 <= heading < 360.0, source=source, line=line,
                 name="heading_deg", expect="heading_deg in [0, 360)")
    depression = _parse_float(raw["depression_deg"], source=source, line=line,
                              name="depression_deg")
    _check_range(depression, 0.0 <= depression < 90.0, source=source, line=line,
                 name="depression_deg", expect="depression_deg in [0, 90)")
    focal = _parse_float(raw["focal_length_mm"], source=source, line=line,
                         name="focal_length_mm")
    _check_range(focal, focal > 0.0, source=source, line=line, name="focal_length_mm",
                 expect="focal_length_mm > 0")
    sensor_w = _parse_float(raw["sensor_width_mm"], source=source, line=line,
                            name="sensor_width_mm")
    _check_range(sensor_w, sensor_w > 0.0, source=source, line=line,
                 name="sensor_width_mm", expect="sensor_width_mm > 0")
    sensor_h = _parse_float(raw["sensor_height_mm"], source=source, line=line,
                            name="sensor_height_mm")
    _check_range(sensor_h, sensor_h > 0.0, source=source, line=line,
                 name="sensor_height_mm", expect="sensor_height_mm > 0")
    width = _parse_int(raw["image_width_px"], source=source, line=line,
                       name="image_width_px")
    _check_range(width, width >= 1, source=source, line=line, name="image_width_px",
                 expect="image_width_px >= 1")
    height = _parse_int(raw["image_height_px"], source=source, line=line,
                        name="image_height_px")
    _check_range(height, height >= 1, source=source, line=line, name="image_height_px",
                 expect="image_height_px >= 1")
    return TelemetryRecord(frame_id, timestamp, lat, lon, altitude, heading, depression,
                           focal, sensor_w, sensor_h, width, height,
                           source=source, line=line)


def _jsonl_telemetry_raw(text: str, *, source: str, line: int) -> dict[str, str]:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc.msg}", source=source, line=line) from None
    if not isinstance(obj, dict):
        raise ParseError("expected a JSON object per line", source=source, line=line)
    for name in TELEMETRY_COLUMNS:
        if name not in obj:
            raise MissingColumnError(f"object lacks required field '{name}'",
                                     source=source, line=line, field=name)
    for name in obj:
        if name not in TELEMETRY_COLUMNS:
            raise ParseError(f"unexpected field '{name}'", source=source, line=line,
                             field=name)
    # Funnel through text so CSV and JSONL share one validation path.
    return {name: json.dumps(obj[name]) for name in TELEMETRY_COLUMNS}


def parse_telemetry(lines: Iterable[str], *, source: str = "<telemetry>",
                    fmt: str | None = None, lenient: bool = False,
                    on_skip: OnSkip | None = None) -> Iterator[TelemetryRecord]:
    """Yield validated telemetry records from CSV or JSON-lines input.

    fmt is "csv", "jsonl", or None to sniff from the first content line.
    Enforces per-file invariants: unique frame ids and non-decreasing
    timestamps (checked against the last accepted row in lenient mode).
    """
    content = _content_lines(lines)
    first = next(content, None)
    if first is None:
        return
    if fmt is None:
        fmt = "jsonl" if first[1].lstrip().startswith("{") else "csv"
    if fmt not in ("csv", "jsonl"):
        raise UnknownFormatError(f"unknown telemetry format '{fmt}'", source=source,
                                 line=0)
    if fmt == "csv":
        _require_header(_split_csv_line(first[1]), TELEMETRY_COLUMNS, source=source)
        rows: Iterator[tuple[int, str]] = content
    else:
        rows = _chain_first(first, content)

    seen_frames: set[int] = set()
    last_ts: float | None = None
    for line_no, text in rows:
        try:
            if fmt == "csv":
                raw = _row_to_cells(text, TELEMETRY_COLUMNS, source=source, line=line_no)
            else:
                raw = _jsonl_telemetry_raw(text, source=source, line=line_no)
            record = _build_telemetry(raw, source=source, line=line_no)
            if record.frame_id in seen_frames:
                raise DuplicateFrameError(f"frame {record.frame_id} already seen",
                                          source=source, line=line_no, field="frame_id")
            if last_ts is not None and record.timestamp_s < last_ts:
                raise NonMonotoneTimestampError(
                    f"timestamp {record.timestamp_s} regressed below {last_ts}",
                    source=source, line=line_no, field="timestamp_s")
        except ParseError as err:
            if not lenient:
                raise
            if on_skip is not None:
                on_skip(err)
            continue
        seen_frames.add(record.frame_id)
        last_ts = record.timestamp_s
        yield record


def _chain_first(first: tuple[int, str],
                 rest: Iterator[tuple[int, str]]) -> Iterator[tuple[int, str]]:
    yield first
    yield from rest


def _build_detection(raw: dict[str, str], *, source: str, line: int) -> DetectionRecord:
    frame_id = _parse_int(raw["frame_id"], source=source, line=line, name="frame_id")
    _check_range(frame_id, frame_id >= 0, source=source, line=line, name="frame_id",
                 expect="frame_id >= 0")
    class_id = _parse_int(raw["class_id"], source=source, line=line, name="class_id")
    _check_range(class_id, class_id >= 0, source=source, line=line, name="class_id",
                 expect="class_id >= 0")
    cx = _parse_float(raw["cx_px"], source=source, line=line, name="cx_px")
    cy = _parse_float(raw["cy_px"], source=source, line=line, name="cy_px")
    w = _parse_float(raw["w_px"], source=source, line=line, name="w_px")
    _check_range(w, w >= 0.0, source=source, line=line, name="w_px", expect="w_px >= 0")
    h = _parse_float(raw["h_px"], source=source, line=line, name="h_px")
    _check_range(h, h >= 0.0, source=source, line=line, name="h_px", expect="h_px >= 0")
    conf = _parse_float(raw["confidence"], source=source, line=line, name="confidence")
    _check_range(conf, 0.0 <= conf <= 1.0, source=source, line=line, name="confidence",
                 expect="confidence in [0, 1]")
    return DetectionRecord(frame_id, class_id, PixelPoint(cx, cy), w, h, conf,
                           source=source, line=line)


def parse_detections_csv(lines: Iterable[str], *, source: str = "<detections>",
                         lenient: bool = False,
                         on_skip: OnSkip | None = None) -> Iterator[DetectionRecord]:
    """Yield detections from the native CSV format."""
    content = _content_lines(lines)
    first = next(content, None)
    if first is None:
        return
    _require_header(_split_csv_line(first[1]), DETECTION_COLUMNS, source=source)
    for line_no, text in content:
        try:
            raw = _row_to_cells(text, DETECTION_COLUMNS, source=source, line=line_no)
            record = _build_detection(raw, source=source, line=line_no)
        except ParseError as err:
            if not lenient:
                raise
            if on_skip is not None:
                on_skip(err)
            continue
        yield record


def parse_yolo_labels(directory, intr: CameraIntrinsics, *, lenient: bool = False,
                      on_skip: OnSkip | None = None) -> list[DetectionRecord]:
    """Read per-frame normalized label files (frame_<id>.txt).

    Rows are "class cx cy w h" with an optional trailing confidence, all
    normalized to [0, 1]; centers and boxes are scaled by the image
    dimensions from intr.  Non-.txt directory entries are ignored.
    """
    records: list[DetectionRecord] = []
    width = intr.image_width_px
    height = intr.image_height_px
    for path in sorted(Path(directory).iterdir()):
        if path.suffix != ".txt":
            continue
        match = _YOLO_NAME.fullmatch(path.name)
        if match is None:
            err = BadFilenamePatternError(
                "label file name does not match frame_<id>.txt",
                source=str(path), line=0)
            if lenient:
                if on_skip is not None:
                    on_skip(err)
                continue
            raise err
        frame_id = int(match.group(1))
        with open(path, encoding="utf-8") as handle:
            for line_no, text in _content_lines(handle):
                try:
                    records.append(_build_yolo_row(text, frame_id, width, height,
                                                   source=str(path), line=line_no))
                except ParseError as err:
                    if not lenient:
                        raise
                    if on_skip is not None:
                        on_skip(err)
    return records


def _build_yolo_row(text: str, frame_id: int, width: int, height: int, *,
                    source: str, line: int) -> DetectionRecord:
    parts = text.split()
    if len(parts) not in (5, 6):
        raise ParseError(f"expected 5 or 6 whitespace-separated values, got "
                         f"{len(parts)}", source=source, line=line)
    class_id = _parse_int(parts[0], source=source, line=line, name="class")
    _check_range(class_id, class_id >= 0, source=source, line=line, name="class",
                 expect="class >= 0")
    names = ("cx", "cy", "w", "h")
    values = []
    for name, part in zip(names, parts[1:5]):
        value = _parse_float(part, source=source, line=line, name=name)
        if not 0.0 <= value <= 1.0:
            raise ValueOutOfUnitRangeError(f"normalized value {value!r} outside [0, 1]",
                                           source=source, line=line, field=name)
        values.append(value)
    cx, cy, w, h = values
    confidence = 1.0
    if len(parts) == 6:
        confidence = _parse_float(parts[5], source=source, line=line, name="confidence")
        if not 0.0 <= confidence <= 1.0:
            raise ValueOutOfUnitRangeError(
                f"confidence {confidence!r} outside [0, 1]", source=source, line=line,
                field="confidence")
    return DetectionRecord(
        frame_id, class_id, PixelPoint(cx * width, cy * height),
        w * width, h * height, confidence,
        source=source, line=line, normalized=(cx, cy, w, h))


def parse_detections(path, fmt: str = DETECTIONS_NATIVE_CSV,
                     intr: CameraIntrinsics | None = None, *, lenient: bool = False,
                     on_skip: OnSkip | None = None) -> list[DetectionRecord]:
    """Load detections from a file (native CSV) or directory (YOLO labels)."""
    if fmt == DETECTIONS_NATIVE_CSV:
        with open(path, encoding="utf-8") as handle:
            return list(parse_detections_csv(handle, source=str(path), lenient=lenient,
                                             on_skip=on_skip))
    if fmt == DETECTIONS_YOLO:
        if intr is None:
            raise UnknownFormatError(
                "camera intrinsics are required to denormalize YOLO labels",
                source=str(path), line=0)
        return parse_yolo_labels(path, intr, lenient=lenient, on_skip=on_skip)
    raise UnknownFormatError(f"unknown detections format '{fmt}'", source=str(path),
                             line=0)


def parse_truth(lines: Iterable[str], *, source: str = "<truth>",
                lenient: bool = False,
                on_skip: OnSkip | None = None) -> Iterator[TruthRecord]:
    """Yield truth records from the native CSV format."""
    content = _content_lines(lines)
    first = next(content, None)
    if first is None:
        return
    _require_header(_split_csv_line(first[1]), TRUTH_COLUMNS, source=source)
    for line_no, text in content:
        try:
            raw = _row_to_cells(text, TRUTH_COLUMNS, source=source, line=line_no)
            label = raw["robot_label"]
            if not label:
                raise UnitRangeViolationError("robot_label must be non-empty",
                                              source=source, line=line_no,
                                              field="robot_label")
            lat = _parse_float(raw["lat_deg"], source=source, line=line_no,
                               name="lat_deg")
            _check_range(lat, -90.0 <= lat <= 90.0, source=source, line=line_no,
                         name="lat_deg", expect="lat_deg in [-90, 90]")
            lon = _parse_float(raw["lon_deg"], source=source, line=line_no,
                               name="lon_deg")
            _check_range(lon, -180.0 < lon <= 180.0, source=source, line=line_no,
                         name="lon_deg", expect="lon_deg in (-180, 180]")
            start = _parse_int(raw["valid_from_frame"], source=source, line=line_no,
                               name="valid_from_frame")
            _check_range(start, start >= 0, source=source, line=line_no,
                         name="valid_from_frame", expect="valid_from_frame >= 0")
            end = _parse_int(raw["valid_to_frame"], source=source, line=line_no,
                             name="valid_to_frame")
            _check_range(end, end >= start, source=source, line=line_no,
                         name="valid_to_frame",
                         expect="valid_to_frame >= valid_from_frame")
            record = TruthRecord(label, lat, lon, start, end, source=source,
                                 line=line_no)
        except ParseError as err:
            if not lenient:
                raise
            if on_skip is not None:
                on_skip(err)
            continue
        yield record


def join_frames(telemetry: Iterable[TelemetryRecord],
                detections: Iterable[DetectionRecord]) -> list[FrameBundle]:
    """Group detections under their telemetry frames.

    Every telemetry record yields a bundle (possibly empty, the robot being
    submerged or undetected); a detection without telemetry is a hard
    error.  Output is sorted by frame id.
    """
    by_frame: dict[int, FrameBundle] = {}
    for record in telemetry:
        if record.frame_id in by_frame:
            raise DuplicateFrameError(f"frame {record.frame_id} already seen",
                                      source=record.source or "<telemetry>",
                                      line=record.line, field="frame_id")
        by_frame[record.frame_id] = FrameBundle(record, [])
    for det in detections:
        bundle = by_frame.get(det.frame_id)
        if bundle is None:
            raise OrphanDetectionError(
                f"detection frame {det.frame_id} has no telemetry record",
                source=det.source or "<detections>", line=det.line, field="frame_id")
        tele = bundle.telemetry
        if not (0.0 <= det.center.x_px <= tele.image_width_px
                and 0.0 <= det.center.y_px <= tele.image_height_px):
            raise UnitRangeViolationError(
                f"detection center ({det.center.x_px}, {det.center.y_px}) outside the "
                f"{tele.image_width_px}x{tele.image_height_px} image",
                source=det.source or "<detections>", line=det.line, field="cx_px")
        bundle.detections.append(det)
    return [by_frame[frame_id] for frame_id in sorted(by_frame)]


def read_telemetry(path, *, fmt: str | None = None, lenient: bool = False,
                   on_skip: OnSkip | None = None) -> list[TelemetryRecord]:
    """Parse a telemetry file; format sniffed from content unless given."""
    with open(path, encoding="utf-8") as handle:
        return list(parse_telemetry(handle, source=str(path), fmt=fmt, lenient=lenient,
                                    on_skip=on_skip))


def read_truth(path, *, lenient: bool = False,
               on_skip: OnSkip | None = None) -> list[TruthRecord]:
    with open(path, encoding="utf-8") as handle:
        return list(parse_truth(handle, source=str(path), lenient=lenient,
                                on_skip=on_skip))


def write_telemetry_csv(records: Iterable[TelemetryRecord], stream) -> None:
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(TELEMETRY_COLUMNS)
    for r in records:
        writer.writerow([_fmt(getattr(r, name)) for name in TELEMETRY_COLUMNS])


def write_telemetry_jsonl(records: Iterable[TelemetryRecord], stream) -> None:
    for r in records:
        obj = {name: getattr(r, name) for name in TELEMETRY_COLUMNS}
        stream.write(json.dumps(obj, separators=(",", ":")) + "\n")


def write_detections_csv(records: Iterable[DetectionRecord], stream) -> None:
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(DETECTION_COLUMNS)
    for r in records:
        writer.writerow([_fmt(r.frame_id), _fmt(r.class_id), _fmt(r.center.x_px),
                         _fmt(r.center.y_px), _fmt(r.width_px), _fmt(r.height_px),
                         _fmt(r.confidence)])


def write_truth_csv(records: Iterable[TruthRecord], stream) -> None:
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(TRUTH_COLUMNS)
    for r in records:
        writer.writerow([r.robot_label, _fmt(r.lat_deg), _fmt(r.lon_deg),
                         _fmt(r.valid_from_frame), _fmt(r.valid_to_frame)])


def write_yolo_labels(records: Iterable[DetectionRecord], directory,
                      intr: CameraIntrinsics) -> list[Path]:
    """Write normalized label files, one frame_%06d.txt per non-empty frame."""
    out = Path(directory)
    out.mkdir(parents=True, exist_ok=True)
    by_frame: dict[int, list[DetectionRecord]] = {}
    for r in records:
        by_frame.setdefault(r.frame_id, []).append(r)
    paths = []
    for frame_id in sorted(by_frame):
        path = out / f"frame_{frame_id:06d}.txt"
        with open(path, "w", encoding="utf-8", newline="\n") as handle:
            for r in by_frame[frame_id]:
                if r.normalized is not None:
                    cx, cy, w, h = r.normalized
                else:
                    cx = r.center.x_px / intr.image_width_px
                    cy = r.center.y_px / intr.image_height_px
                    w = r.width_px / intr.image_width_px
                    h = r.height_px / intr.image_height_px
                handle.write(f"{r.class_id} {_fmt(cx)} {_fmt(cy)} {_fmt(w)} {_fmt(h)} "
                             f"{_fmt(r.confidence)}\n")
        paths.append(path)
    return paths
