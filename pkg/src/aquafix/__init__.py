"""Aerial GNSS localization toolkit for near-surface marine robots.

Estimates geodetic positions of water robots from an aerial drone's
telemetry and per-frame object detections, verifies the trigonometric
estimation chain against an exact ray-cast model, and evaluates accuracy
with the great-circle (Haversine) metric on real or synthetic datasets.
"""

from .camera import (
    AngularOffset,
    CameraIntrinsics,
    FieldOfView,
    PixelOffset,
    PixelPoint,
    field_of_view,
    pixel_offset,
    pixel_to_angles,
)
from .errors import (
    AmbiguousMatchError,
    BadFilenamePatternError,
    BehindCameraError,
    DomainError,
    DuplicateFrameError,
    HorizonError,
    MissingColumnError,
    NearHorizonWarning,
    NonMonotoneTimestampError,
    OrphanDetectionError,
    OutOfFrameError,
    ParseError,
    PoleSingularityError,
    UnitRangeViolationError,
    UnknownFormatError,
    UnmatchedTrackError,
    ValueOutOfUnitRangeError,
)
from .evaluation import (
    ErrorReport,
    ErrorSample,
    SummaryStats,
    emit_report,
    read_report,
    score,
    summarize,
)
from .geodesy import (
    EARTH_RADIUS_M,
    AxisConvention,
    DegreeScale,
    EnuOffset,
    GeodeticShift,
    GeoPoint,
    apply_offset,
    degree_scale_at,
    haversine_distance,
    normalize_longitude,
    offset_to_shift,
)
from .ingestion import (
    DETECTIONS_NATIVE_CSV,
    DETECTIONS_YOLO,
    DetectionRecord,
    FrameBundle,
    TelemetryRecord,
    TruthRecord,
    join_frames,
    parse_detections,
    parse_telemetry,
    parse_truth,
    parse_yolo_labels,
    read_telemetry,
    read_truth,
)
from .oracle import EnuAnchor, LocalScene, enu_anchor, project_to_pixel, raycast_ground
from .pipeline import (
    FailedEstimate,
    FrameEstimates,
    estimate_bundle,
    estimate_frames,
    write_fixes_csv,
)
from .projection import (
    DronePose,
    GroundSolution,
    PositionFix,
    estimate_position,
    ground_geometry,
    resolve_heading,
)
from .simulator import (
    DroneKeyframe,
    NoiseModel,
    RobotKeyframe,
    RobotPath,
    ScenarioConfig,
    SimulatedDataset,
    generate,
    load_scenario,
    save_scenario,
    simulate,
    sweep,
)
from .tracking import GateConfig, Track, associate, read_tracks_csv, write_tracks_csv

__version__ = "0.1.0"

__all__ = [
    "AmbiguousMatchError", "AngularOffset", "AxisConvention",
    "BadFilenamePatternError", "BehindCameraError", "CameraIntrinsics",
    "DETECTIONS_NATIVE_CSV", "DETECTIONS_YOLO", "DegreeScale", "DetectionRecord",
    "DomainError", "DroneKeyframe", "DronePose", "DuplicateFrameError",
    "EARTH_RADIUS_M", "EnuAnchor", "EnuOffset", "ErrorReport", "ErrorSample",
    "FailedEstimate", "FieldOfView", "FrameBundle", "FrameEstimates", "GateConfig",
    "GeoPoint", "GeodeticShift", "GroundSolution", "HorizonError", "LocalScene",
    "MissingColumnError", "NearHorizonWarning", "NoiseModel",
    "NonMonotoneTimestampError", "OrphanDetectionError", "OutOfFrameError",
    "ParseError", "PixelOffset", "PixelPoint", "PoleSingularityError", "PositionFix",
    "RobotKeyframe", "RobotPath", "ScenarioConfig", "SimulatedDataset",
    "SummaryStats", "TelemetryRecord", "Track", "TruthRecord",
    "UnitRangeViolationError", "UnknownFormatError", "UnmatchedTrackError",
    "ValueOutOfUnitRangeError", "apply_offset", "associate", "degree_scale_at",
    "emit_report", "enu_anchor", "estimate_bundle", "estimate_frames",
    "estimate_position", "field_of_view", "generate", "ground_geometry",
    "haversine_distance", "join_frames", "load_scenario", "normalize_longitude",
    "offset_to_shift", "parse_detections", "parse_telemetry", "parse_truth",
    "parse_yolo_labels", "pixel_offset", "pixel_to_angles", "project_to_pixel",
    "raycast_ground", "read_report", "read_telemetry", "read_tracks_csv",
    "read_truth", "resolve_heading", "save_scenario", "score", "simulate",
    "summarize", "sweep", "write_fixes_csv", "write_tracks_csv",
]
