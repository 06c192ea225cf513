"""Estimation chain from drone pose and pixel detections to geodetic fixes.

Model: a camera at altitude A above a flat water plane, optical axis tilted
a depression angle below vertical, zero roll and zero yaw relative to the
body heading.  A detected pixel maps to angular offsets (theta_x, theta_y),
then to ground geometry

    forward   D   = A * tan(depression + theta_y)
    lateral   D_x = sqrt(A^2 + D^2) * tan(theta_x)
    bearing   beta = atan2(D_x, D)
    range     D_r = sqrt(sin(theta_x)^2 * A^2 + D^2) / cos(theta_x)

and finally through the compass heading into north/east offsets applied at
the drone position.  D_r^2 == D^2 + D_x^2 is an exact identity of these
formulas and is enforced on construction.
"""

from __future__ import annotations

import dataclasses
import math
import warnings
from dataclasses import dataclass

from .camera import AngularOffset, CameraIntrinsics, PixelPoint, pixel_to_angles
from .errors import DomainError, HorizonError, NearHorizonWarning
from .geodesy import AxisConvention, EnuOffset, GeoPoint, apply_offset

# Beyond this ray elevation the range grows so fast that fixes are noise.
DEFAULT_NEAR_HORIZON_WARN_RAD = math.radians(85.0)

_RELATIVE_CONSISTENCY_TOL = 1e-9


@dataclass(frozen=True)
class DronePose:
    """Drone state driving one frame's estimation.

    altitude_m is height above the water plane; heading_deg is clockwise
    from true north and normalized to [0, 360); depression_deg is the
    combined downward tilt of the optical axis from vertical (gimbal pitch
    plus body pitch supplied pre-combined).
    """

    position: GeoPoint
    altitude_m: float
    heading_deg: float
    depression_deg: float

    def __post_init__(self):
        if not (math.isfinite(self.altitude_m) and self.altitude_m > 0.0):
            raise DomainError(f"altitude must be positive, got {self.altitude_m}")
        if not math.isfinite(self.heading_deg):
            raise DomainError(f"non-finite heading {self.heading_deg}")
        object.__setattr__(self, "heading_deg", self.heading_deg % 360.0)
        if not 0.0 <= self.depression_deg < 90.0:
            raise DomainError(
                f"depression angle {self.depression_deg} outside [0, 90) degrees")


@dataclass(frozen=True)
class GroundSolution:
    """Intermediate ground geometry for one detection.

    Kept on every fix so per-frame error analysis can inspect the full
    chain: forward and lateral legs, bearing offset, ground range, and the
    heading-resolved north/east offset (None before heading resolution).
    """

    d_forward_m: float
    d_lateral_m: float
    bearing_offset_rad: float
    ground_range_m: float
    offset: EnuOffset | None = None

    def __post_init__(self):
        if not self.ground_range_m >= 0.0:
            raise DomainError(f"ground range must be non-negative, got {self.ground_range_m}")
        legs = math.hypot(self.d_forward_m, self.d_lateral_m)
        tol = _RELATIVE_CONSISTENCY_TOL * max(legs, 1e-6)
        if abs(legs - self.ground_range_m) > tol:
            raise DomainError("ground range inconsistent with forward/lateral legs")
        if ((self.bearing_offset_rad > 0.0) != (self.d_lateral_m > 0.0)
                or (self.bearing_offset_rad < 0.0) != (self.d_lateral_m < 0.0)):
            raise DomainError("bearing sign inconsistent with lateral shift")
        if self.offset is not None:
            span = self.offset.magnitude_m()
            if abs(span - self.ground_range_m) > _RELATIVE_CONSISTENCY_TOL * max(span, 1e-6):
                raise DomainError("offset magnitude inconsistent with ground range")


@dataclass(frozen=True)
class PositionFix:
    """One detection's estimated position plus the diagnostics that made it."""

    frame_id: int
    detection_index: int
    track_id: int | None
    estimate: GeoPoint
    solution: GroundSolution
    angles: AngularOffset


def ground_geometry(altitude_m: float, depression_rad: float, angles: AngularOffset, *,
                    near_horizon_warn_rad: float = DEFAULT_NEAR_HORIZON_WARN_RAD
                    ) -> GroundSolution:
    """Forward/lateral ground solution for one angular offset.

    Args:
        altitude_m: camera height above the water plane, > 0.
        depression_rad: optical-axis tilt from vertical, radians.
        angles: angular displacement of the detection from the axis.
        near_horizon_warn_rad: soft threshold for the amplification warning.

    Returns:
        GroundSolution without heading resolution (offset is None).

    Raises:
        HorizonError: ray elevation reaches or passes the horizon.
        DomainError: non-positive altitude, a ray tilted behind the nadir
            column, or a sideways angle of 90 degrees or more.
    """
    if not (math.isfinite(altitude_m) and altitude_m > 0.0):
        raise DomainError(f"altitude must be positive, got {altitude_m}")
    total = depression_rad + angles.theta_y_rad
    if total >= math.pi / 2.0:
        raise HorizonError(
            f"ray {math.degrees(total):.3f} deg from vertical reaches the horizon")
    if total < 0.0:
        raise DomainError(
            f"ray tilted {math.degrees(-total):.3f} deg behind the nadir column; "
            "no forward water-plane intersection")
    if not -math.pi / 2.0 < angles.theta_x_rad < math.pi / 2.0:
        raise DomainError("sideways angle must lie strictly inside (-90, 90) degrees")
    if total >= near_horizon_warn_rad:
        warnings.warn(
            f"ray {math.degrees(total):.2f} deg from vertical: range errors "
            "amplify near the horizon", NearHorizonWarning, stacklevel=2)

    d_forward = altitude_m * math.tan(total)
    slant = math.hypot(altitude_m, d_forward)
    d_lateral = slant * math.tan(angles.theta_x_rad)
    bearing = math.atan2(d_lateral, d_forward)
    sin_x = math.sin(angles.theta_x_rad)
    ground_range = (math.sqrt(sin_x * sin_x * altitude_m * altitude_m + d_forward * d_forward)
                    / math.cos(angles.theta_x_rad))
    return GroundSolution(
        d_forward_m=d_forward,
        d_lateral_m=d_lateral,
        bearing_offset_rad=bearing,
        ground_range_m=ground_range,
    )


def resolve_heading(heading_rad: float, sol: GroundSolution) -> EnuOffset:
    """Rotate a ground solution through the compass heading.

    Returns the north/east offset of the target from the drone's nadir
    point; the rotation preserves the ground range.
    """
    azimuth = heading_rad + sol.bearing_offset_rad
    return EnuOffset(
        north_m=sol.ground_range_m * math.cos(azimuth),
        east_m=sol.ground_range_m * math.sin(azimuth),
    )


def estimate_position(pose: DronePose, intr: CameraIntrinsics, p: PixelPoint,
                      convention: AxisConvention = AxisConvention.CORRECTED, *,
                      frame_id: int = 0, detection_index: int = 0,
                      track_id: int | None = None,
                      near_horizon_warn_rad: float = DEFAULT_NEAR_HORIZON_WARN_RAD
                      ) -> PositionFix:
    """Full estimation chain for one detection.

    Composes pixel_to_angles, ground_geometry, resolve_heading, and
    apply_offset; every intermediate is recorded on the returned fix.
    HorizonError and DomainError propagate so batch callers can mark the
    detection unestimable instead of aborting.
    """
    angles = pixel_to_angles(intr, p)
    sol = ground_geometry(pose.altitude_m, math.radians(pose.depression_deg), angles,
                          near_horizon_warn_rad=near_horizon_warn_rad)
    offset = resolve_heading(math.radians(pose.heading_deg), sol)
    sol = dataclasses.replace(sol, offset=offset)
    estimate = apply_offset(pose.position, offset, convention)
    return PositionFix(
        frame_id=frame_id,
        detection_index=detection_index,
        track_id=track_id,
        estimate=estimate,
        solution=sol,
        angles=angles,
    )
