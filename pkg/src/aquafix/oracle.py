"""Exact pinhole projection and ray-cast ground intersection.

A deliberately separate implementation path from the estimation chain,
sharing only the camera and geodesy primitives, so that chain-versus-oracle
comparisons measure real model deviation rather than confirming shared
code.  Also serves as the simulator's rendering backend.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .camera import CameraIntrinsics, PixelPoint, pixel_to_angles
from .errors import BehindCameraError, DomainError, HorizonError, OutOfFrameError
from .geodesy import (
    AxisConvention,
    DegreeScale,
    EnuOffset,
    GeoPoint,
    apply_offset,
    degree_scale_at,
    normalize_longitude,
)


@dataclass(frozen=True)
class LocalScene:
    """Camera placed in a local east/north/up frame.

    drone_enu is the camera origin (east_m, north_m, up_m) relative to the
    scene anchor; heading and depression follow the pose conventions.
    """

    drone_enu: tuple[float, float, float]
    heading_rad: float
    depression_rad: float
    intrinsics: CameraIntrinsics

    def __post_init__(self):
        east, north, up = self.drone_enu
        if not all(math.isfinite(v) for v in (east, north, up)):
            raise DomainError(f"non-finite camera position {self.drone_enu}")
        if not up > 0.0:
            raise DomainError(f"camera must sit above the water plane, got up={up}")
        if not 0.0 <= self.depression_rad < math.pi / 2.0:
            raise DomainError(
                f"depression {math.degrees(self.depression_rad)} deg outside [0, 90)")


def raycast_ground(scene: LocalScene, p: PixelPoint) -> tuple[float, float]:
    """Intersect the ray through a pixel with the water plane (up = 0).

    The ray direction in the heading-aligned frame is
    right * tan(theta_x) + image_up * tan(theta_y) + optical_axis, scaled
    until it descends to the plane, then rotated through the heading.

    Returns:
        (east_m, north_m) of the ground intersection.

    Raises:
        HorizonError: the ray does not descend to the plane ahead of the
            camera (cos(depression) - tan(theta_y) * sin(depression) <= 0).
    """
    angles = pixel_to_angles(scene.intrinsics, p)
    tan_x = math.tan(angles.theta_x_rad)
    tan_y = math.tan(angles.theta_y_rad)
    sin_a = math.sin(scene.depression_rad)
    cos_a = math.cos(scene.depression_rad)
    descent = cos_a - tan_y * sin_a
    if descent <= 0.0:
        raise HorizonError("ray through pixel does not descend to the water plane")
    east0, north0, up0 = scene.drone_enu
    reach = up0 / descent
    lateral = reach * tan_x
    forward = reach * (sin_a + cos_a * tan_y)
    sin_h = math.sin(scene.heading_rad)
    cos_h = math.cos(scene.heading_rad)
    return (
        east0 + lateral * cos_h + forward * sin_h,
        north0 - lateral * sin_h + forward * cos_h,
    )


def project_to_pixel(scene: LocalScene, target_enu: tuple[float, float]) -> PixelPoint:
    """Exact pinhole projection of a water-plane point into the image.

    Inverse of raycast_ground on its valid domain.

    Args:
        scene: camera placement.
        target_enu: (east_m, north_m) of the target on the plane.

    Returns:
        Pixel location of the target, top-left origin.

    Raises:
        BehindCameraError: non-positive depth along the optical axis.
        OutOfFrameError: projection misses the frame; the exception carries
            the off-image pixel for diagnostics.
    """
    east0, north0, up0 = scene.drone_enu
    rel_e = target_enu[0] - east0
    rel_n = target_enu[1] - north0
    sin_h = math.sin(scene.heading_rad)
    cos_h = math.cos(scene.heading_rad)
    lateral = rel_e * cos_h - rel_n * sin_h
    forward = rel_e * sin_h + rel_n * cos_h
    sin_a = math.sin(scene.depression_rad)
    cos_a = math.cos(scene.depression_rad)
    across = lateral                            # along image right
    upward = forward * cos_a - up0 * sin_a      # along image up
    depth = forward * sin_a + up0 * cos_a       # along the optical axis
    if depth <= 0.0:
        raise BehindCameraError(f"target depth {depth:.3f} m is at or behind the camera")
    intr = scene.intrinsics
    half_tan_x = intr.sensor_width_mm / (2.0 * intr.focal_length_mm)
    half_tan_y = intr.sensor_height_mm / (2.0 * intr.focal_length_mm)
    half_w = intr.image_width_px / 2.0
    half_h = intr.image_height_px / 2.0
    x_px = half_w + (across / depth) / half_tan_x * half_w
    y_px = half_h - (upward / depth) / half_tan_y * half_h
    pixel = PixelPoint(x_px, y_px)
    if not (0.0 <= x_px <= intr.image_width_px and 0.0 <= y_px <= intr.image_height_px):
        raise OutOfFrameError(
            f"projection ({x_px:.2f}, {y_px:.2f}) outside "
            f"{intr.image_width_px}x{intr.image_height_px} frame", pixel=pixel)
    return pixel


class EnuAnchor:
    """Bidirectional GeoPoint <-> local ENU converter.

    Linear tangent-plane conversion with the degree scale frozen at the
    reference latitude; intended for scene extents up to ~10 km where the
    round trip holds to nano-degree level.
    """

    def __init__(self, reference: GeoPoint):
        self.reference = reference
        self._scale: DegreeScale = degree_scale_at(reference.lat_deg)

    def to_enu(self, point: GeoPoint) -> tuple[float, float]:
        """(east_m, north_m) of a point relative to the reference."""
        dlat = point.lat_deg - self.reference.lat_deg
        dlon = normalize_longitude(point.lon_deg - self.reference.lon_deg)
        return (dlon * self._scale.meters_per_deg_lon, dlat * self._scale.meters_per_deg_lat)

    def to_geo(self, east_m: float, north_m: float) -> GeoPoint:
        """GeoPoint at a local offset from the reference.

        Raises PoleSingularityError for east-west offsets at a pole.
        """
        return apply_offset(self.reference, EnuOffset(north_m=north_m, east_m=east_m),
                            AxisConvention.CORRECTED)


def enu_anchor(reference: GeoPoint) -> EnuAnchor:
    """Build a tangent-plane converter anchored at a reference point."""
    return EnuAnchor(reference)
