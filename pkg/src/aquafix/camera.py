"""Camera intrinsics, field of view, and pixel-to-angle conversion.

Pixel coordinates use the top-left origin with y growing downward, the
usual image and detector convention.  Vertical angles are normalized so
that positive values point up-image, which for a forward-tilted camera
means farther from the observer.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DomainError


@dataclass(frozen=True)
class CameraIntrinsics:
    """Physical camera parameters.

    The focal length is a per-frame quantity (zoom may change mid-flight),
    so intrinsics ride along with every telemetry record.
    """

    focal_length_mm: float
    sensor_width_mm: float
    sensor_height_mm: float
    image_width_px: int
    image_height_px: int

    def __post_init__(self):
        for name in ("focal_length_mm", "sensor_width_mm", "sensor_height_mm"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0.0):
                raise DomainError(f"{name} must be positive, got {value}")
        for name in ("image_width_px", "image_height_px"):
            value = getattr(self, name)
            if not isinstance(value, int) or value < 1:
                raise DomainError(f"{name} must be a positive integer, got {value!r}")


@dataclass(frozen=True)
class FieldOfView:
    """Full angular extents of the image, in radians."""

    fov_x_rad: float
    fov_y_rad: float

    def __post_init__(self):
        for value in (self.fov_x_rad, self.fov_y_rad):
            if not 0.0 < value < math.pi:
                raise DomainError(f"field of view {value} rad outside (0, pi)")

    @property
    def fov_x_deg(self) -> float:
        return math.degrees(self.fov_x_rad)

    @property
    def fov_y_deg(self) -> float:
        return math.degrees(self.fov_y_rad)


@dataclass(frozen=True)
class PixelPoint:
    """Image location; subpixel values are normal for detection centers."""

    x_px: float
    y_px: float

    def __post_init__(self):
        if not (math.isfinite(self.x_px) and math.isfinite(self.y_px)):
            raise DomainError(f"non-finite pixel ({self.x_px}, {self.y_px})")


@dataclass(frozen=True)
class PixelOffset:
    """Displacement from the image center: +dx right, +dy up-image."""

    dx_px: float
    dy_px: float


@dataclass(frozen=True)
class AngularOffset:
    """Angular displacement of a ray from the optical axis.

    theta_x_rad is positive toward the right of the image, theta_y_rad
    positive toward the top (the far field for a depressed camera).
    """

    theta_x_rad: float
    theta_y_rad: float

    def __post_init__(self):
        if not (math.isfinite(self.theta_x_rad) and math.isfinite(self.theta_y_rad)):
            raise DomainError(f"non-finite angles ({self.theta_x_rad}, {self.theta_y_rad})")


def field_of_view(intr: CameraIntrinsics) -> FieldOfView:
    """Full field of view from focal length and sensor size.

    Args:
        intr: validated camera intrinsics.

    Returns:
        FieldOfView with each axis equal to twice the arctangent of the
        half-sensor over the focal length.
    """
    return FieldOfView(
        fov_x_rad=2.0 * math.atan(intr.sensor_width_mm / (2.0 * intr.focal_length_mm)),
        fov_y_rad=2.0 * math.atan(intr.sensor_height_mm / (2.0 * intr.focal_length_mm)),
    )


def pixel_offset(intr: CameraIntrinsics, p: PixelPoint) -> PixelOffset:
    """Displacement of a pixel from the image center.

    The vertical axis is flipped (dy = H/2 - y) so that +dy points
    up-image; this keeps ground distance increasing with the angle.
    """
    return PixelOffset(
        dx_px=p.x_px - intr.image_width_px / 2.0,
        dy_px=intr.image_height_px / 2.0 - p.y_px,
    )


def pixel_to_angles(intr: CameraIntrinsics, p: PixelPoint) -> AngularOffset:
    """Angular displacement of the ray through a pixel.

    The fractional offset from center scales the half-extent tangent
    (sensor half-size over focal length), so a pixel on the frame edge
    maps exactly onto half the field of view.

    Args:
        intr: camera intrinsics.
        p: pixel location, top-left origin.

    Returns:
        AngularOffset in radians; odd in each axis about the image center.
    """
    off = pixel_offset(intr, p)
    half_tan_x = intr.sensor_width_mm / (2.0 * intr.focal_length_mm)  # tan(fov_x / 2)
    half_tan_y = intr.sensor_height_mm / (2.0 * intr.focal_length_mm)
    return AngularOffset(
        theta_x_rad=math.atan(2.0 * off.dx_px / intr.image_width_px * half_tan_x),
        theta_y_rad=math.atan(2.0 * off.dy_px / intr.image_height_px * half_tan_y),
    )
