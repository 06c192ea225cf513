"""Field of view and pixel-to-angle conversion."""

import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import make_intrinsics

from aquafix import (
    CameraIntrinsics,
    DomainError,
    PixelPoint,
    field_of_view,
    pixel_offset,
    pixel_to_angles,
)


def test_fov_is_90_degrees_when_focal_is_half_sensor():
    intr = CameraIntrinsics(6.6, 13.2, 8.8, 1920, 1080)
    assert field_of_view(intr).fov_x_rad == math.pi / 2.0


def test_fov_derived_values():
    # Oracle: direct evaluation, 2*atan(13.2 / 17.6) and 2*atan(8.8 / 17.6).
    fov = field_of_view(make_intrinsics())
    assert fov.fov_x_deg == pytest.approx(math.degrees(2.0 * math.atan(0.75)),
                                          rel=1e-12)
    assert fov.fov_x_deg == pytest.approx(73.73979529168804, rel=1e-12)
    assert fov.fov_y_deg == pytest.approx(53.13010235415598, rel=1e-12)


def test_center_pixel_has_zero_angles(intr):
    angles = pixel_to_angles(intr, PixelPoint(960.0, 540.0))
    assert angles.theta_x_rad == 0.0
    assert angles.theta_y_rad == 0.0


def test_edge_pixel_hits_exactly_half_fov(intr):
    fov = field_of_view(intr)
    right = pixel_to_angles(intr, PixelPoint(1920.0, 540.0))
    assert right.theta_x_rad == fov.fov_x_rad / 2.0
    top = pixel_to_angles(intr, PixelPoint(960.0, 0.0))
    assert top.theta_y_rad == fov.fov_y_rad / 2.0


def test_derived_angle_at_three_quarter_width(intr):
    # Oracle: atan(0.5 * tan(fov_x/2)) = atan(0.375).
    angles = pixel_to_angles(intr, PixelPoint(1440.0, 540.0))
    assert math.degrees(angles.theta_x_rad) == pytest.approx(
        math.degrees(math.atan(0.375)), rel=1e-12)
    assert math.degrees(angles.theta_x_rad) == pytest.approx(20.556045219583467,
                                                             rel=1e-12)
    assert angles.theta_y_rad == 0.0


def test_vertical_sign_points_up_image(intr):
    above_center = pixel_to_angles(intr, PixelPoint(960.0, 200.0))
    below_center = pixel_to_angles(intr, PixelPoint(960.0, 900.0))
    assert above_center.theta_y_rad > 0.0
    assert below_center.theta_y_rad < 0.0
    off = pixel_offset(intr, PixelPoint(960.0, 200.0))
    assert off.dy_px == 340.0


@given(st.integers(0, 960 * 1024), st.integers(0, 540 * 1024))
def test_angles_are_odd_about_the_center(kx, ky):
    # Offsets on a 1/1024 px grid stay exact on both sides of the center,
    # so the mirrored pixels carry exactly negated displacements.
    dx = kx / 1024.0
    dy = ky / 1024.0
    intr = make_intrinsics()
    plus = pixel_to_angles(intr, PixelPoint(960.0 + dx, 540.0 - dy))
    minus = pixel_to_angles(intr, PixelPoint(960.0 - dx, 540.0 + dy))
    assert plus.theta_x_rad == -minus.theta_x_rad
    assert plus.theta_y_rad == -minus.theta_y_rad


@given(st.lists(st.integers(0, 1920), min_size=2, max_size=8, unique=True))
def test_theta_x_strictly_increases_with_x(xs):
    intr = make_intrinsics()
    xs = sorted(xs)
    thetas = [pixel_to_angles(intr, PixelPoint(float(x), 540.0)).theta_x_rad
              for x in xs]
    assert all(a < b for a, b in zip(thetas, thetas[1:]))


@given(st.lists(st.integers(0, 1080), min_size=2, max_size=8, unique=True))
def test_theta_y_strictly_decreases_with_y(ys):
    intr = make_intrinsics()
    ys = sorted(ys)
    thetas = [pixel_to_angles(intr, PixelPoint(960.0, float(y))).theta_y_rad
              for y in ys]
    assert all(a > b for a, b in zip(thetas, thetas[1:]))


@given(st.floats(0.0, 1920.0), st.floats(0.0, 1080.0))
def test_in_image_angles_bounded_by_half_fov(x, y):
    intr = make_intrinsics()
    fov = field_of_view(intr)
    angles = pixel_to_angles(intr, PixelPoint(x, y))
    assert abs(angles.theta_x_rad) <= fov.fov_x_rad / 2.0
    assert abs(angles.theta_y_rad) <= fov.fov_y_rad / 2.0
    # Strictly inside only away from the edges; sub-ulp-from-the-edge
    # pixels round onto the bound itself.
    if 1.0 <= x <= 1919.0:
        assert abs(angles.theta_x_rad) < fov.fov_x_rad / 2.0


def test_invalid_intrinsics_rejected():
    with pytest.raises(DomainError):
        CameraIntrinsics(0.0, 13.2, 8.8, 1920, 1080)
    with pytest.raises(DomainError):
        CameraIntrinsics(8.8, -1.0, 8.8, 1920, 1080)
    with pytest.raises(DomainError):
        CameraIntrinsics(8.8, 13.2, 8.8, 0, 1080)
    with pytest.raises(DomainError):
        CameraIntrinsics(8.8, 13.2, 8.8, 1920.0, 1080)  # non-integer width
    with pytest.raises(DomainError):
        PixelPoint(float("nan"), 0.0)
