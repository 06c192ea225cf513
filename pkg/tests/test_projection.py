"""The estimation chain: ground geometry, heading resolution, full fixes."""

import math
import random

import pytest

from conftest import make_intrinsics

from aquafix import (
    AngularOffset,
    AxisConvention,
    DomainError,
    DronePose,
    EnuOffset,
    GeoPoint,
    GroundSolution,
    HorizonError,
    NearHorizonWarning,
    PixelPoint,
    estimate_position,
    ground_geometry,
    resolve_heading,
)

ALPHA_30 = math.radians(30.0)
THETA_X = math.atan(0.375)  # pixel (1440, 540) through the 1080p intrinsics


def test_ground_geometry_nadir_is_all_zero():
    sol = ground_geometry(50.0, 0.0, AngularOffset(0.0, 0.0))
    assert sol.d_forward_m == 0.0
    assert sol.d_lateral_m == 0.0
    assert sol.bearing_offset_rad == 0.0
    assert sol.ground_range_m == 0.0


def test_ground_geometry_forward_only():
    # Oracle: 50 * tan(30 deg).
    sol = ground_geometry(50.0, ALPHA_30, AngularOffset(0.0, 0.0))
    assert sol.d_forward_m == pytest.approx(50.0 * math.tan(ALPHA_30), rel=1e-12)
    assert sol.d_forward_m == pytest.approx(28.867513459481287, rel=1e-12)
    assert sol.d_lateral_m == 0.0
    assert sol.bearing_offset_rad == 0.0
    assert sol.ground_range_m == pytest.approx(28.867513459481287, rel=1e-12)


def test_ground_geometry_full_example():
    sol = ground_geometry(50.0, ALPHA_30, AngularOffset(THETA_X, 0.0))
    assert sol.d_forward_m == pytest.approx(28.867513459481287, rel=1e-12)
    assert sol.d_lateral_m == pytest.approx(21.65063509461097, rel=1e-12)
    assert math.degrees(sol.bearing_offset_rad) == pytest.approx(36.86989764584403,
                                                                 rel=1e-12)
    assert sol.ground_range_m == pytest.approx(36.084391824351606, rel=1e-12)
    # Independent cross-check: the range is the hypotenuse of the two legs.
    assert sol.ground_range_m == pytest.approx(
        math.hypot(sol.d_forward_m, sol.d_lateral_m), rel=1e-12)


def test_nadir_column_bearing_convention():
    sol = ground_geometry(50.0, 0.0, AngularOffset(THETA_X, 0.0))
    assert sol.d_forward_m == 0.0
    assert sol.bearing_offset_rad == math.pi / 2.0
    negative = ground_geometry(50.0, 0.0, AngularOffset(-THETA_X, 0.0))
    assert negative.bearing_offset_rad == -math.pi / 2.0


@pytest.mark.filterwarnings("ignore::aquafix.NearHorizonWarning")
def test_range_identity_on_random_inputs():
    rng = random.Random(2024)
    for _ in range(1000):
        altitude = rng.uniform(1.0, 500.0)
        alpha = math.radians(rng.uniform(0.0, 80.0))
        theta_x = math.radians(rng.uniform(-36.8, 36.8))
        theta_y = math.radians(rng.uniform(0.0, 88.0)) - alpha
        sol = ground_geometry(altitude, alpha, AngularOffset(theta_x, theta_y))
        legs_sq = sol.d_forward_m ** 2 + sol.d_lateral_m ** 2
        assert sol.ground_range_m ** 2 == pytest.approx(legs_sq, rel=1e-12)
        offset = resolve_heading(math.radians(rng.uniform(0.0, 360.0)), sol)
        assert offset.north_m ** 2 + offset.east_m ** 2 == pytest.approx(
            sol.ground_range_m ** 2, rel=1e-12)


def test_resolve_heading_due_north():
    sol = GroundSolution(10.0, 0.0, 0.0, 10.0)
    offset = resolve_heading(0.0, sol)
    assert offset.north_m == pytest.approx(10.0, rel=1e-12)
    assert offset.east_m == 0.0


def test_resolve_heading_derived_east_facing():
    # Oracle: range times cos/sin of 90 + 36.8699 degrees.
    sol = ground_geometry(50.0, ALPHA_30, AngularOffset(THETA_X, 0.0))
    offset = resolve_heading(math.radians(90.0), sol)
    assert offset.north_m == pytest.approx(-21.65063509461096, rel=1e-11)
    assert offset.east_m == pytest.approx(28.86751345948129, rel=1e-11)


def test_estimate_at_center_with_nadir_camera_returns_drone_position(intr):
    pose = DronePose(GeoPoint(13.19, -59.64), 50.0, 123.0, 0.0)
    fix = estimate_position(pose, intr, PixelPoint(960.0, 540.0))
    assert fix.estimate == pose.position


def test_estimate_full_chain_frozen_values(intr):
    pose = DronePose(GeoPoint(13.19, -59.64), 50.0, 90.0, 30.0)
    fix = estimate_position(pose, intr, PixelPoint(1440.0, 540.0))
    assert fix.estimate.lat_deg == pytest.approx(13.189805291160775, rel=1e-12)
    assert fix.estimate.lon_deg == pytest.approx(-59.63973335375109, rel=1e-12)
    # Diagnostics are recorded all the way down.
    assert fix.solution.offset is not None
    assert fix.solution.offset.north_m == pytest.approx(-21.65063509461096, rel=1e-11)
    assert fix.solution.offset.east_m == pytest.approx(28.86751345948129, rel=1e-11)
    assert fix.angles.theta_x_rad == pytest.approx(THETA_X, rel=1e-12)
    assert fix.angles.theta_y_rad == 0.0


def test_convention_flag_changes_the_fix(intr):
    pose = DronePose(GeoPoint(13.19, -59.64), 50.0, 90.0, 30.0)
    pixel = PixelPoint(1440.0, 540.0)
    corrected = estimate_position(pose, intr, pixel, AxisConvention.CORRECTED)
    verbatim = estimate_position(pose, intr, pixel, AxisConvention.PAPER_VERBATIM)
    assert corrected.estimate != verbatim.estimate


def test_horizon_and_domain_errors():
    with pytest.raises(HorizonError):
        ground_geometry(50.0, math.radians(70.0), AngularOffset(0.0, math.radians(25.0)))
    with pytest.raises(DomainError):
        ground_geometry(0.0, ALPHA_30, AngularOffset(0.0, 0.0))
    with pytest.raises(DomainError):
        ground_geometry(-5.0, ALPHA_30, AngularOffset(0.0, 0.0))
    with pytest.raises(DomainError):
        # Ray tilted behind the nadir column.
        ground_geometry(50.0, math.radians(5.0), AngularOffset(0.0, math.radians(-10.0)))
    with pytest.raises(DomainError):
        ground_geometry(50.0, ALPHA_30, AngularOffset(math.radians(90.0), 0.0))


def test_near_horizon_warning_threshold():
    with pytest.warns(NearHorizonWarning):
        ground_geometry(50.0, math.radians(86.0), AngularOffset(0.0, 0.0))
    with pytest.warns(NearHorizonWarning):
        ground_geometry(50.0, math.radians(60.0), AngularOffset(0.0, math.radians(26.0)))
    import warnings as warnings_module
    with warnings_module.catch_warnings():
        warnings_module.simplefilter("error")
        ground_geometry(50.0, math.radians(84.0), AngularOffset(0.0, 0.0))


def test_nadir_continuity(intr):
    pose = DronePose(GeoPoint(13.19, -59.64), 50.0, 0.0, 0.0)
    sol = ground_geometry(pose.altitude_m, 0.0, AngularOffset(0.0, 1e-6))
    assert sol.d_forward_m == pytest.approx(50.0 * 1e-6, rel=1e-6)
    assert sol.ground_range_m < 1e-4


def test_heading_equivariance():
    sol = ground_geometry(50.0, ALPHA_30, AngularOffset(THETA_X, math.radians(5.0)))
    rng = random.Random(7)
    for _ in range(200):
        heading = math.radians(rng.uniform(0.0, 360.0))
        delta = math.radians(rng.uniform(-180.0, 180.0))
        base = resolve_heading(heading, sol)
        turned = resolve_heading(heading + delta, sol)
        rotated_n = base.north_m * math.cos(delta) - base.east_m * math.sin(delta)
        rotated_e = base.north_m * math.sin(delta) + base.east_m * math.cos(delta)
        scale = max(abs(turned.north_m), abs(turned.east_m), 1.0)
        assert abs(turned.north_m - rotated_n) <= 1e-12 * scale * 10
        assert abs(turned.east_m - rotated_e) <= 1e-12 * scale * 10


def test_mirror_symmetry():
    base = ground_geometry(50.0, ALPHA_30, AngularOffset(THETA_X, math.radians(4.0)))
    mirror = ground_geometry(50.0, ALPHA_30, AngularOffset(-THETA_X, math.radians(4.0)))
    assert mirror.d_lateral_m == -base.d_lateral_m
    assert mirror.bearing_offset_rad == -base.bearing_offset_rad
    assert mirror.d_forward_m == base.d_forward_m
    # In the heading frame the forward leg is unchanged, the lateral negated.
    heading = math.radians(123.0)
    b = resolve_heading(heading, base)
    m = resolve_heading(heading, mirror)
    forward_b = b.north_m * math.cos(heading) + b.east_m * math.sin(heading)
    forward_m = m.north_m * math.cos(heading) + m.east_m * math.sin(heading)
    lateral_b = -b.north_m * math.sin(heading) + b.east_m * math.cos(heading)
    lateral_m = -m.north_m * math.sin(heading) + m.east_m * math.cos(heading)
    assert forward_m == pytest.approx(forward_b, rel=1e-12, abs=1e-12)
    assert lateral_m == pytest.approx(-lateral_b, rel=1e-12, abs=1e-12)


def test_pose_validation():
    position = GeoPoint(0.0, 0.0)
    with pytest.raises(DomainError):
        DronePose(position, 0.0, 0.0, 30.0)
    with pytest.raises(DomainError):
        DronePose(position, 50.0, 0.0, 90.0)
    assert DronePose(position, 50.0, 725.0, 30.0).heading_deg == 5.0
    assert DronePose(position, 50.0, -90.0, 30.0).heading_deg == 270.0


def test_ground_solution_consistency_enforced():
    with pytest.raises(DomainError):
        GroundSolution(3.0, 4.0, math.atan2(4.0, 3.0), 6.0)
    with pytest.raises(DomainError):
        GroundSolution(3.0, 4.0, -math.atan2(4.0, 3.0), 5.0)
    with pytest.raises(DomainError):
        GroundSolution(3.0, 4.0, math.atan2(4.0, 3.0), 5.0,
                       offset=EnuOffset(5.0, 5.0))
    solution = GroundSolution(3.0, 4.0, math.atan2(4.0, 3.0), 5.0,
                              offset=EnuOffset(5.0, 0.0))
    assert solution.ground_range_m == 5.0


def test_estimate_propagates_errors_per_detection(intr):
    pose = DronePose(GeoPoint(0.0, 0.0), 50.0, 0.0, 80.0)
    # Top of the image pushes the ray past the horizon at this depression.
    with pytest.raises(HorizonError):
        estimate_position(pose, intr, PixelPoint(960.0, 0.0))
