"""Spherical-Earth geodetic primitives.

Great-circle distance, degree-length scale factors, and small-offset
application, shared by the estimation chain, the ray-cast oracle, and the
evaluator.  All computation is in SI meters on a sphere of radius 6,371 km;
coordinates are decimal degrees with longitude normalized to (-180, 180].
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

from .errors import DomainError, PoleSingularityError

EARTH_RADIUS_M = 6_371_000.0
METERS_PER_FOOT = 0.3048

# Arc length of one degree along a meridian of the reference sphere.
_METERS_PER_DEG_LAT = math.pi * EARTH_RADIUS_M / 180.0

# Linear offset conversion degrades with distance; keep well inside one
# degree-scale cell.
_MAX_OFFSET_M = 100_000.0


def normalize_longitude(lon_deg: float) -> float:
    """Wrap a longitude in degrees into (-180, 180]."""
    wrapped = ((lon_deg + 180.0) % 360.0) - 180.0
    return 180.0 if wrapped == -180.0 else wrapped


class AxisConvention(enum.Enum):
    """Mapping of (north, east) meter offsets onto (lat, lon) degree shifts.

    CORRECTED is standard geodesy: north over the latitude scale, east over
    the longitude scale.  PAPER_VERBATIM reproduces the swapped pairing of
    the original method description (east over the latitude scale, north
    over the longitude scale) so that behavior stays observable.
    """

    CORRECTED = "corrected"
    PAPER_VERBATIM = "paper-verbatim"


@dataclass(frozen=True)
class GeoPoint:
    """Geodetic position in decimal degrees on the reference sphere."""

    lat_deg: float
    lon_deg: float

    def __post_init__(self):
        if not (math.isfinite(self.lat_deg) and math.isfinite(self.lon_deg)):
            raise DomainError(f"non-finite coordinates ({self.lat_deg}, {self.lon_deg})")
        if not -90.0 <= self.lat_deg <= 90.0:
            raise DomainError(f"latitude {self.lat_deg} outside [-90, 90]")
        object.__setattr__(self, "lon_deg", normalize_longitude(self.lon_deg))


@dataclass(frozen=True)
class EnuOffset:
    """Local-tangent-plane displacement in meters."""

    north_m: float
    east_m: float

    def __post_init__(self):
        if not (math.isfinite(self.north_m) and math.isfinite(self.east_m)):
            raise DomainError(f"non-finite offset ({self.north_m}, {self.east_m})")

    def magnitude_m(self) -> float:
        return math.hypot(self.north_m, self.east_m)


@dataclass(frozen=True)
class DegreeScale:
    """Meters per degree of latitude and longitude at a reference latitude."""

    meters_per_deg_lat: float
    meters_per_deg_lon: float
    reference_lat_deg: float

    def __post_init__(self):
        if self.meters_per_deg_lat <= 0.0 or self.meters_per_deg_lon < 0.0:
            raise DomainError("degree scale factors out of range")

    @property
    def feet_per_deg_lat(self) -> float:
        """Imperial view of the latitude scale (read-only)."""
        return self.meters_per_deg_lat / METERS_PER_FOOT

    @property
    def feet_per_deg_lon(self) -> float:
        """Imperial view of the longitude scale (read-only)."""
        return self.meters_per_deg_lon / METERS_PER_FOOT


@dataclass(frozen=True)
class GeodeticShift:
    """Latitude/longitude displacement in degrees."""

    dlat_deg: float
    dlon_deg: float

    def __post_init__(self):
        if not (math.isfinite(self.dlat_deg) and math.isfinite(self.dlon_deg)):
            raise DomainError(f"non-finite shift ({self.dlat_deg}, {self.dlon_deg})")


def haversine_distance(a: GeoPoint, b: GeoPoint) -> float:
    """Great-circle distance in meters between two points.

    Args:
        a, b: geodetic positions.

    Returns:
        Spherical distance in meters; symmetric, non-negative, and zero
        exactly when the normalized points coincide.
    """
    phi1 = math.radians(a.lat_deg)
    phi2 = math.radians(b.lat_deg)
    dphi = math.radians(b.lat_deg - a.lat_deg)
    dlmb = math.radians(normalize_longitude(b.lon_deg - a.lon_deg))
    h = math.sin(dphi / 2.0) ** 2 + math.cos(phi1) * math.cos(phi2) * math.sin(dlmb / 2.0) ** 2
    # Rounding can push h a hair past 1 for near-antipodal pairs.
    central = 2.0 * math.asin(min(1.0, math.sqrt(h)))
    return EARTH_RADIUS_M * central


def degree_scale_at(lat_deg: float) -> DegreeScale:
    """Degree-length factors at a given latitude.

    Args:
        lat_deg: reference latitude in [-90, 90].

    Returns:
        DegreeScale with the longitude factor shrunk by cos(latitude);
        exactly zero at the poles.

    Raises:
        DomainError: latitude outside [-90, 90] or non-finite.
    """
    if not (math.isfinite(lat_deg) and -90.0 <= lat_deg <= 90.0):
        raise DomainError(f"latitude {lat_deg} outside [-90, 90]")
    cos_lat = 0.0 if abs(lat_deg) == 90.0 else math.cos(math.radians(lat_deg))
    return DegreeScale(
        meters_per_deg_lat=_METERS_PER_DEG_LAT,
        meters_per_deg_lon=_METERS_PER_DEG_LAT * cos_lat,
        reference_lat_deg=lat_deg,
    )


def offset_to_shift(offset: EnuOffset, scale: DegreeScale,
                    convention: AxisConvention = AxisConvention.CORRECTED) -> GeodeticShift:
    """Convert a meter offset into a degree shift under the chosen convention.

    Raises:
        PoleSingularityError: the longitude denominator is zero while the
            corresponding offset component is not.
    """
    if convention is AxisConvention.CORRECTED:
        lat_numerator, lon_numerator = offset.north_m, offset.east_m
    else:
        lat_numerator, lon_numerator = offset.east_m, offset.north_m
    if scale.meters_per_deg_lon == 0.0 and lon_numerator != 0.0:
        raise PoleSingularityError(
            f"longitude shift undefined at latitude {scale.reference_lat_deg}")
    dlon = 0.0 if lon_numerator == 0.0 else lon_numerator / scale.meters_per_deg_lon
    return GeodeticShift(dlat_deg=lat_numerator / scale.meters_per_deg_lat, dlon_deg=dlon)


def apply_offset(origin: GeoPoint, offset: EnuOffset,
                 convention: AxisConvention = AxisConvention.CORRECTED) -> GeoPoint:
    """Displace a point by a small local offset.

    The degree scale is evaluated at the origin latitude, which keeps the
    conversion linear; offsets are capped at 100 km where that model holds.

    Args:
        origin: starting position.
        offset: north/east displacement in meters.
        convention: axis pairing, CORRECTED by default.

    Returns:
        Displaced GeoPoint with longitude renormalized.

    Raises:
        DomainError: offset too large for the linear conversion.
        PoleSingularityError: east-west displacement at a pole.
    """
    if offset.magnitude_m() > _MAX_OFFSET_M:
        raise DomainError(f"offset {offset.magnitude_m():.0f} m exceeds the "
                          f"{_MAX_OFFSET_M:.0f} m linear-conversion cap")
    scale = degree_scale_at(origin.lat_deg)
    shift = offset_to_shift(offset, scale, convention)
    return GeoPoint(origin.lat_deg + shift.dlat_deg, origin.lon_deg + shift.dlon_deg)
