"""Geodesic helpers: haversine distance and a local equirectangular projection.

The projection is anchored at a reference point and treats the earth as
locally flat; over the <= 12 km extents the grids cover, the error against
the haversine metric is far below one grid cell.
"""

from __future__ import annotations

import math

EARTH_RADIUS_M = 6_371_000.0
KM_PER_MILE = 1.609344


def haversine_m(lat1: float, lon1: float, lat2: float, lon2: float) -> float:
    """Great-circle distance in meters between two WGS84 points."""
    phi1, lam1, phi2, lam2 = map(math.radians, (lat1, lon1, lat2, lon2))
    dphi = phi2 - phi1
    dlam = lam2 - lam1
    a = math.sin(dphi / 2) ** 2 + math.cos(phi1) * math.cos(phi2) * math.sin(dlam / 2) ** 2
    return 2 * EARTH_RADIUS_M * math.atan2(math.sqrt(a), math.sqrt(1 - a))


def haversine_km(lat1: float, lon1: float, lat2: float, lon2: float) -> float:
    return haversine_m(lat1, lon1, lat2, lon2) / 1000.0


def local_offset_m(anchor_lat: float, anchor_lon: float, lat: float, lon: float) -> tuple[float, float]:
    """(east_m, north_m) of a point relative to the anchor.

    Equirectangular: east uses the anchor latitude's circle of longitude,
    north is the meridian arc.
    """
    east = EARTH_RADIUS_M * math.radians(lon - anchor_lon) * math.cos(math.radians(anchor_lat))
    north = EARTH_RADIUS_M * math.radians(lat - anchor_lat)
    return east, north


def offset_to_latlon(anchor_lat: float, anchor_lon: float, east_m: float, north_m: float) -> tuple[float, float]:
    """Inverse of :func:`local_offset_m`; used to construct points at known offsets."""
    lat = anchor_lat + math.degrees(north_m / EARTH_RADIUS_M)
    lon = anchor_lon + math.degrees(east_m / (EARTH_RADIUS_M * math.cos(math.radians(anchor_lat))))
    return lat, lon
