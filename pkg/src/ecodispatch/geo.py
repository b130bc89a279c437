"""Great-circle and road-distance helpers.

Scalar functions take :class:`GeoPoint` values; the ``*_matrix`` / ``*_array``
variants take plain numpy arrays of degrees and are what the simulator uses
in its inner loop.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ecodispatch.errors import DomainError

EARTH_RADIUS_KM = 6371.0
DEFAULT_DETOUR_FACTOR = 1.3


@dataclass(frozen=True, slots=True)
class GeoPoint:
    lat: float
    lon: float

    def __post_init__(self) -> None:
        if not (-90.0 <= self.lat <= 90.0) or not (-180.0 <= self.lon <= 180.0):
            raise DomainError(f"invalid coordinate ({self.lat}, {self.lon})")


def haversine_km(a: GeoPoint, b: GeoPoint) -> float:
    phi1, phi2 = math.radians(a.lat), math.radians(b.lat)
    dphi = phi2 - phi1
    dlmb = math.radians(b.lon - a.lon)
    h = math.sin(dphi / 2) ** 2 + math.cos(phi1) * math.cos(phi2) * math.sin(dlmb / 2) ** 2
    # clamp guards asin against h drifting a few ulp above 1 near antipodes
    return 2.0 * EARTH_RADIUS_KM * math.asin(math.sqrt(min(1.0, h)))


def road_distance_km(a: GeoPoint, b: GeoPoint, detour_factor: float = DEFAULT_DETOUR_FACTOR) -> float:
    """Approximate road distance as great-circle distance times a detour factor."""
    if not detour_factor >= 1.0:
        raise DomainError(f"detour_factor must be >= 1, got {detour_factor}")
    return haversine_km(a, b) * detour_factor


def haversine_array(lat1, lon1, lat2, lon2) -> np.ndarray:
    """Vectorised haversine over broadcastable arrays of degrees."""
    lat1 = np.radians(np.asarray(lat1, dtype=float))
    lat2 = np.radians(np.asarray(lat2, dtype=float))
    dphi = lat2 - lat1
    dlmb = np.radians(np.asarray(lon2, dtype=float) - np.asarray(lon1, dtype=float))
    h = np.sin(dphi / 2) ** 2 + np.cos(lat1) * np.cos(lat2) * np.sin(dlmb / 2) ** 2
    return 2.0 * EARTH_RADIUS_KM * np.arcsin(np.sqrt(np.minimum(1.0, h)))


def road_distance_matrix(origins, destinations, detour_factor: float = DEFAULT_DETOUR_FACTOR) -> np.ndarray:
    """Road distances (km) between every origin and destination.

    ``origins`` and ``destinations`` are sequences of :class:`GeoPoint`;
    the result has shape ``(len(origins), len(destinations))``.
    """
    if not detour_factor >= 1.0:
        raise DomainError(f"detour_factor must be >= 1, got {detour_factor}")
    o = np.array([(p.lat, p.lon) for p in origins], dtype=float).reshape(-1, 2)
    d = np.array([(p.lat, p.lon) for p in destinations], dtype=float).reshape(-1, 2)
    return haversine_array(o[:, None, 0], o[:, None, 1], d[None, :, 0], d[None, :, 1]) * detour_factor


def offset_point(origin: GeoPoint, east_km: float, north_km: float) -> GeoPoint:
    """Point displaced from ``origin`` by a local east/north offset (equirectangular)."""
    lat = origin.lat + math.degrees(north_km / EARTH_RADIUS_KM)
    lon = origin.lon + math.degrees(east_km / (EARTH_RADIUS_KM * math.cos(math.radians(origin.lat))))
    return GeoPoint(lat, lon)
