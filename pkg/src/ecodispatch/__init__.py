"""Emission-aware ride assignment, route-choice modeling and fleet simulation."""

__version__ = "0.1.0"

from ecodispatch.errors import (
    ConfigError,
    ContractError,
    DomainError,
    NoDriverError,
    ResourceError,
    RowError,
    SchemaError,
)
from ecodispatch.geo import GeoPoint, haversine_km, road_distance_km

__all__ = [
    "__version__",
    "ConfigError",
    "ContractError",
    "DomainError",
    "NoDriverError",
    "ResourceError",
    "RowError",
    "SchemaError",
    "GeoPoint",
    "haversine_km",
    "road_distance_km",
]
