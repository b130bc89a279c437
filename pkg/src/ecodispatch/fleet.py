"""Vehicle profiles, unit-distance emission rates and emission classes."""

from __future__ import annotations

import enum
from dataclasses import dataclass

from ecodispatch.errors import DomainError
from ecodispatch.geo import GeoPoint

#: g CO2eq/km assigned to every electric vehicle (Tesla Model Y on the Austin grid).
EV_UNIT_EMISSION = 63.35
#: kWh/km consistent with EV_UNIT_EMISSION at the default grid intensity.
EV_ENERGY_EFFICIENCY = 0.1553
#: Daily-average grid carbon intensity for Austin, g CO2eq/kWh.
DEFAULT_CARBON_INTENSITY = 408.0
LEV_THRESHOLD = 135.0  # g CO2eq/km, strict
HEV_THRESHOLD = 11.7  # L/100 km, inclusive (<= 20 mpg side)


class Powertrain(str, enum.Enum):
    ICE = "ICE"
    EV = "EV"


class EmissionClass(str, enum.Enum):
    LEV = "LEV"
    HEV = "HEV"
    STANDARD = "Standard"


class DriverStatus(str, enum.Enum):
    IDLE = "Idle"
    BUSY = "Busy"


@dataclass(frozen=True, slots=True)
class VehicleProfile:
    vehicle_id: str
    make: str
    model: str
    year: int
    powertrain: Powertrain
    unit_emission: float  # g CO2eq / km
    fuel_consumption: float | None = None  # L / 100 km, ICE only
    energy_efficiency: float | None = None  # kWh / km, EV only
    #: set when the emission figures came from a fallback instead of a lookup hit
    imputed: bool = False

    def __post_init__(self) -> None:
        if not self.unit_emission >= 0:
            raise DomainError(f"{self.vehicle_id}: unit_emission must be >= 0")
        if self.powertrain is Powertrain.EV and self.energy_efficiency is None:
            raise DomainError(f"{self.vehicle_id}: EV profile needs energy_efficiency")

    @property
    def is_ev(self) -> bool:
        return self.powertrain is Powertrain.EV


@dataclass(slots=True)
class DriverState:
    """Mutable driver status owned by the simulator."""

    driver_id: str
    vehicle_id: str
    location: GeoPoint
    status: DriverStatus = DriverStatus.IDLE
    busy_until: float | None = None
    pending_dropoff: GeoPoint | None = None

    def occupy(self, now: float, until: float, dropoff: GeoPoint) -> None:
        if until < now:
            raise DomainError("busy_until precedes the current time")
        self.status = DriverStatus.BUSY
        self.busy_until = until
        self.pending_dropoff = dropoff

    def release(self) -> None:
        if self.pending_dropoff is not None:
            self.location = self.pending_dropoff
        self.status = DriverStatus.IDLE
        self.busy_until = None
        self.pending_dropoff = None


def ev_unit_emission(efficiency: float, carbon_intensity: float = DEFAULT_CARBON_INTENSITY) -> float:
    """g CO2eq/km of an EV from its kWh/km rating and the grid intensity (g/kWh)."""
    if efficiency < 0 or carbon_intensity < 0:
        raise DomainError("efficiency and carbon_intensity must be non-negative")
    return efficiency * carbon_intensity


def classify_vehicle(
    v: VehicleProfile,
    lev_threshold: float = LEV_THRESHOLD,
    hev_threshold: float = HEV_THRESHOLD,
) -> EmissionClass:
    """LEV below ``lev_threshold`` g/km; HEV at or above ``hev_threshold`` L/100 km.

    Vehicles without a fuel-consumption figure can only be LEV or Standard.
    """
    if lev_threshold <= 0 or hev_threshold <= 0:
        raise DomainError("thresholds must be positive")
    if v.unit_emission < lev_threshold:
        return EmissionClass.LEV
    if v.fuel_consumption is not None and v.fuel_consumption >= hev_threshold:
        return EmissionClass.HEV
    return EmissionClass.STANDARD


def make_ev(v: VehicleProfile) -> VehicleProfile:
    """Convert a vehicle into an EV at the canonical rate, keeping make/model."""
    return VehicleProfile(
        vehicle_id=v.vehicle_id,
        make=v.make,
        model=v.model,
        year=v.year,
        powertrain=Powertrain.EV,
        unit_emission=EV_UNIT_EMISSION,
        fuel_consumption=None,
        energy_efficiency=EV_ENERGY_EFFICIENCY,
        imputed=False,
    )
