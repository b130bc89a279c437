"""Trip/vehicle datasets: CSV loading and writing, EV injection, synthetic generation.

Canonical trips CSV header::

    ride_id,request_ts,pickup_lat,pickup_lon,dropoff_lat,dropoff_lon,driver_id,
    vehicle_make,vehicle_model,vehicle_year,trip_distance_km,reached_ts,completed_ts

The last three columns may be empty. Files written by :func:`write_trips`
additionally carry the per-vehicle emission columns listed in
``AUGMENT_COLUMNS``; when present on load they take precedence over the
emission lookup table.
"""

from __future__ import annotations

import csv
import io
import logging
import math
import statistics
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence, TextIO

import numpy as np

from ecodispatch.errors import ConfigError, DomainError, RowError, SchemaError
from ecodispatch.fleet import (
    HEV_THRESHOLD,
    LEV_THRESHOLD,
    EmissionClass,
    Powertrain,
    VehicleProfile,
    classify_vehicle,
    make_ev,
)
from ecodispatch.geo import DEFAULT_DETOUR_FACTOR, GeoPoint, offset_point, road_distance_km

log = logging.getLogger(__name__)

TRIP_COLUMNS = (
    "ride_id",
    "request_ts",
    "pickup_lat",
    "pickup_lon",
    "dropoff_lat",
    "dropoff_lon",
    "driver_id",
    "vehicle_make",
    "vehicle_model",
    "vehicle_year",
    "trip_distance_km",
    "reached_ts",
    "completed_ts",
)
OPTIONAL_TRIP_COLUMNS = frozenset({"trip_distance_km", "reached_ts", "completed_ts"})
AUGMENT_COLUMNS = (
    "powertrain",
    "unit_emission_g_per_km",
    "fuel_l_per_100km",
    "energy_kwh_per_km",
    "emission_imputed",
    "emission_class",
)
EMISSION_COLUMNS = ("make", "model", "year", "co2_g_per_km", "fuel_l_per_100km")

#: used for lookup misses when the table yields no hit at all
FALLBACK_UNIT_EMISSION = 250.0
#: g CO2 per litre of gasoline / 100; converts L/100 km into g/km
GASOLINE_G_PER_L_100 = 23.2


@dataclass(frozen=True, slots=True)
class TripRecord:
    ride_id: str
    request_ts: float
    pickup: GeoPoint
    dropoff: GeoPoint
    driver_id: str | None
    vehicle_make: str = ""
    vehicle_model: str = ""
    vehicle_year: int = 0
    trip_distance_km: float | None = None
    reached_ts: float | None = None
    completed_ts: float | None = None

    def __post_init__(self) -> None:
        if self.trip_distance_km is not None and not self.trip_distance_km >= 0:
            raise DomainError("trip_distance_km must be >= 0")
        chain = [t for t in (self.request_ts, self.reached_ts, self.completed_ts) if t is not None]
        if any(a > b for a, b in zip(chain, chain[1:])):
            raise DomainError("timestamps must satisfy request_ts <= reached_ts <= completed_ts")


@dataclass
class LoadReport:
    accepted: int = 0
    rejected: list[tuple[int, str]] = field(default_factory=list)
    imputed_vehicles: list[str] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)

    @property
    def n_rejected(self) -> int:
        return len(self.rejected)


@dataclass(frozen=True)
class Dataset:
    """Trips ordered by ``(request_ts, ride_id)`` plus one vehicle per driver."""

    trips: tuple[TripRecord, ...]
    fleet: Mapping[str, VehicleProfile]
    report: LoadReport | None = field(default=None, compare=False, repr=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "trips", tuple(self.trips))
        object.__setattr__(self, "fleet", dict(self.fleet))
        keys = [(t.request_ts, t.ride_id) for t in self.trips]
        if any(a >= b for a, b in zip(keys, keys[1:])):
            raise DomainError("trips must be strictly ordered by (request_ts, ride_id)")
        for t in self.trips:
            if t.driver_id is not None and t.driver_id not in self.fleet:
                raise DomainError(f"trip {t.ride_id}: driver {t.driver_id} missing from fleet")

    @classmethod
    def build(cls, trips: Iterable[TripRecord], fleet: Mapping[str, VehicleProfile], report=None) -> "Dataset":
        return cls(tuple(sorted(trips, key=lambda t: (t.request_ts, t.ride_id))), fleet, report)

    @property
    def driver_ids(self) -> list[str]:
        return sorted(self.fleet)

    def initial_positions(self) -> dict[str, GeoPoint]:
        """Where each driver starts: the pickup of its first recorded trip.

        Drivers without recorded trips start at the pickup centroid.
        """
        pos: dict[str, GeoPoint] = {}
        for t in self.trips:
            if t.driver_id is not None and t.driver_id not in pos:
                pos[t.driver_id] = t.pickup
        missing = [d for d in self.fleet if d not in pos]
        if missing:
            if self.trips:
                lat = statistics.fmean(t.pickup.lat for t in self.trips)
                lon = statistics.fmean(t.pickup.lon for t in self.trips)
                centre = GeoPoint(lat, lon)
            else:
                centre = GeoPoint(0.0, 0.0)
            for d in missing:
                pos[d] = centre
        return pos

    def lev_fraction(self, lev_threshold: float = LEV_THRESHOLD) -> float:
        if not self.fleet:
            return 0.0
        n = sum(classify_vehicle(v, lev_threshold) is EmissionClass.LEV for v in self.fleet.values())
        return n / len(self.fleet)


# --------------------------------------------------------------------------- emission lookup


class EmissionTable:
    """Case-insensitive ``(make, model, year) -> (g CO2eq/km, L/100 km)`` lookup."""

    def __init__(self, rows: Iterable[tuple[str, str, int, float, float | None]] = ()):
        grouped: dict[tuple[str, str, int], list[tuple[float, float | None]]] = {}
        for make, model, year, co2, fuel in rows:
            grouped.setdefault(self._key(make, model, year), []).append((co2, fuel))
        self.warnings: list[str] = []
        self._table: dict[tuple[str, str, int], tuple[float, float | None]] = {}
        for key, vals in grouped.items():
            co2s = [v[0] for v in vals]
            fuels = [v[1] for v in vals if v[1] is not None]
            mean_co2 = statistics.fmean(co2s)
            if len(co2s) > 1 and mean_co2 > 0 and (max(co2s) - min(co2s)) / mean_co2 > 0.2:
                msg = f"duplicate key {key} spreads more than 20% ({min(co2s)}..{max(co2s)} g/km)"
                self.warnings.append(msg)
                log.warning(msg)
            self._table[key] = (mean_co2, statistics.fmean(fuels) if fuels else None)

    @staticmethod
    def _key(make: str, model: str, year) -> tuple[str, str, int]:
        return (make.strip().casefold(), model.strip().casefold(), int(year))

    def lookup(self, make: str, model: str, year) -> tuple[float, float | None] | None:
        try:
            return self._table.get(self._key(make, model, year))
        except (TypeError, ValueError):
            return None

    def __len__(self) -> int:
        return len(self._table)


def load_vehicle_emissions(path) -> EmissionTable:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        missing = [c for c in EMISSION_COLUMNS if c not in (reader.fieldnames or ())]
        if missing:
            raise SchemaError(f"{path}: missing columns {missing}")
        rows = []
        for i, rec in enumerate(reader, start=2):
            try:
                fuel = rec["fuel_l_per_100km"].strip()
                rows.append(
                    (
                        rec["make"],
                        rec["model"],
                        int(rec["year"]),
                        float(rec["co2_g_per_km"]),
                        float(fuel) if fuel else None,
                    )
                )
            except (TypeError, ValueError) as exc:
                raise RowError(f"unparsable emission row: {exc}", row=i) from exc
    return EmissionTable(rows)


def write_vehicle_emissions(table_rows: Iterable[tuple[str, str, int, float, float | None]], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(EMISSION_COLUMNS)
        for make, model, year, co2, fuel in table_rows:
            w.writerow([make, model, year, repr(float(co2)), "" if fuel is None else repr(float(fuel))])


# --------------------------------------------------------------------------- trips CSV


def read_column_map(path) -> dict[str, str]:
    """Parse ``canonical=source`` lines; blank lines and ``#`` comments are ignored."""
    mapping: dict[str, str] = {}
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise SchemaError(f"{path}:{lineno}: expected key=value")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in TRIP_COLUMNS:
            raise SchemaError(f"{path}:{lineno}: unknown canonical column {key!r}")
        mapping[key] = value
    return mapping


def _opt_float(s: str | None) -> float | None:
    if s is None:
        return None
    s = s.strip()
    return float(s) if s else None


def _parse_trip(rec: Mapping[str, str], col: Mapping[str, str], detour_factor: float) -> TripRecord:
    get = lambda name: rec.get(col.get(name, name))  # noqa: E731
    ride_id = (get("ride_id") or "").strip()
    if not ride_id:
        raise ValueError("empty ride_id")
    driver = (get("driver_id") or "").strip() or None
    try:
        pickup = GeoPoint(float(get("pickup_lat")), float(get("pickup_lon")))
        dropoff = GeoPoint(float(get("dropoff_lat")), float(get("dropoff_lon")))
    except (TypeError, ValueError, DomainError) as exc:
        raise ValueError(f"bad coordinate: {exc}") from None
    try:
        request_ts = float(get("request_ts"))
    except (TypeError, ValueError):
        raise ValueError(f"bad request_ts {get('request_ts')!r}") from None
    if not math.isfinite(request_ts):
        raise ValueError("non-finite request_ts")
    year_s = (get("vehicle_year") or "").strip()
    dist = _opt_float(get("trip_distance_km"))
    if dist is None:
        dist = road_distance_km(pickup, dropoff, detour_factor)
    return TripRecord(
        ride_id=ride_id,
        request_ts=request_ts,
        pickup=pickup,
        dropoff=dropoff,
        driver_id=driver,
        vehicle_make=(get("vehicle_make") or "").strip(),
        vehicle_model=(get("vehicle_model") or "").strip(),
        vehicle_year=int(float(year_s)) if year_s else 0,
        trip_distance_km=dist,
        reached_ts=_opt_float(get("reached_ts")),
        completed_ts=_opt_float(get("completed_ts")),
    )


def _profile_from_augment(driver: str, trip: TripRecord, rec: Mapping[str, str]) -> VehicleProfile:
    return VehicleProfile(
        vehicle_id=driver,
        make=trip.vehicle_make,
        model=trip.vehicle_model,
        year=trip.vehicle_year,
        powertrain=Powertrain(rec["powertrain"].strip() or "ICE"),
        unit_emission=float(rec["unit_emission_g_per_km"]),
        fuel_consumption=_opt_float(rec.get("fuel_l_per_100km")),
        energy_efficiency=_opt_float(rec.get("energy_kwh_per_km")),
        imputed=(rec.get("emission_imputed") or "0").strip() in ("1", "true", "True"),
    )


def build_fleet(
    first_trips: Mapping[str, TripRecord],
    emissions: EmissionTable | None,
    report: LoadReport | None = None,
) -> dict[str, VehicleProfile]:
    """One ICE profile per driver from the emission lookup.

    Lookup misses fall back to the median of the hits (or
    ``FALLBACK_UNIT_EMISSION`` when nothing hits) and are flagged ``imputed``.
    """
    hits: dict[str, tuple[float, float | None]] = {}
    for d, t in first_trips.items():
        found = emissions.lookup(t.vehicle_make, t.vehicle_model, t.vehicle_year) if emissions else None
        if found is not None:
            hits[d] = found
    if hits:
        med_co2 = statistics.median(v[0] for v in hits.values())
        fuels = [v[1] for v in hits.values() if v[1] is not None]
        med_fuel = statistics.median(fuels) if fuels else med_co2 / GASOLINE_G_PER_L_100
    else:
        med_co2, med_fuel = FALLBACK_UNIT_EMISSION, FALLBACK_UNIT_EMISSION / GASOLINE_G_PER_L_100
    fleet: dict[str, VehicleProfile] = {}
    for d in sorted(first_trips):
        t = first_trips[d]
        co2, fuel = hits.get(d, (med_co2, med_fuel))
        imputed = d not in hits
        if imputed and report is not None:
            report.imputed_vehicles.append(d)
        fleet[d] = VehicleProfile(d, t.vehicle_make, t.vehicle_model, t.vehicle_year, Powertrain.ICE, co2, fuel, None, imputed)
    return fleet


def load_trips(
    path,
    emissions: EmissionTable | None = None,
    column_map: Mapping[str, str] | None = None,
    detour_factor: float = DEFAULT_DETOUR_FACTOR,
) -> Dataset:
    """Read and validate a trips CSV.

    Invalid rows are skipped and listed in ``dataset.report.rejected`` with
    their 1-based file line number; a missing required column raises
    :class:`SchemaError`.
    """
    col = dict(column_map or {})
    with open(path, newline="", encoding="utf-8") as fh:
        return _load_trips_stream(fh, emissions, col, detour_factor, str(path))


def _load_trips_stream(fh: TextIO, emissions, col, detour_factor, name) -> Dataset:
    reader = csv.DictReader(fh)
    header = set(reader.fieldnames or ())
    required = [c for c in TRIP_COLUMNS if c not in OPTIONAL_TRIP_COLUMNS]
    missing = [c for c in required if col.get(c, c) not in header]
    if missing:
        raise SchemaError(f"{name}: missing required columns {missing}")
    augmented = {"powertrain", "unit_emission_g_per_km"} <= header
    report = LoadReport()
    trips: list[TripRecord] = []
    seen: set[str] = set()
    first_trip: dict[str, TripRecord] = {}
    augment_rec: dict[str, Mapping[str, str]] = {}
    for lineno, rec in enumerate(reader, start=2):
        try:
            trip = _parse_trip(rec, col, detour_factor)
            if trip.ride_id in seen:
                raise ValueError(f"duplicate ride_id {trip.ride_id}")
            if trip.driver_id is None:
                raise ValueError("missing driver_id")
        except (ValueError, DomainError) as exc:
            report.rejected.append((lineno, str(exc)))
            log.debug("%s line %d rejected: %s", name, lineno, exc)
            continue
        seen.add(trip.ride_id)
        trips.append(trip)
        if trip.driver_id not in first_trip:
            first_trip[trip.driver_id] = trip
            augment_rec[trip.driver_id] = rec
    report.accepted = len(trips)
    if augmented:
        fleet = {d: _profile_from_augment(d, first_trip[d], augment_rec[d]) for d in sorted(first_trip)}
    else:
        fleet = build_fleet(first_trip, emissions, report)
    if emissions is not None:
        report.warnings.extend(emissions.warnings)
    if report.rejected:
        log.info("%s: %d rows accepted, %d rejected", name, report.accepted, report.n_rejected)
    return Dataset.build(trips, fleet, report)


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        return repr(x)
    return str(x)


def write_trips(
    ds: Dataset,
    dest,
    augment: bool = True,
    lev_threshold: float = LEV_THRESHOLD,
    hev_threshold: float = HEV_THRESHOLD,
) -> None:
    """Write ``ds`` as canonical CSV; ``augment`` appends the vehicle emission columns."""
    if isinstance(dest, (str, Path)):
        with open(dest, "w", newline="", encoding="utf-8") as fh:
            write_trips(ds, fh, augment, lev_threshold, hev_threshold)
        return
    w = csv.writer(dest, lineterminator="\n")
    w.writerow(TRIP_COLUMNS + (AUGMENT_COLUMNS if augment else ()))
    for t in ds.trips:
        row = [
            t.ride_id,
            _fmt(t.request_ts),
            _fmt(t.pickup.lat),
            _fmt(t.pickup.lon),
            _fmt(t.dropoff.lat),
            _fmt(t.dropoff.lon),
            t.driver_id or "",
            t.vehicle_make,
            t.vehicle_model,
            str(t.vehicle_year),
            _fmt(t.trip_distance_km),
            _fmt(t.reached_ts),
            _fmt(t.completed_ts),
        ]
        if augment:
            v = ds.fleet[t.driver_id]
            row += [
                v.powertrain.value,
                _fmt(v.unit_emission),
                _fmt(v.fuel_consumption),
                _fmt(v.energy_efficiency),
                "1" if v.imputed else "0",
                classify_vehicle(v, lev_threshold, hev_threshold).value,
            ]
        w.writerow(row)


def dataset_to_bytes(ds: Dataset) -> bytes:
    buf = io.StringIO()
    write_trips(ds, buf)
    return buf.getvalue().encode("utf-8")


def dataset_from_text(text: str, emissions: EmissionTable | None = None, detour_factor: float = DEFAULT_DETOUR_FACTOR) -> Dataset:
    return _load_trips_stream(io.StringIO(text), emissions, {}, detour_factor, "<string>")


# --------------------------------------------------------------------------- EV injection


def inject_evs(ds: Dataset, fraction: float, seed: int, lev_threshold: float = LEV_THRESHOLD) -> Dataset:
    """Convert ``round(fraction * #non-LEV)`` randomly chosen non-LEV vehicles into EVs."""
    if not 0.0 <= fraction <= 1.0:
        raise DomainError(f"fraction must be in [0, 1], got {fraction}")
    non_lev = sorted(d for d, v in ds.fleet.items() if classify_vehicle(v, lev_threshold) is not EmissionClass.LEV)
    k = math.floor(fraction * len(non_lev) + 0.5)
    if k == 0:
        return ds
    rng = np.random.default_rng(seed)
    chosen = {non_lev[i] for i in rng.choice(len(non_lev), size=k, replace=False)}
    fleet = {d: (make_ev(v) if d in chosen else v) for d, v in ds.fleet.items()}
    return Dataset(ds.trips, fleet, ds.report)


# --------------------------------------------------------------------------- synthetic data

AUSTIN = GeoPoint(30.2672, -97.7431)


@dataclass(frozen=True)
class SynthConfig:
    n_drivers: int = 200
    n_requests: int = 5000
    extent_km: float = 20.0
    duration_s: float = 36_000.0
    #: relative request rates over equal-length bins spanning ``duration_s``
    rate_profile: Sequence[float] = (1.0,)
    lev_fraction: float = 0.05
    lev_emission_range: tuple[float, float] = (95.0, 134.0)
    ice_emission_range: tuple[float, float] = (140.0, 320.0)
    mean_trip_km: float = 6.0
    detour_factor: float = DEFAULT_DETOUR_FACTOR
    center: GeoPoint = AUSTIN
    start_ts: float = 1_480_550_400.0  # 2016-12-01T00:00:00Z

    def validate(self) -> None:
        if self.n_drivers < 1 or self.n_requests < 0:
            raise ConfigError("need n_drivers >= 1 and n_requests >= 0")
        if not 0.0 <= self.lev_fraction <= 1.0:
            raise ConfigError(f"lev_fraction must be in [0, 1], got {self.lev_fraction}")
        if self.extent_km <= 0 or self.duration_s <= 0 or self.mean_trip_km <= 0:
            raise ConfigError("extent_km, duration_s and mean_trip_km must be positive")
        if not self.rate_profile or min(self.rate_profile) < 0 or sum(self.rate_profile) <= 0:
            raise ConfigError("rate_profile needs non-negative weights with a positive sum")
        lo, hi = self.lev_emission_range
        if not 0 <= lo <= hi < LEV_THRESHOLD:
            raise ConfigError("lev_emission_range must lie below the LEV threshold")
        lo, hi = self.ice_emission_range
        if not LEV_THRESHOLD <= lo <= hi:
            raise ConfigError("ice_emission_range must lie at or above the LEV threshold")
        if self.detour_factor < 1:
            raise ConfigError("detour_factor must be >= 1")


def gen_synthetic(cfg: SynthConfig, seed: int) -> Dataset:
    """Reproducible desk-scale dataset: uniform pickups in a square, random default drivers."""
    cfg.validate()
    rng = np.random.default_rng(seed)
    n_d = cfg.n_drivers
    driver_ids = [f"D{i:04d}" for i in range(n_d)]
    n_lev = math.floor(cfg.lev_fraction * n_d + 0.5)
    is_lev = np.zeros(n_d, dtype=bool)
    is_lev[rng.choice(n_d, size=n_lev, replace=False)] = True
    lev_rate = rng.uniform(*cfg.lev_emission_range, size=n_d)
    ice_rate = rng.uniform(*cfg.ice_emission_range, size=n_d)
    years = rng.integers(2008, 2017, size=n_d)
    fleet = {}
    for i, d in enumerate(driver_ids):
        rate = round(float(lev_rate[i] if is_lev[i] else ice_rate[i]), 2)
        fleet[d] = VehicleProfile(
            vehicle_id=d,
            make="Synth",
            model="Hybrid" if is_lev[i] else "Sedan",
            year=int(years[i]),
            powertrain=Powertrain.ICE,
            unit_emission=rate,
            fuel_consumption=round(rate / GASOLINE_G_PER_L_100, 3),
        )

    n = cfg.n_requests
    weights = np.asarray(cfg.rate_profile, dtype=float)
    bins = rng.choice(len(weights), size=n, p=weights / weights.sum())
    width = cfg.duration_s / len(weights)
    times = np.sort(np.round((bins + rng.uniform(0, 1, size=n)) * width, 3)) + cfg.start_ts
    half = cfg.extent_km / 2
    px = rng.uniform(-half, half, size=n)
    py = rng.uniform(-half, half, size=n)
    # great-circle trip length; lognormal with the requested road-distance mean
    sigma = 0.6
    mu = math.log(cfg.mean_trip_km / cfg.detour_factor) - sigma**2 / 2
    length = rng.lognormal(mu, sigma, size=n)
    angle = rng.uniform(0, 2 * math.pi, size=n)
    dx = np.clip(px + length * np.cos(angle), -half, half)
    dy = np.clip(py + length * np.sin(angle), -half, half)
    default_driver = rng.integers(0, n_d, size=n)

    trips = []
    for i in range(n):
        pickup = offset_point(cfg.center, float(px[i]), float(py[i]))
        dropoff = offset_point(cfg.center, float(dx[i]), float(dy[i]))
        pickup = GeoPoint(round(pickup.lat, 6), round(pickup.lon, 6))
        dropoff = GeoPoint(round(dropoff.lat, 6), round(dropoff.lon, 6))
        d = driver_ids[default_driver[i]]
        v = fleet[d]
        trips.append(
            TripRecord(
                ride_id=f"R{i:06d}",
                request_ts=float(times[i]),
                pickup=pickup,
                dropoff=dropoff,
                driver_id=d,
                vehicle_make=v.make,
                vehicle_model=v.model,
                vehicle_year=v.year,
                trip_distance_km=round(road_distance_km(pickup, dropoff, cfg.detour_factor), 4),
            )
        )
    return Dataset.build(trips, fleet)
