"""Shortest / fastest / fuel-efficient route options for a passenger trip.

Each option carries an ``emission_distance_km``: the distance that, multiplied
by a vehicle's unit emission rate, gives the trip's emissions on that route.
Congestion and speed effects are folded into it so one rate per vehicle
serves every route.
"""

from __future__ import annotations

import csv
import enum
import logging
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from ecodispatch.errors import DomainError, RowError, SchemaError
from ecodispatch.fleet import VehicleProfile

log = logging.getLogger(__name__)

KM_PER_MILE = 1.60934
ROUTE_COLUMNS = (
    "ride_id",
    "s_dist_km", "s_dur_s", "s_em_km",
    "f_dist_km", "f_dur_s", "f_em_km",
    "e_dist_km", "e_dur_s", "e_em_km",
)  # fmt: skip


class TripCategory(str, enum.Enum):
    SHORT = "Short"
    MEDIUM = "Medium"
    LONG = "Long"


class RoutePolicy(str, enum.Enum):
    SHORTEST = "shortest"
    FASTEST = "fastest"
    FUEL_EFFICIENT = "fuel_efficient"


def category_for(shortest_km: float) -> TripCategory:
    """<1 mile Short, 1-10 miles Medium, >10 miles Long."""
    miles = shortest_km / KM_PER_MILE
    if miles < 1.0:
        return TripCategory.SHORT
    if miles <= 10.0:
        return TripCategory.MEDIUM
    return TripCategory.LONG


@dataclass(frozen=True, slots=True)
class RouteOption:
    distance_km: float
    duration_s: float
    emission_distance_km: float

    def __post_init__(self) -> None:
        for name in ("distance_km", "duration_s", "emission_distance_km"):
            object.__setattr__(self, name, float(getattr(self, name)))
        if min(self.distance_km, self.duration_s, self.emission_distance_km) < 0:
            raise DomainError("route option fields must be non-negative")


@dataclass(frozen=True, slots=True)
class RouteTriple:
    shortest: RouteOption
    fastest: RouteOption
    fuel_efficient: RouteOption

    @property
    def category(self) -> TripCategory:
        return category_for(self.shortest.distance_km)

    def option(self, policy: RoutePolicy | str) -> RouteOption:
        policy = RoutePolicy(policy)
        if policy is RoutePolicy.SHORTEST:
            return self.shortest
        if policy is RoutePolicy.FASTEST:
            return self.fastest
        return self.fuel_efficient

    def violations(self) -> list[str]:
        """Dominance-ordering violations; empty when the triple is consistent."""
        s, f, e = self.shortest, self.fastest, self.fuel_efficient
        out = []
        if not (s.distance_km <= f.distance_km and s.distance_km <= e.distance_km):
            out.append("shortest route is not the shortest")
        if not (f.duration_s <= s.duration_s and f.duration_s <= e.duration_s):
            out.append("fastest route is not the fastest")
        if not (e.emission_distance_km <= s.emission_distance_km and e.emission_distance_km <= f.emission_distance_km):
            out.append("fuel-efficient route does not have the least emissions")
        for name, o in (("shortest", s), ("fastest", f), ("fuel_efficient", e)):
            if not 0.8 * o.distance_km <= o.emission_distance_km <= 1.5 * o.distance_km:
                out.append(f"{name}: emission distance outside [0.8, 1.5] x distance")
        return out


def select_route(triple: RouteTriple, policy: RoutePolicy | str) -> RouteOption:
    return triple.option(policy)


@dataclass(frozen=True)
class InflationCaps:
    """Upper bounds on the relative inflations sampled by :func:`synth_route_triple`.

    ``fastest_distance`` is per trip category; the rest are shared.
    """

    fastest_distance: Mapping[TripCategory, float] = field(
        default_factory=lambda: {
            TripCategory.SHORT: 0.03,
            TripCategory.MEDIUM: 0.05,
            TripCategory.LONG: 0.075,
        }
    )
    fastest_emission: float = 0.04  # fastest over fuel-efficient
    shortest_emission: float = 0.03  # shortest over fuel-efficient
    shortest_duration: float = 0.06  # shortest over fastest
    fuel_distance: float = 0.01  # fuel-efficient over shortest, strict
    fuel_duration: float = 0.025  # fuel-efficient over fastest, strict
    #: emission distance of the fuel-efficient route relative to its length
    congestion_range: tuple[float, float] = (0.92, 1.12)

    def validate(self) -> None:
        if any(not 0 < c <= 0.075 for c in self.fastest_distance.values()):
            raise DomainError("fastest distance caps must lie in (0, 0.075]")
        if not (0 <= self.fastest_emission <= 0.04 and 0 <= self.shortest_emission <= 0.04):
            raise DomainError("emission inflation caps must lie in [0, 0.04]")
        if not 0 < self.shortest_duration <= 0.06:
            raise DomainError("shortest duration cap must lie in (0, 0.06]")
        if not (0 < self.fuel_distance <= 0.01 and 0 < self.fuel_duration <= 0.025):
            raise DomainError("fuel-efficient caps must lie in (0, 0.01] and (0, 0.025]")
        lo, hi = self.congestion_range
        if not 0.85 <= lo <= hi <= 1.4:
            raise DomainError("congestion_range must lie within [0.85, 1.4]")


DEFAULT_CAPS = InflationCaps()


def synth_route_columns(
    base_distance_km,
    base_speed_kmh: float,
    rng: np.random.Generator,
    caps: InflationCaps = DEFAULT_CAPS,
) -> np.ndarray:
    """Vectorized :func:`synth_route_triple`: one row per base distance.

    Columns follow ``ROUTE_COLUMNS[1:]``. Row ``i`` consumes the same seven
    uniforms the scalar version would on its ``i``-th call.
    """
    d = np.asarray(base_distance_km, dtype=float).reshape(-1)
    if not (np.all(d > 0) and base_speed_kmh > 0):
        raise DomainError("base distance and speed must be positive")
    miles = d / KM_PER_MILE
    f_cap = np.where(
        miles < 1.0,
        caps.fastest_distance[TripCategory.SHORT],
        np.where(miles <= 10.0, caps.fastest_distance[TripCategory.MEDIUM], caps.fastest_distance[TripCategory.LONG]),
    )
    u = rng.uniform(0.0, 1.0, size=(d.size, 7))
    # (0, cap]: 1 - u maps [0, 1) onto (0, 1]
    f_dist = d * (1.0 + f_cap * (1.0 - u[:, 0]))
    e_dist = d * (1.0 + caps.fuel_distance * u[:, 1])
    f_dur = f_dist / base_speed_kmh * 3600.0
    s_dur = f_dur * (1.0 + caps.shortest_duration * (1.0 - u[:, 2]))
    e_dur = f_dur * (1.0 + caps.fuel_duration * u[:, 3])
    lo, hi = caps.congestion_range
    e_em = e_dist * (lo + (hi - lo) * u[:, 4])
    f_em = e_em * (1.0 + caps.fastest_emission * u[:, 5])
    s_em = e_em * (1.0 + caps.shortest_emission * u[:, 6])
    return np.column_stack([d, s_dur, s_em, f_dist, f_dur, f_em, e_dist, e_dur, e_em])


def synth_route_triple(
    base_distance_km: float,
    base_speed_kmh: float,
    rng: np.random.Generator,
    caps: InflationCaps = DEFAULT_CAPS,
) -> RouteTriple:
    """Sample a consistent route triple around a shortest-route length.

    The fastest route runs at ``base_speed_kmh``; all other quantities are
    relative inflations drawn uniformly below the caps, so every dominance
    ordering holds by construction.
    """
    row = synth_route_columns([base_distance_km], base_speed_kmh, rng, caps)[0]
    return RouteTriple(RouteOption(*row[0:3]), RouteOption(*row[3:6]), RouteOption(*row[6:9]))


def trip_emissions(v: VehicleProfile, r: RouteOption) -> float:
    """Grams CO2eq for driving route ``r`` with vehicle ``v``."""
    return v.unit_emission * r.emission_distance_km


def load_route_triples(path, report: list | None = None) -> dict[str, RouteTriple]:
    """Read a route-triples CSV; rows violating the dominance orderings are skipped.

    Rejections are appended to ``report`` as ``(line, reason)`` when given.
    """
    out: dict[str, RouteTriple] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        missing = [c for c in ROUTE_COLUMNS if c not in (reader.fieldnames or ())]
        if missing:
            raise SchemaError(f"{path}: missing columns {missing}")
        for lineno, rec in enumerate(reader, start=2):
            try:
                triple = _parse_triple(rec)
                bad = triple.violations()
                if bad:
                    raise RowError("; ".join(bad), row=lineno)
                rid = rec["ride_id"].strip()
                if not rid or rid in out:
                    raise RowError(f"empty or duplicate ride_id {rid!r}", row=lineno)
            except (RowError, DomainError, ValueError) as exc:
                log.debug("%s line %d rejected: %s", path, lineno, exc)
                if report is not None:
                    report.append((lineno, str(exc)))
                continue
            out[rid] = triple
    return out


def _parse_triple(rec) -> RouteTriple:
    opt = lambda p: RouteOption(float(rec[f"{p}_dist_km"]), float(rec[f"{p}_dur_s"]), float(rec[f"{p}_em_km"]))  # noqa: E731
    return RouteTriple(opt("s"), opt("f"), opt("e"))


def write_route_triples(triples: Mapping[str, RouteTriple], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(ROUTE_COLUMNS)
        for rid, t in triples.items():
            row = [rid]
            for o in (t.shortest, t.fastest, t.fuel_efficient):
                row += [repr(float(o.distance_km)), repr(float(o.duration_s)), repr(float(o.emission_distance_km))]
            w.writerow(row)
