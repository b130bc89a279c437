"""Aggregate simulation results: emission totals, waiting times, baseline deltas, equity."""

from __future__ import annotations

import csv
import math
import statistics
from dataclasses import asdict, dataclass, field
from typing import Mapping, Sequence

from ecodispatch.errors import DomainError
from ecodispatch.fleet import HEV_THRESHOLD, LEV_THRESHOLD, EmissionClass, VehicleProfile, classify_vehicle
from ecodispatch.sim import SimResult

SWEEP_COLUMNS = (
    "phi",
    "lev_fraction",
    "deadhead_g",
    "total_g",
    "mean_wait_s",
    "max_wait_s",
    "lev_ride_frac",
    "hev_ride_frac",
    "lev_dh_trip",
    "hev_dh_trip",
)


@dataclass(frozen=True)
class Summary:
    deadhead_g: float = 0.0
    trip_g: float = 0.0
    total_g: float = 0.0
    mean_wait_s: float = 0.0
    max_wait_s: float = 0.0
    served: int = 0
    dropped: int = 0
    deadhead_km: float = 0.0
    trip_km: float = 0.0

    def to_dict(self) -> dict:
        return asdict(self)


def summarize(r: SimResult) -> Summary:
    """Totals over served rides; dropped requests are only counted."""
    rides = r.rides
    if not rides:
        return Summary(dropped=len(r.dropped))
    dh = math.fsum(x.deadhead_emission_g for x in rides)
    tr = math.fsum(x.trip_emission_g for x in rides)
    waits = [x.waiting_s for x in rides]
    return Summary(
        deadhead_g=dh,
        trip_g=tr,
        total_g=dh + tr,
        mean_wait_s=math.fsum(waits) / len(waits),
        max_wait_s=max(waits),
        served=len(rides),
        dropped=len(r.dropped),
        deadhead_km=math.fsum(x.deadhead_km for x in rides),
        trip_km=math.fsum(x.trip_km for x in rides),
    )


@dataclass(frozen=True)
class Deltas:
    deadhead_reduction_pct: float
    total_reduction_pct: float
    waiting_increase_pct: float

    def to_dict(self) -> dict:
        return asdict(self)


def _pct_reduction(base: float, cand: float, what: str) -> float:
    if base == 0:
        raise DomainError(f"baseline {what} is zero; relative delta undefined")
    return (base - cand) / base * 100.0


def compare(candidate: Summary, baseline: Summary) -> Deltas:
    """Percentage reductions in emissions and increase in mean waiting vs. a baseline.

    A negative waiting increase means the candidate waits less.
    """
    return Deltas(
        deadhead_reduction_pct=_pct_reduction(baseline.deadhead_g, candidate.deadhead_g, "deadhead emission"),
        total_reduction_pct=_pct_reduction(baseline.total_g, candidate.total_g, "total emission"),
        waiting_increase_pct=-_pct_reduction(baseline.mean_wait_s, candidate.mean_wait_s, "mean waiting"),
    )


@dataclass(frozen=True)
class ClassEquity:
    rides: int = 0
    ride_fraction: float = 0.0
    deadhead_to_trip: float = 0.0
    excluded_zero_trip: int = 0


@dataclass(frozen=True)
class EquityReport:
    classes: Mapping[EmissionClass, ClassEquity] = field(default_factory=dict)
    per_ride: bool = True

    def __getitem__(self, cls: EmissionClass | str) -> ClassEquity:
        return self.classes[EmissionClass(cls)]

    def to_dict(self) -> dict:
        return {"per_ride": self.per_ride, **{c.value: asdict(v) for c, v in self.classes.items()}}


def equity(
    r: SimResult,
    fleet: Mapping[str, VehicleProfile],
    *,
    per_ride: bool = True,
    lev_threshold: float = LEV_THRESHOLD,
    hev_threshold: float = HEV_THRESHOLD,
) -> EquityReport:
    """Share of served rides and deadhead-to-trip distance ratio per emission class.

    ``per_ride`` averages the per-ride ratios; otherwise the class ratio is
    total deadhead km over total trip km. Rides with zero trip distance count
    toward the fractions but not the ratio.
    """
    n = len(r.rides)
    buckets: dict[EmissionClass, list] = {c: [] for c in EmissionClass}
    for ride in r.rides:
        buckets[classify_vehicle(fleet[ride.driver_id], lev_threshold, hev_threshold)].append(ride)
    out = {}
    for cls, rides in buckets.items():
        usable = [x for x in rides if x.trip_km > 0]
        if not usable:
            ratio = 0.0
        elif per_ride:
            ratio = statistics.fmean(x.deadhead_km / x.trip_km for x in usable)
        else:
            ratio = math.fsum(x.deadhead_km for x in usable) / math.fsum(x.trip_km for x in usable)
        out[cls] = ClassEquity(
            rides=len(rides),
            ride_fraction=len(rides) / n if n else 0.0,
            deadhead_to_trip=ratio,
            excluded_zero_trip=len(rides) - len(usable),
        )
    return EquityReport(out, per_ride)


def sweep_row(phi: float, lev_fraction: float, s: Summary, eq: EquityReport) -> dict:
    return {
        "phi": phi,
        "lev_fraction": lev_fraction,
        "deadhead_g": s.deadhead_g,
        "total_g": s.total_g,
        "mean_wait_s": s.mean_wait_s,
        "max_wait_s": s.max_wait_s,
        "lev_ride_frac": eq[EmissionClass.LEV].ride_fraction,
        "hev_ride_frac": eq[EmissionClass.HEV].ride_fraction,
        "lev_dh_trip": eq[EmissionClass.LEV].deadhead_to_trip,
        "hev_dh_trip": eq[EmissionClass.HEV].deadhead_to_trip,
    }


def write_sweep_csv(rows: Sequence[Mapping], dest) -> None:
    own = isinstance(dest, str) or hasattr(dest, "__fspath__")
    fh = open(dest, "w", newline="", encoding="utf-8") if own else dest
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SWEEP_COLUMNS)
        for row in rows:
            w.writerow([repr(float(row[c])) for c in SWEEP_COLUMNS])
    finally:
        if own:
            fh.close()
