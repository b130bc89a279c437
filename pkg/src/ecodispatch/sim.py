"""Event-driven dispatch simulator.

Requests are handled in ``(request_ts, ride_id)`` order. A driver is a
candidate for a request when it is idle or its current ride ends within
``availability_horizon_s``; a busy candidate's deadhead leg starts at its
pending drop-off once that ride ends. Requests with no candidate wait in a
FIFO queue and are retried whenever a driver enters the horizon window;
those still unserved after ``max_queue_wait_s`` are recorded as dropped.
"""

from __future__ import annotations

import csv
import enum
import logging
import math
from collections import deque
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, replace
from typing import Mapping, Sequence

import numpy as np

from ecodispatch.assign.offline import DriverStart, OfflineRequest, era_assign
from ecodispatch.assign.online import DEFAULT_E0, tora_pick
from ecodispatch.errors import ConfigError, DomainError
from ecodispatch.fleet import HEV_THRESHOLD, LEV_THRESHOLD, EmissionClass, classify_vehicle
from ecodispatch.geo import DEFAULT_DETOUR_FACTOR, haversine_array
from ecodispatch.ingest import Dataset
from ecodispatch.routing import RouteOption, RoutePolicy, RouteTriple, synth_route_triple

log = logging.getLogger(__name__)

EVENT_LOG_COLUMNS = ("ride_id", "driver_id", "phi", "deadhead_km", "deadhead_g", "trip_g", "waiting_s", "class", "dropped")


class Policy(str, enum.Enum):
    REPLAY = "replay"
    NEAREST = "nearest"
    TORA = "tora"
    ERA = "era"


@dataclass(frozen=True)
class SimConfig:
    policy: Policy = Policy.TORA
    phi: float = 1.0
    e0: float = DEFAULT_E0
    deadhead_speed_kmh: float = 30.0
    #: speed of the fastest route when route triples are synthesized
    trip_speed_kmh: float = 30.0
    #: idle-only matching by default; see README for the busy-driver trade-off
    availability_horizon_s: float = 0.0
    routing_policy: RoutePolicy = RoutePolicy.FASTEST
    #: also apply the routing policy to deadhead legs
    route_deadhead: bool = False
    detour_factor: float = DEFAULT_DETOUR_FACTOR
    seed: int = 0
    max_queue_wait_s: float = 3600.0
    lev_threshold: float = LEV_THRESHOLD
    hev_threshold: float = HEV_THRESHOLD
    era_frontier_cap: int = 10_000

    def __post_init__(self) -> None:
        object.__setattr__(self, "policy", Policy(self.policy))
        object.__setattr__(self, "routing_policy", RoutePolicy(self.routing_policy))

    def validate(self) -> None:
        if not self.e0 > 0:
            raise ConfigError("E0 must be > 0")
        if not self.phi >= 0:
            raise ConfigError("phi must be >= 0")
        if not (self.deadhead_speed_kmh > 0 and self.trip_speed_kmh > 0):
            raise ConfigError("speeds must be > 0")
        if not self.availability_horizon_s >= 0:
            raise ConfigError("availability horizon must be >= 0")
        if not self.max_queue_wait_s >= 0:
            raise ConfigError("max_queue_wait_s must be >= 0")
        if self.detour_factor < 1:
            raise ConfigError("detour_factor must be >= 1")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["policy"] = self.policy.value
        d["routing_policy"] = self.routing_policy.value
        return d


@dataclass(frozen=True, slots=True)
class RideOutcome:
    ride_id: str
    driver_id: str
    request_ts: float
    assign_ts: float
    start_ts: float  # deadhead leg begins
    pickup_ts: float
    dropoff_ts: float
    deadhead_km: float
    deadhead_emission_g: float
    trip_km: float
    trip_emission_g: float
    waiting_s: float
    vehicle_class: EmissionClass
    unit_emission: float
    n_candidates: int
    closest_driver: str | None = None
    closest_km: float = math.nan
    closest_rate: float = math.nan


@dataclass(frozen=True, slots=True)
class DroppedRequest:
    ride_id: str
    request_ts: float
    reason: str


@dataclass(frozen=True)
class SimResult:
    config: SimConfig
    rides: tuple[RideOutcome, ...]
    dropped: tuple[DroppedRequest, ...] = ()

    @property
    def n_requests(self) -> int:
        return len(self.rides) + len(self.dropped)

    def assignments(self) -> dict[str, str]:
        return {r.ride_id: r.driver_id for r in self.rides}


def _zero_triple() -> RouteTriple:
    z = RouteOption(0.0, 0.0, 0.0)
    return RouteTriple(z, z, z)


def route_triples_for(
    ds: Dataset, cfg: SimConfig, routes: Mapping[str, RouteTriple] | None = None
) -> list[RouteTriple]:
    """One triple per trip: loaded when available, otherwise synthesized from
    ``cfg.seed``, independent of the assignment policy."""
    rng = np.random.default_rng(cfg.seed)
    out = []
    for t in ds.trips:
        base = t.trip_distance_km or 0.0
        synth = synth_route_triple(base, cfg.trip_speed_kmh, rng) if base > 0 else _zero_triple()
        out.append(routes[t.ride_id] if routes and t.ride_id in routes else synth)
    return out


def _era_sequence(ds: Dataset, cfg: SimConfig, triples, driver_ids, starts) -> list[int]:
    chosen = [tr.option(cfg.routing_policy) for tr in triples]
    reqs = [
        OfflineRequest(t.ride_id, t.pickup, t.dropoff, t.request_ts, o.distance_km, o.emission_distance_km)
        for t, o in zip(ds.trips, chosen)
    ]
    fleet = [DriverStart(d, starts[d], ds.fleet[d].unit_emission) for d in driver_ids]
    plan = era_assign(
        reqs,
        fleet,
        detour_factor=cfg.detour_factor,
        speed_kmh=cfg.deadhead_speed_kmh,
        frontier_cap=cfg.era_frontier_cap,
    )
    if plan.frontier_capped:
        log.warning("ERA frontier cap %d was reached", cfg.era_frontier_cap)
    pos = {d: i for i, d in enumerate(driver_ids)}
    return [pos[r.driver_id] for r in plan.rides]


def run(ds: Dataset, cfg: SimConfig, routes: Mapping[str, RouteTriple] | None = None) -> SimResult:
    """Simulate ``ds`` under ``cfg``; deterministic in ``(ds, cfg, routes)``."""
    cfg.validate()
    trips = ds.trips
    driver_ids = ds.driver_ids
    if not trips:
        return SimResult(cfg, ())
    idx_of = {d: i for i, d in enumerate(driver_ids)}
    starts = ds.initial_positions()
    lat = np.array([starts[d].lat for d in driver_ids], dtype=float)
    lon = np.array([starts[d].lon for d in driver_ids], dtype=float)
    rate = np.array([ds.fleet[d].unit_emission for d in driver_ids], dtype=float)
    vclass = [classify_vehicle(ds.fleet[d], cfg.lev_threshold, cfg.hev_threshold) for d in driver_ids]
    free_at = np.full(len(driver_ids), -np.inf)
    triples = route_triples_for(ds, cfg, routes)
    dh_rng = np.random.default_rng([cfg.seed, 1])
    speed = cfg.deadhead_speed_kmh
    horizon = cfg.availability_horizon_s

    forced: list[int] | None = None
    if cfg.policy is Policy.ERA:
        forced = _era_sequence(ds, cfg, triples, driver_ids, starts)
    elif cfg.policy is Policy.REPLAY:
        forced = []
        for t in trips:
            if t.driver_id is None:
                raise DomainError(f"trip {t.ride_id} has no recorded driver to replay")
            forced.append(idx_of[t.driver_id])

    rides: list[RideOutcome | None] = [None] * len(trips)
    dropped: list[DroppedRequest] = []

    def try_serve(k: int, now: float) -> bool:
        t = trips[k]
        remaining = np.maximum(free_at - now, 0.0)
        closest = None
        if forced is not None:
            j = forced[k]
            n_cand = 1
        else:
            # slack absorbs rounding when retrying exactly at a horizon boundary
            cand = np.flatnonzero(remaining <= horizon + 1e-6)
            if cand.size == 0:
                return False
            dist = haversine_array(lat[cand], lon[cand], t.pickup.lat, t.pickup.lon) * cfg.detour_factor
            if cfg.policy is Policy.NEAREST:
                pick = int(np.lexsort((rate[cand], dist))[0])
                closest = pick
            else:
                dec = tora_pick(dist, rate[cand], cfg.phi, cfg.e0)
                pick, closest = dec.chosen, dec.closest
            j = int(cand[pick])
            n_cand = int(cand.size)
        dh_km = float(haversine_array(lat[j], lon[j], t.pickup.lat, t.pickup.lon)) * cfg.detour_factor
        dh_em_km = dh_km
        dh_dur = dh_km / speed * 3600.0
        if cfg.route_deadhead and dh_km > 0:
            opt = synth_route_triple(dh_km, speed, dh_rng).option(cfg.routing_policy)
            dh_km, dh_em_km, dh_dur = opt.distance_km, opt.emission_distance_km, opt.duration_s
        option = triples[k].option(cfg.routing_policy)
        start = now + float(remaining[j])
        pickup_ts = start + dh_dur
        dropoff_ts = pickup_ts + option.duration_s
        r = float(rate[j])
        rides[k] = RideOutcome(
            ride_id=t.ride_id,
            driver_id=driver_ids[j],
            request_ts=t.request_ts,
            assign_ts=now,
            start_ts=start,
            pickup_ts=pickup_ts,
            dropoff_ts=dropoff_ts,
            deadhead_km=dh_km,
            deadhead_emission_g=r * dh_em_km,
            trip_km=option.distance_km,
            trip_emission_g=r * option.emission_distance_km,
            waiting_s=pickup_ts - t.request_ts,
            vehicle_class=vclass[j],
            unit_emission=r,
            n_candidates=n_cand,
            closest_driver=None if closest is None else driver_ids[int(cand[closest])],
            closest_km=math.nan if closest is None else float(dist[closest]),
            closest_rate=math.nan if closest is None else float(rate[cand[closest]]),
        )
        free_at[j] = dropoff_ts
        lat[j], lon[j] = t.dropoff.lat, t.dropoff.lon
        return True

    queue: deque[int] = deque()
    nxt = 0
    now = -math.inf
    n = len(trips)
    while nxt < n or queue:
        t_arrive = trips[nxt].request_ts if nxt < n else math.inf
        if queue:
            t_retry = max(now, float(free_at.min()) - horizon)
            t_drop = trips[queue[0]].request_ts + cfg.max_queue_wait_s
        else:
            t_retry = t_drop = math.inf
        if t_retry <= t_drop and t_retry <= t_arrive:
            now = t_retry
            while queue and try_serve(queue[0], now):
                queue.popleft()
        elif t_drop < t_arrive:
            now = t_drop
            k = queue.popleft()
            dropped.append(DroppedRequest(trips[k].ride_id, trips[k].request_ts, "max queue wait exceeded"))
            log.info("request %s dropped after %.0f s in queue", trips[k].ride_id, cfg.max_queue_wait_s)
        else:
            now = t_arrive
            k = nxt
            nxt += 1
            if queue or not try_serve(k, now):
                queue.append(k)

    served = tuple(r for r in rides if r is not None)
    return SimResult(cfg, served, tuple(dropped))


def _run_phi(args) -> SimResult:
    ds, cfg, routes = args
    return run(ds, cfg, routes)


def sweep_phi(
    ds: Dataset,
    base_cfg: SimConfig,
    phis: Sequence[float],
    routes: Mapping[str, RouteTriple] | None = None,
    jobs: int = 1,
) -> list[tuple[float, SimResult]]:
    """Independent runs per threshold; result order follows ``phis``."""
    if not phis:
        raise ConfigError("phi list must be non-empty")
    cfgs = [replace(base_cfg, phi=float(p)) for p in phis]
    if jobs > 1 and len(cfgs) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            results = list(ex.map(_run_phi, [(ds, c, routes) for c in cfgs]))
    else:
        results = [run(ds, c, routes) for c in cfgs]
    return [(float(p), r) for p, r in zip(phis, results)]


def write_event_log(result: SimResult, dest, trips_order: Sequence[str] | None = None) -> None:
    """Per-request CSV; dropped requests appear with an empty driver and ``dropped=1``."""
    rows = {r.ride_id: r for r in result.rides}
    drops = {d.ride_id: d for d in result.dropped}
    order = trips_order or sorted(
        list(rows) + list(drops),
        key=lambda rid: ((rows[rid].request_ts if rid in rows else drops[rid].request_ts), rid),
    )
    phi = repr(float(result.config.phi))
    own = isinstance(dest, str) or hasattr(dest, "__fspath__")
    fh = open(dest, "w", newline="", encoding="utf-8") if own else dest
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(EVENT_LOG_COLUMNS)
        for rid in order:
            if rid in rows:
                r = rows[rid]
                w.writerow(
                    [rid, r.driver_id, phi, repr(r.deadhead_km), repr(r.deadhead_emission_g),
                     repr(r.trip_emission_g), repr(r.waiting_s), r.vehicle_class.value, 0]
                )  # fmt: skip
            elif rid in drops:
                w.writerow([rid, "", phi, "", "", "", "", "", 1])
    finally:
        if own:
            fh.close()
