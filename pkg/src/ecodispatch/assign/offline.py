"""Offline assignment: the ERAP objective, frontier search (ERA) and exhaustive oracle.

An offline instance is a request sequence plus each driver's start location and
unit emission rate. A driver serves its requests in arrival order; the deadhead
leg of request ``n`` starts at the driver's start location or at the drop-off
of the previous request it served.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ecodispatch.errors import ContractError, DomainError, ResourceError
from ecodispatch.geo import DEFAULT_DETOUR_FACTOR, GeoPoint, road_distance_km, road_distance_matrix

DEFAULT_FRONTIER_CAP = 10_000
BRUTE_FORCE_LIMIT = 10**7
FRONTIER_EPS = 1e-9


@dataclass(frozen=True, slots=True)
class OfflineRequest:
    request_id: str
    pickup: GeoPoint
    dropoff: GeoPoint
    request_ts: float = 0.0
    #: passenger-trip length; defaults to the road distance pickup -> dropoff
    trip_km: float | None = None
    #: fuel-equivalent trip distance; defaults to ``trip_km``
    trip_emission_km: float | None = None


@dataclass(frozen=True, slots=True)
class DriverStart:
    driver_id: str
    location: GeoPoint
    unit_emission: float


@dataclass(frozen=True, slots=True)
class PlannedRide:
    request_id: str
    driver_id: str
    deadhead_km: float
    deadhead_emission_g: float
    trip_emission_g: float
    waiting_s: float


@dataclass(frozen=True)
class AssignmentPlan:
    """Request -> driver mapping with per-ride emissions and waiting times."""

    request_ids: tuple[str, ...]
    rides: tuple[PlannedRide, ...]
    frontier_capped: bool = False

    @property
    def pairs(self) -> dict[str, str]:
        return {r.request_id: r.driver_id for r in self.rides}

    @property
    def complete(self) -> bool:
        return len(self.rides) == len(self.request_ids) and set(self.pairs) == set(self.request_ids)

    @property
    def driver_sequence(self) -> tuple[str, ...]:
        return tuple(r.driver_id for r in self.rides)


def erap_objective(plan: AssignmentPlan) -> float:
    """Total trip plus deadhead emissions (g) of a complete plan."""
    if not plan.complete:
        raise ContractError("objective requested for an incomplete plan")
    return math.fsum(r.trip_emission_g + r.deadhead_emission_g for r in plan.rides)


class OfflineInstance:
    """Pre-computed distance tables for one request sequence and fleet."""

    def __init__(
        self,
        requests: Sequence[OfflineRequest],
        fleet_state: Sequence[DriverStart],
        detour_factor: float = DEFAULT_DETOUR_FACTOR,
        speed_kmh: float = 30.0,
    ):
        if not fleet_state:
            raise DomainError("fleet must be non-empty")
        if speed_kmh <= 0:
            raise DomainError("speed must be positive")
        self.requests = tuple(requests)
        self.drivers = tuple(sorted(fleet_state, key=lambda d: d.driver_id))
        self.speed_kmh = speed_kmh
        n = len(self.requests)
        self.rates = np.array([d.unit_emission for d in self.drivers], dtype=float)
        pickups = [r.pickup for r in self.requests]
        self.start_pick = road_distance_matrix([d.location for d in self.drivers], pickups, detour_factor)
        self.drop_pick = road_distance_matrix([r.dropoff for r in self.requests], pickups, detour_factor)
        trip_km = [
            r.trip_km if r.trip_km is not None else road_distance_km(r.pickup, r.dropoff, detour_factor)
            for r in self.requests
        ]
        self.trip_km = np.array(trip_km, dtype=float).reshape(n)
        self.trip_em = np.array(
            [r.trip_emission_km if r.trip_emission_km is not None else trip_km[i] for i, r in enumerate(self.requests)],
            dtype=float,
        ).reshape(n)
        self.e_min = float(self.rates.min())
        # deadhead lower bound: nearest start or earlier drop-off, whoever serves
        lb = np.empty(n)
        for j in range(n):
            best = self.start_pick[:, j].min()
            if j > 0:
                best = min(best, self.drop_pick[:j, j].min())
            lb[j] = best
        self.lb_deadhead_km = lb

    @property
    def n_requests(self) -> int:
        return len(self.requests)

    @property
    def n_drivers(self) -> int:
        return len(self.drivers)

    def deadhead_km(self, prev: int, m: int, n: int) -> float:
        return float(self.start_pick[m, n] if prev < 0 else self.drop_pick[prev, n])

    def lb_suffix(self, k: int, include_trip: bool = True) -> float:
        """Lower bound on the emissions of requests ``k..N-1``."""
        per = self.lb_deadhead_km[k:] + (self.trip_em[k:] if include_trip else 0.0)
        return float(per.sum()) * self.e_min

    def walk(self, seq: Sequence[int]):
        """Yield ``(n, m, deadhead_km)`` along a (partial) assignment sequence."""
        prev = [-1] * self.n_drivers
        for n, m in enumerate(seq):
            yield n, m, self.deadhead_km(prev[m], m, n)
            prev[m] = n

    def cost(self, seq: Sequence[int], include_trip: bool = True) -> float:
        total = 0.0
        for n, m, dh in self.walk(seq):
            total += self.rates[m] * (dh + (self.trip_em[n] if include_trip else 0.0))
        return float(total)

    def emission_h(self, seq: Sequence[int], include_trip: bool = True) -> float:
        """Exact emissions of the assigned prefix plus the lower bound of the rest."""
        if len(seq) > self.n_requests:
            raise DomainError("prefix longer than the request sequence")
        return self.cost(seq, include_trip) + self.lb_suffix(len(seq), include_trip)

    def plan(self, seq: Sequence[int], capped: bool = False) -> AssignmentPlan:
        free_at = [-math.inf] * self.n_drivers
        rides = []
        for n, m, dh in self.walk(seq):
            r = self.requests[n]
            rate = float(self.rates[m])
            pickup_ts = max(r.request_ts, free_at[m]) + dh / self.speed_kmh * 3600.0
            free_at[m] = pickup_ts + self.trip_km[n] / self.speed_kmh * 3600.0
            rides.append(
                PlannedRide(
                    request_id=r.request_id,
                    driver_id=self.drivers[m].driver_id,
                    deadhead_km=dh,
                    deadhead_emission_g=rate * dh,
                    trip_emission_g=rate * float(self.trip_em[n]),
                    waiting_s=pickup_ts - r.request_ts,
                )
            )
        return AssignmentPlan(tuple(r.request_id for r in self.requests), tuple(rides), capped)

    def index_sequence(self, driver_ids: Sequence[str]) -> tuple[int, ...]:
        pos = {d.driver_id: i for i, d in enumerate(self.drivers)}
        return tuple(pos[d] for d in driver_ids)


def _instance(requests, fleet_state, detour_factor, speed_kmh) -> OfflineInstance:
    if isinstance(requests, OfflineInstance):
        return requests
    return OfflineInstance(requests, fleet_state, detour_factor, speed_kmh)


def emission_h(
    partial: AssignmentPlan | Sequence[str],
    requests: Sequence[OfflineRequest],
    fleet_state: Sequence[DriverStart],
    detour_factor: float = DEFAULT_DETOUR_FACTOR,
    include_trip: bool = True,
) -> float:
    """Heuristic emission estimate of a partial assignment.

    ``partial`` assigns a prefix of ``requests`` (a plan or the driver ids in
    request order). Unassigned request ``n`` contributes the shortest road
    distance to its pickup from any driver start or any earlier drop-off,
    times the fleet's lowest unit emission.
    """
    inst = OfflineInstance(requests, fleet_state, detour_factor)
    ids = partial.driver_sequence if isinstance(partial, AssignmentPlan) else tuple(partial)
    if isinstance(partial, AssignmentPlan) and partial.request_ids[: len(ids)] != tuple(
        r.request_id for r in partial.rides
    ):
        raise ContractError("partial plan must cover a prefix of the request sequence")
    return inst.emission_h(inst.index_sequence(ids), include_trip)


def era_assign(
    requests: Sequence[OfflineRequest] | OfflineInstance,
    fleet_state: Sequence[DriverStart] = (),
    *,
    detour_factor: float = DEFAULT_DETOUR_FACTOR,
    speed_kmh: float = 30.0,
    frontier_cap: int = DEFAULT_FRONTIER_CAP,
    strict_cap: bool = False,
    eps: float = FRONTIER_EPS,
    include_trip: bool = True,
) -> AssignmentPlan:
    """Frontier search keeping every child whose heuristic ties the minimum.

    When more than ``frontier_cap`` nodes tie, the worst (then lexicographically
    largest) are dropped and the plan is flagged ``frontier_capped``; with
    ``strict_cap`` a :class:`ResourceError` is raised instead.
    """
    inst = _instance(requests, fleet_state, detour_factor, speed_kmh)
    M = inst.n_drivers
    # node: (driver sequence, last request index per driver, prefix cost)
    frontier: list[tuple[tuple[int, ...], tuple[int, ...], float]] = [((), (-1,) * M, 0.0)]
    capped = False
    for n in range(inst.n_requests):
        children = []
        for seq, prev, cost in frontier:
            for m in range(M):
                dh = inst.deadhead_km(prev[m], m, n)
                c = cost + inst.rates[m] * (dh + (inst.trip_em[n] if include_trip else 0.0))
                children.append((seq + (m,), prev[:m] + (n,) + prev[m + 1 :], float(c)))
        # the lower-bound suffix is identical for all children at this depth
        suffix = inst.lb_suffix(n + 1, include_trip)
        hs = [c + suffix for _, _, c in children]
        h_min = min(hs)
        keep = [(h, ch) for h, ch in zip(hs, children) if h <= h_min + eps * abs(h_min)]
        if len(keep) > frontier_cap:
            if strict_cap:
                raise ResourceError(
                    f"ERA frontier reached {len(keep)} nodes (cap {frontier_cap}); use a smaller instance"
                )
            keep.sort(key=lambda x: (x[0], x[1][0]))
            keep = keep[:frontier_cap]
            capped = True
        frontier = [ch for _, ch in keep]
    if not frontier or inst.n_requests == 0:
        return inst.plan((), capped)
    costs = [inst.cost(node[0]) for node in frontier]
    c_min = min(costs)
    # costs within eps of the minimum tie; the smallest driver sequence wins
    best = min(node[0] for node, c in zip(frontier, costs) if c <= c_min + eps * abs(c_min))
    return inst.plan(best, capped)


def brute_force_optimal(
    requests: Sequence[OfflineRequest] | OfflineInstance,
    fleet_state: Sequence[DriverStart] = (),
    *,
    detour_factor: float = DEFAULT_DETOUR_FACTOR,
    speed_kmh: float = 30.0,
    limit: int = BRUTE_FORCE_LIMIT,
) -> AssignmentPlan:
    """Exhaustive minimum of the objective; ties go to the lexicographically
    smallest driver sequence."""
    inst = _instance(requests, fleet_state, detour_factor, speed_kmh)
    if inst.n_drivers**inst.n_requests > limit:
        raise ResourceError(f"{inst.n_drivers}^{inst.n_requests} assignments exceed the limit {limit}")
    best_seq, best_cost = _exhaustive(inst, ())
    return inst.plan(best_seq)


def best_completion(inst: OfflineInstance, prefix: Sequence[int]) -> float:
    """Smallest objective over all completions of ``prefix`` (exhaustive)."""
    return _exhaustive(inst, tuple(prefix))[1]


def _exhaustive(inst: OfflineInstance, prefix: tuple[int, ...]) -> tuple[tuple[int, ...], float]:
    N, M = inst.n_requests, inst.n_drivers
    prev = [-1] * M
    cost = 0.0
    for n, m, dh in inst.walk(prefix):
        cost += inst.rates[m] * (dh + inst.trip_em[n])
        prev[m] = n
    best: list = [prefix, math.inf]
    seq = list(prefix)

    def rec(n: int, acc: float) -> None:
        if n == N:
            # sequences arrive in lexicographic order; near-ties keep the earlier one
            if acc < best[1] - FRONTIER_EPS * abs(best[1]) or best[1] == math.inf:
                best[0], best[1] = tuple(seq), acc
            return
        for m in range(M):
            p = prev[m]
            dh = inst.start_pick[m, n] if p < 0 else inst.drop_pick[p, n]
            prev[m] = n
            seq.append(m)
            rec(n + 1, acc + inst.rates[m] * (dh + inst.trip_em[n]))
            seq.pop()
            prev[m] = p

    rec(len(prefix), cost)
    return best[0], float(best[1])


def nearest_plan(
    requests: Sequence[OfflineRequest] | OfflineInstance,
    fleet_state: Sequence[DriverStart] = (),
    *,
    detour_factor: float = DEFAULT_DETOUR_FACTOR,
    speed_kmh: float = 30.0,
) -> AssignmentPlan:
    """Sequential nearest-driver assignment (ties: lower rate, then driver id)."""
    inst = _instance(requests, fleet_state, detour_factor, speed_kmh)
    prev = [-1] * inst.n_drivers
    seq = []
    for n in range(inst.n_requests):
        dist = np.array([inst.deadhead_km(prev[m], m, n) for m in range(inst.n_drivers)])
        m = int(np.lexsort((inst.rates, dist))[0])
        seq.append(m)
        prev[m] = n
    return inst.plan(seq)
