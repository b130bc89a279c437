import itertools
import math

import numpy as np
import pytest

from ecodispatch.assign import (
    AssignmentPlan,
    DriverStart,
    OfflineInstance,
    OfflineRequest,
    PlannedRide,
    best_completion,
    brute_force_optimal,
    emission_h,
    era_assign,
    erap_objective,
    nearest_plan,
)
from ecodispatch.errors import ContractError, ResourceError
from ecodispatch.geo import EARTH_RADIUS_KM, GeoPoint, road_distance_km

BASE = GeoPoint(30.0, -97.0)


def north(km, detour=1.3):
    """Point whose road distance from BASE is ``km``."""
    return GeoPoint(BASE.lat + math.degrees(km / detour / EARTH_RADIUS_KM), BASE.lon)


def tie_instance():
    req = [OfflineRequest("R1", BASE, BASE, trip_km=0.0)]
    fleet = [DriverStart("D1", north(4.0), 60.0), DriverStart("D2", north(1.0), 240.0)]
    return req, fleet


def random_instance(rng, n, m, extent=6.0):
    def pt():
        return GeoPoint(BASE.lat + float(rng.uniform(0, extent)) / 111.0, BASE.lon + float(rng.uniform(0, extent)) / 96.0)

    reqs = [OfflineRequest(f"R{i}", pt(), pt(), request_ts=60.0 * i) for i in range(n)]
    fleet = [DriverStart(f"D{j}", pt(), float(rng.uniform(60, 320))) for j in range(m)]
    return reqs, fleet


def independent_objective(reqs, fleet, drivers, detour=1.3):
    """Objective computed straight from coordinates, without the distance tables."""
    rate = {d.driver_id: d.unit_emission for d in fleet}
    where = {d.driver_id: d.location for d in fleet}
    total = 0.0
    for r, d in zip(reqs, drivers):
        dh = road_distance_km(where[d], r.pickup, detour)
        trip = road_distance_km(r.pickup, r.dropoff, detour)
        total += rate[d] * (dh + trip)
        where[d] = r.dropoff
    return total


def test_erap_objective_examples():
    assert erap_objective(AssignmentPlan((), ())) == 0.0
    ride = PlannedRide("R1", "D1", 2.0, 300.0, 750.0, 0.0)
    assert erap_objective(AssignmentPlan(("R1",), (ride,))) == 1050.0
    with pytest.raises(ContractError):
        erap_objective(AssignmentPlan(("R1", "R2"), (ride,)))


def test_emission_h_lower_bound_example():
    reqs, fleet = tie_instance()
    assert emission_h((), reqs, fleet) == pytest.approx(60.0)
    assert emission_h((), reqs, fleet, include_trip=False) == pytest.approx(60.0)
    # fully assigned: exact prefix emissions
    assert emission_h(("D1",), reqs, fleet) == pytest.approx(240.0)
    assert emission_h(("D2",), reqs, fleet) == pytest.approx(240.0)


def test_emission_h_uses_earlier_dropoffs():
    # second pickup is 0.5 km from the first drop-off but far from every start
    reqs = [
        OfflineRequest("R1", north(0.0), north(10.0), trip_km=0.0),
        OfflineRequest("R2", north(10.5), north(12.0), trip_km=0.0),
    ]
    fleet = [DriverStart("D1", north(0.0), 100.0), DriverStart("D2", north(1.0), 200.0)]
    assert emission_h((), reqs, fleet) == pytest.approx(0.5 * 100.0)
    assert emission_h(("D2",), reqs, fleet) == pytest.approx(200.0 * 1.0 + 0.5 * 100.0)


def test_era_tie_example():
    reqs, fleet = tie_instance()
    plan = era_assign(reqs, fleet)
    assert plan.pairs == {"R1": "D1"}
    assert erap_objective(plan) == pytest.approx(240.0)
    opt = brute_force_optimal(reqs, fleet)
    assert opt.pairs == {"R1": "D1"} and erap_objective(opt) == pytest.approx(240.0)


def test_empty_request_sequence():
    _, fleet = tie_instance()
    plan = era_assign([], fleet)
    assert plan.rides == () and erap_objective(plan) == 0.0


def test_brute_force_single_request():
    reqs = [OfflineRequest("R1", BASE, north(1.0))]
    fleet = [DriverStart("A", north(3.0), 100.0), DriverStart("B", north(1.0), 250.0)]
    plan = brute_force_optimal(reqs, fleet)
    # 3 km * 100 + 1 km * 100 beats 1 km * 250 + 1 km * 250
    assert plan.pairs == {"R1": "A"}
    assert erap_objective(plan) == pytest.approx(400.0)


def test_brute_force_guard():
    rng = np.random.default_rng(0)
    reqs, fleet = random_instance(rng, 15, 3)
    with pytest.raises(ResourceError):
        brute_force_optimal(reqs, fleet)


def test_frontier_cap():
    # identical drivers: every assignment ties, so the frontier doubles per request
    reqs = [OfflineRequest(f"R{i}", BASE, BASE, trip_km=0.0) for i in range(6)]
    fleet = [DriverStart("A", BASE, 100.0), DriverStart("B", BASE, 100.0)]
    with pytest.raises(ResourceError):
        era_assign(reqs, fleet, frontier_cap=8, strict_cap=True)
    plan = era_assign(reqs, fleet, frontier_cap=8)
    assert plan.frontier_capped and plan.complete
    assert plan.driver_sequence == ("A",) * 6
    assert not era_assign(reqs, fleet).frontier_capped


@pytest.mark.parametrize("seed", range(40))
def test_oracle_agreement(seed):
    rng = np.random.default_rng(seed)
    n, m = int(rng.integers(2, 6)), int(rng.integers(2, 4))
    reqs, fleet = random_instance(rng, n, m)
    era, opt, near = era_assign(reqs, fleet), brute_force_optimal(reqs, fleet), nearest_plan(reqs, fleet)
    # independent enumeration straight from coordinates
    ids = sorted(d.driver_id for d in fleet)
    best = min(independent_objective(reqs, fleet, seq) for seq in itertools.product(ids, repeat=n))
    assert erap_objective(opt) == pytest.approx(best, rel=1e-9)
    assert erap_objective(era) >= erap_objective(opt) * (1 - 1e-9)
    assert erap_objective(near) >= erap_objective(opt) * (1 - 1e-9)
    for plan in (era, opt, near):
        assert plan.complete
        assert erap_objective(plan) == pytest.approx(independent_objective(reqs, fleet, plan.driver_sequence), rel=1e-9)
        assert all(r.waiting_s >= 0 and r.deadhead_emission_g >= 0 for r in plan.rides)


@pytest.mark.parametrize("seed", range(15))
def test_admissibility_exhaustive(seed):
    rng = np.random.default_rng(1000 + seed)
    n, m = int(rng.integers(2, 5)), int(rng.integers(2, 4))
    inst = OfflineInstance(*random_instance(rng, n, m))
    for k in range(n + 1):
        for prefix in itertools.product(range(m), repeat=k):
            assert inst.emission_h(prefix) <= best_completion(inst, prefix) * (1 + 1e-12)


def test_plan_waiting_times():
    # one driver serving two requests back to back at 30 km/h
    reqs = [
        OfflineRequest("R1", north(3.0), north(6.0), request_ts=0.0),
        OfflineRequest("R2", north(6.0), north(9.0), request_ts=0.0),
    ]
    plan = era_assign(reqs, [DriverStart("D", BASE, 100.0)])
    w1, w2 = (r.waiting_s for r in plan.rides)
    assert w1 == pytest.approx(360.0)
    assert w2 == pytest.approx(720.0)
