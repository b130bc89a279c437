import io

import pytest

from ecodispatch.errors import DomainError
from ecodispatch.fleet import EmissionClass
from ecodispatch.metrics import SWEEP_COLUMNS, Summary, compare, equity, summarize, sweep_row, write_sweep_csv
from ecodispatch.sim import RideOutcome, SimConfig, SimResult

from conftest import ice

FLEET = {"L": ice("L", 100.0, 4.3), "H": ice("H", 300.0, 13.0), "S": ice("S", 200.0, 8.6)}


def ride(rid, driver, dh_km=1.0, trip_km=4.0, wait=60.0):
    rate = FLEET[driver].unit_emission
    return RideOutcome(
        ride_id=rid, driver_id=driver, request_ts=0.0, assign_ts=0.0, start_ts=0.0,
        pickup_ts=wait, dropoff_ts=wait + 600, deadhead_km=dh_km, deadhead_emission_g=rate * dh_km,
        trip_km=trip_km, trip_emission_g=rate * trip_km, waiting_s=wait,
        vehicle_class=EmissionClass.STANDARD, unit_emission=rate, n_candidates=3,
    )  # fmt: skip


def result(*rides):
    return SimResult(SimConfig(), tuple(rides))


def test_summarize_empty():
    s = summarize(result())
    assert s == Summary()


def test_summarize_totals():
    a = ride("R1", "S", dh_km=1.0, wait=30.0)  # 200 g deadhead
    b = ride("R2", "H", dh_km=1.0, wait=90.0)  # 300 g deadhead
    s = summarize(result(a, b))
    assert s.deadhead_g == 500.0
    assert s.trip_g == 200 * 4 + 300 * 4
    assert s.total_g == s.deadhead_g + s.trip_g
    assert s.mean_wait_s == 60.0 and s.max_wait_s == 90.0 >= s.mean_wait_s
    assert s.served == 2 and s.deadhead_km == 2.0


def test_compare_examples():
    same = Summary(deadhead_g=10, total_g=20, mean_wait_s=30)
    assert compare(same, same).to_dict() == {
        "deadhead_reduction_pct": 0.0,
        "total_reduction_pct": 0.0,
        "waiting_increase_pct": 0.0,
    }
    base = Summary(deadhead_g=626, total_g=1000, mean_wait_s=330)
    cand = Summary(deadhead_g=321, total_g=695, mean_wait_s=302)
    d = compare(cand, base)
    assert round(d.deadhead_reduction_pct, 1) == 48.7
    assert round(d.waiting_increase_pct, 1) == -8.5
    assert d.total_reduction_pct == pytest.approx(30.5)
    with pytest.raises(DomainError):
        compare(cand, Summary(deadhead_g=0, total_g=1, mean_wait_s=1))


def test_equity_fractions_and_ratios():
    rides = [ride("R1", "L", 2.0, 8.0), ride("R2", "H", 1.0, 4.0), ride("R3", "H", 3.0, 4.0), ride("R4", "S", 1.0, 1.0)]
    eq = equity(result(*rides), FLEET)
    assert eq[EmissionClass.LEV].ride_fraction == 0.25
    assert eq["LEV"].deadhead_to_trip == 0.25
    assert eq[EmissionClass.HEV].ride_fraction == 0.5
    assert eq[EmissionClass.HEV].deadhead_to_trip == pytest.approx((0.25 + 0.75) / 2)
    pooled = equity(result(*rides), FLEET, per_ride=False)
    assert pooled[EmissionClass.HEV].deadhead_to_trip == pytest.approx(4.0 / 8.0)
    assert sum(c.ride_fraction for c in eq.classes.values()) == pytest.approx(1.0)


def test_equity_single_lev_and_zero_trip():
    eq = equity(result(ride("R1", "L"), ride("R2", "L", 1.0, 0.0)), FLEET)
    assert eq[EmissionClass.LEV].ride_fraction == 1.0
    assert eq[EmissionClass.LEV].excluded_zero_trip == 1
    assert eq[EmissionClass.LEV].deadhead_to_trip == 0.25


def test_sweep_csv():
    r = result(ride("R1", "L"), ride("R2", "H"))
    row = sweep_row(0.1, 0.05, summarize(r), equity(r, FLEET))
    buf = io.StringIO()
    write_sweep_csv([row, row], buf)
    lines = buf.getvalue().splitlines()
    assert lines[0] == ",".join(SWEEP_COLUMNS)
    assert len(lines) == 3 and lines[1].startswith("0.1,0.05,")
