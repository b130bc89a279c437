import numpy as np
import pytest

from ecodispatch.fleet import Powertrain, VehicleProfile
from ecodispatch.geo import GeoPoint, offset_point
from ecodispatch.ingest import AUSTIN, Dataset, TripRecord


def ice(vid, rate, fuel=None, make="Make", model="Model", year=2015):
    return VehicleProfile(vid, make, model, year, Powertrain.ICE, rate, fuel if fuel is not None else rate / 23.2)


def at(east_km, north_km=0.0):
    """Point at a local east/north offset from downtown Austin."""
    return offset_point(AUSTIN, east_km, north_km)


def trip(rid, ts, pickup, dropoff, driver, dist=None, **kw):
    return TripRecord(rid, float(ts), pickup, dropoff, driver, "Make", "Model", 2015, dist, **kw)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def tiny_dataset():
    fleet = {"D1": ice("D1", 200.0), "D2": ice("D2", 100.0)}
    trips = [
        trip("R1", 0, at(0), at(3), "D1", 3.0),
        trip("R2", 60, at(5), at(8), "D2", 3.0),
        trip("R3", 4000, at(3.5), at(0), "D1", 3.5),
    ]
    return Dataset.build(trips, fleet)


# one PASS/FAIL line per acceptance criterion, echoed at the end of the run
ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[k])
