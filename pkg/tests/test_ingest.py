import io

import pytest

from ecodispatch.errors import ConfigError, DomainError, SchemaError
from ecodispatch.fleet import EmissionClass, Powertrain
from ecodispatch.ingest import (
    TRIP_COLUMNS,
    Dataset,
    EmissionTable,
    SynthConfig,
    dataset_from_text,
    dataset_to_bytes,
    gen_synthetic,
    inject_evs,
    load_trips,
    load_vehicle_emissions,
    read_column_map,
    write_trips,
    write_vehicle_emissions,
)

from conftest import ice

HEADER = ",".join(TRIP_COLUMNS) + "\n"


def row(rid, ts, driver="D1", make="Toyota", model="Prius", year=2015, plat=30.27, dist=""):
    return f"{rid},{ts},{plat},-97.74,30.30,-97.70,{driver},{make},{model},{year},{dist},,\n"


def test_empty_file():
    ds = dataset_from_text(HEADER)
    assert ds.trips == () and ds.fleet == {}
    assert ds.report.n_rejected == 0


def test_missing_column_is_schema_error():
    with pytest.raises(SchemaError):
        dataset_from_text("ride_id,request_ts\nR1,0\n")


def test_bad_latitude_row_rejected_with_line_number():
    text = HEADER + row("R1", 0) + row("R2", 10, plat=95.0) + row("R3", 20)
    ds = dataset_from_text(text)
    assert [t.ride_id for t in ds.trips] == ["R1", "R3"]
    assert ds.report.accepted == 2
    assert [line for line, _ in ds.report.rejected] == [3]


def test_other_rejections():
    text = (
        HEADER
        + row("R1", 0)
        + row("R1", 5)  # duplicate id
        + row("R2", "abc")  # bad timestamp
        + row("R3", 7, driver="")  # no driver
        + row("R4", 9, dist="-1")  # negative distance
    )
    ds = dataset_from_text(text)
    assert [t.ride_id for t in ds.trips] == ["R1"]
    assert [line for line, _ in ds.report.rejected] == [3, 4, 5, 6]


def test_rows_sorted_by_time_then_id():
    ts = [50, 10, 30, 10, 90, 70, 20, 60, 40, 80]
    text = HEADER + "".join(row(f"R{i}", t) for i, t in enumerate(ts))
    ds = dataset_from_text(text)
    assert len(ds.trips) == 10
    keys = [(t.request_ts, t.ride_id) for t in ds.trips]
    assert keys == sorted(keys)
    assert keys[:2] == [(10.0, "R1"), (10.0, "R3")]


def test_distance_filled_from_coordinates():
    ds = dataset_from_text(HEADER + row("R1", 0))
    assert ds.trips[0].trip_distance_km > 0


def test_emission_lookup_and_fallback():
    table = EmissionTable([("toyota", "PRIUS", 2015, 92.0, 4.0), ("Ford", "F150", 2015, 300.0, 13.0)])
    text = HEADER + row("R1", 0, "D1") + row("R2", 1, "D2", "Ford", "F150") + row("R3", 2, "D3", "Tesla", "Model S")
    ds = dataset_from_text(text, emissions=table)
    assert ds.fleet["D1"].unit_emission == 92.0 and not ds.fleet["D1"].imputed
    # a miss takes the median of the hits
    assert ds.fleet["D3"].unit_emission == pytest.approx(196.0)
    assert ds.fleet["D3"].imputed
    assert ds.report.imputed_vehicles == ["D3"]


def test_no_hits_uses_fixed_fallback():
    ds = dataset_from_text(HEADER + row("R1", 0))
    assert ds.fleet["D1"].unit_emission == 250.0


def test_emission_table_case_folding_and_duplicates():
    t = EmissionTable([("Toyota", "Camry", 2012, 150.0, 6.4), ("TOYOTA", "camry ", 2012, 154.0, 6.6)])
    assert len(t) == 1
    co2, fuel = t.lookup("toyota", "CAMRY", 2012)
    assert co2 == 152.0 and fuel == pytest.approx(6.5)
    assert t.warnings == []
    wide = EmissionTable([("a", "b", 1, 100.0, None), ("A", "B", 1, 150.0, None)])
    assert len(wide.warnings) == 1
    assert t.lookup("x", "y", "not-a-year") is None


def test_emission_file_round_trip(tmp_path):
    rows = [("Toyota", "Prius", 2015, 92.5, 4.0), ("Ford", "F150", 2014, 301.25, None)]
    p = tmp_path / "em.csv"
    write_vehicle_emissions(rows, p)
    t = load_vehicle_emissions(p)
    assert t.lookup("ford", "f150", 2014) == (301.25, None)
    assert t.lookup("Toyota", "Prius", 2015) == (92.5, 4.0)


def test_column_map(tmp_path):
    m = tmp_path / "map.txt"
    m.write_text("# RideAustin names\nride_id = RIDE_ID\n\nrequest_ts=created\n")
    assert read_column_map(m) == {"ride_id": "RIDE_ID", "request_ts": "created"}
    bad = tmp_path / "bad.txt"
    bad.write_text("nonsense=foo\n")
    with pytest.raises(SchemaError):
        read_column_map(bad)
    csvp = tmp_path / "t.csv"
    csvp.write_text((HEADER + row("R1", 0)).replace("ride_id", "RIDE_ID", 1))
    ds = load_trips(csvp, column_map={"ride_id": "RIDE_ID"})
    assert ds.trips[0].ride_id == "R1"


def test_round_trip_preserves_dataset(tmp_path):
    ds = gen_synthetic(SynthConfig(n_drivers=15, n_requests=80), seed=4)
    ds = inject_evs(ds, 0.3, seed=1)
    p = tmp_path / "trips.csv"
    write_trips(ds, p)
    back = load_trips(p)
    assert back == ds
    assert dataset_to_bytes(back) == dataset_to_bytes(ds)


def test_unaugmented_write_drops_vehicle_columns():
    ds = gen_synthetic(SynthConfig(n_drivers=3, n_requests=5), seed=0)
    buf = io.StringIO()
    write_trips(ds, buf, augment=False)
    assert buf.getvalue().splitlines()[0] == ",".join(TRIP_COLUMNS)


def test_dataset_invariants():
    fleet = {"D1": ice("D1", 200.0)}
    from conftest import at, trip

    a, b = trip("R1", 5, at(0), at(1), "D1"), trip("R2", 1, at(0), at(1), "D1")
    with pytest.raises(DomainError):
        Dataset((a, b), fleet)
    assert [t.ride_id for t in Dataset.build((a, b), fleet).trips] == ["R2", "R1"]
    with pytest.raises(DomainError):
        Dataset.build((trip("R3", 0, at(0), at(1), "DX"),), fleet)
    with pytest.raises(DomainError):
        trip("R4", 10, at(0), at(1), "D1", reached_ts=5.0)


def test_initial_positions(tiny_dataset):
    pos = tiny_dataset.initial_positions()
    assert pos["D1"] == tiny_dataset.trips[0].pickup
    assert pos["D2"] == tiny_dataset.trips[1].pickup


# ---------------------------------------------------------------- EV injection


def _fleet_ds(n_lev, n_ice):
    fleet = {f"L{i:03d}": ice(f"L{i:03d}", 100.0, 4.3) for i in range(n_lev)}
    fleet.update({f"I{i:04d}": ice(f"I{i:04d}", 250.0, 10.8) for i in range(n_ice)})
    return Dataset((), fleet)


def test_inject_count():
    ds = _fleet_ds(20, 1000)
    out = inject_evs(ds, 0.05, seed=3)
    evs = [d for d, v in out.fleet.items() if v.powertrain is Powertrain.EV]
    assert len(evs) == 50
    assert all(d.startswith("I") for d in evs)
    assert all(out.fleet[d].unit_emission == 63.35 for d in evs)
    assert out.fleet.keys() == ds.fleet.keys()


def test_inject_zero_is_identity_and_one_converts_all():
    ds = _fleet_ds(5, 40)
    assert inject_evs(ds, 0.0, seed=0) == ds
    full = inject_evs(ds, 1.0, seed=0)
    assert all(full.fleet[d].powertrain is Powertrain.EV for d in ds.fleet if d.startswith("I"))
    assert full.lev_fraction() == 1.0


def test_inject_determinism_and_bounds():
    ds = _fleet_ds(0, 200)
    assert inject_evs(ds, 0.3, 9) == inject_evs(ds, 0.3, 9)
    assert inject_evs(ds, 0.3, 9) != inject_evs(ds, 0.3, 10)
    for bad in (-0.1, 1.5):
        with pytest.raises(DomainError):
            inject_evs(ds, bad, 0)


# ---------------------------------------------------------------- synthetic data


def test_synthetic_deterministic():
    cfg = SynthConfig(n_drivers=30, n_requests=200)
    assert dataset_to_bytes(gen_synthetic(cfg, 7)) == dataset_to_bytes(gen_synthetic(cfg, 7))
    assert dataset_to_bytes(gen_synthetic(cfg, 7)) != dataset_to_bytes(gen_synthetic(cfg, 8))


def test_synthetic_shape():
    cfg = SynthConfig(n_drivers=200, n_requests=500, lev_fraction=0.05)
    ds = gen_synthetic(cfg, 0)
    assert len(ds.trips) == 500 and len(ds.fleet) == 200
    assert abs(ds.lev_fraction() - 0.05) <= 1 / 200
    assert all(ds.trips[0].request_ts <= t.request_ts <= cfg.start_ts + cfg.duration_s for t in ds.trips)
    assert sum(v.unit_emission < 135 for v in ds.fleet.values()) == 10


def test_synthetic_rate_profile():
    cfg = SynthConfig(n_drivers=5, n_requests=2000, rate_profile=(0.0, 1.0))
    ds = gen_synthetic(cfg, 1)
    assert all(t.request_ts - cfg.start_ts >= cfg.duration_s / 2 for t in ds.trips)


@pytest.mark.parametrize(
    "kw",
    [
        {"n_drivers": 0},
        {"lev_fraction": 1.5},
        {"extent_km": 0},
        {"rate_profile": ()},
        {"lev_emission_range": (100.0, 140.0)},
    ],
)
def test_synth_config_validation(kw):
    with pytest.raises(ConfigError):
        SynthConfig(**kw).validate()
