"""Command-line entry point.

Exit codes: 0 success, 1 data/runtime error, 2 usage error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from ecodispatch import __version__
from ecodispatch.assign.offline import (
    DriverStart,
    OfflineInstance,
    OfflineRequest,
    brute_force_optimal,
    era_assign,
    erap_objective,
    nearest_plan,
)
from ecodispatch.errors import EcoDispatchError
from ecodispatch.fleet import HEV_THRESHOLD, LEV_THRESHOLD
from ecodispatch.geo import DEFAULT_DETOUR_FACTOR, GeoPoint, offset_point
from ecodispatch.ingest import (
    AUSTIN,
    Dataset,
    SynthConfig,
    gen_synthetic,
    inject_evs,
    load_trips,
    load_vehicle_emissions,
    read_column_map,
    write_trips,
)
from ecodispatch.metrics import compare, equity, summarize, sweep_row, write_sweep_csv
from ecodispatch.routing import RoutePolicy, load_route_triples, write_route_triples
from ecodispatch.sim import Policy, SimConfig, route_triples_for, run, write_event_log

log = logging.getLogger("ecodispatch")

# arguments that never influence a report's payload
_NOT_IN_MANIFEST = {"out", "jobs", "config", "verbose", "command", "func"}


def _nonneg_float(s: str) -> float:
    try:
        v = float(s)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {s!r}") from None
    if not v >= 0 or math.isinf(v):
        raise argparse.ArgumentTypeError(f"must be a finite value >= 0, got {s}")
    return v


def _pos_float(s: str) -> float:
    v = _nonneg_float(s)
    if v == 0:
        raise argparse.ArgumentTypeError("must be > 0")
    return v


def _fraction(s: str) -> float:
    v = _nonneg_float(s)
    if v > 1:
        raise argparse.ArgumentTypeError(f"must lie in [0, 1], got {s}")
    return v


def _float_list(kind):
    def parse(s: str) -> list[float]:
        items = [x.strip() for x in s.split(",") if x.strip()]
        if not items:
            raise argparse.ArgumentTypeError("empty list")
        return [kind(x) for x in items]

    return parse


def _detour(s: str) -> float:
    v = _pos_float(s)
    if v < 1:
        raise argparse.ArgumentTypeError("detour factor must be >= 1")
    return v


# --------------------------------------------------------------------------- manifest / output


def file_digest(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def run_manifest(args: argparse.Namespace, ds: Dataset | None = None) -> dict:
    """Resolved configuration, input digests and the data's time window.

    Wall-clock time is deliberately absent so reruns are byte-identical.
    """
    cfg = {k: v for k, v in sorted(vars(args).items()) if k not in _NOT_IN_MANIFEST}
    inputs = {}
    for key in ("trips", "emissions", "routes", "column_map"):
        p = getattr(args, key, None)
        if p:
            inputs[key] = {"file": Path(p).name, "sha256": file_digest(p)}
    m = {
        "tool": "ecodispatch",
        "version": __version__,
        "command": args.command,
        "config": cfg,
        "inputs": inputs,
        "seed": getattr(args, "seed", None),
    }
    if ds is not None:
        m["dataset"] = {
            "trips": len(ds.trips),
            "drivers": len(ds.fleet),
            "first_request_ts": ds.trips[0].request_ts if ds.trips else None,
            "last_request_ts": ds.trips[-1].request_ts if ds.trips else None,
            "rejected_rows": ds.report.n_rejected if ds.report else 0,
        }
    return m


def _dump_json(obj, path: Path) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True, allow_nan=False) + "\n", encoding="utf-8")


def _sidecar(path: Path, manifest: dict) -> None:
    _dump_json({"manifest": manifest}, path.with_name(path.name + ".manifest.json"))


# --------------------------------------------------------------------------- shared loading


def _load_dataset(args) -> Dataset:
    emissions = load_vehicle_emissions(args.emissions) if getattr(args, "emissions", None) else None
    cmap = read_column_map(args.column_map) if getattr(args, "column_map", None) else None
    ds = load_trips(args.trips, emissions, cmap, detour_factor=args.detour)
    if ds.report and ds.report.rejected:
        for line, why in ds.report.rejected[:20]:
            print(f"{args.trips}:{line}: rejected: {why}", file=sys.stderr)
        print(f"{ds.report.accepted} rows accepted, {ds.report.n_rejected} rejected", file=sys.stderr)
    if getattr(args, "ev_fraction", 0.0):
        ds = inject_evs(ds, args.ev_fraction, args.seed, args.lev_threshold)
    return ds


def _sim_config(args, **over) -> SimConfig:
    kw = dict(
        policy=args.policy,
        phi=args.phi,
        e0=args.e0,
        deadhead_speed_kmh=args.speed_kmh,
        trip_speed_kmh=args.trip_speed_kmh,
        availability_horizon_s=args.horizon_s,
        routing_policy=args.routing,
        route_deadhead=args.route_deadhead,
        detour_factor=args.detour,
        seed=args.seed,
        max_queue_wait_s=args.max_queue_wait_s,
        lev_threshold=args.lev_threshold,
        hev_threshold=args.hev_threshold,
    )
    kw.update(over)
    return SimConfig(**kw)


def _routes(args):
    if not getattr(args, "routes", None):
        return None
    rejected: list = []
    routes = load_route_triples(args.routes, rejected)
    for line, why in rejected[:20]:
        print(f"{args.routes}:{line}: rejected: {why}", file=sys.stderr)
    return routes


def _result_doc(ds: Dataset, res, args) -> dict:
    s = summarize(res)
    eq = equity(res, ds.fleet, lev_threshold=args.lev_threshold, hev_threshold=args.hev_threshold)
    return {"summary": s.to_dict(), "equity": eq.to_dict()}


# --------------------------------------------------------------------------- commands


def cmd_simulate(args) -> int:
    ds = _load_dataset(args)
    routes = _routes(args)
    cfg = _sim_config(args)
    res = run(ds, cfg, routes)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    doc = {"manifest": run_manifest(args, ds), **_result_doc(ds, res, args)}
    s = summarize(res)
    baselines = {}
    for name in args.baselines:
        if Policy(name) is cfg.policy:
            continue
        b = summarize(run(ds, _sim_config(args, policy=name), routes))
        try:
            baselines[name] = {"summary": b.to_dict(), "deltas": compare(s, b).to_dict()}
        except EcoDispatchError as exc:
            baselines[name] = {"summary": b.to_dict(), "deltas": None, "note": str(exc)}
    doc["baselines"] = baselines
    _dump_json(doc, out / "summary.json")
    write_event_log(res, out / "rides.csv", [t.ride_id for t in ds.trips])
    _sidecar(out / "rides.csv", doc["manifest"])
    print(json.dumps(doc["summary"], sort_keys=True))
    return 0


def _sweep_cell(job):
    ds, cfg, routes, lev_fraction, lev_t, hev_t = job
    res = run(ds, cfg, routes)
    eq = equity(res, ds.fleet, lev_threshold=lev_t, hev_threshold=hev_t)
    return sweep_row(cfg.phi, lev_fraction, summarize(res), eq)


def cmd_sweep(args) -> int:
    base = _load_dataset(args)
    routes = _routes(args)
    jobs = []
    for frac in args.ev_fractions:
        ds = inject_evs(base, frac, args.seed, args.lev_threshold) if frac else base
        lev = ds.lev_fraction(args.lev_threshold)
        for phi in args.phis:
            jobs.append((ds, _sim_config(args, phi=phi, policy="tora"), routes, lev, args.lev_threshold, args.hev_threshold))
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as ex:
            rows = list(ex.map(_sweep_cell, jobs))
    else:
        rows = [_sweep_cell(j) for j in jobs]
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_sweep_csv(rows, out / "sweep.csv")
    manifest = run_manifest(args, base)
    _sidecar(out / "sweep.csv", manifest)
    _dump_json({"manifest": manifest, "rows": rows}, out / "sweep.json")
    print(f"{len(rows)} sweep rows written to {out / 'sweep.csv'}")
    return 0


def random_offline_instance(rng: np.random.Generator, n: int, m: int, extent_km: float = 6.0):
    """Small random instance around Austin for oracle comparisons."""
    half = extent_km / 2

    def pt():
        return offset_point(AUSTIN, float(rng.uniform(-half, half)), float(rng.uniform(-half, half)))

    reqs = [OfflineRequest(f"N{i}", pt(), pt(), float(i * 60)) for i in range(n)]
    rates = rng.uniform(60.0, 320.0, size=m)
    fleet = [DriverStart(f"M{j}", pt(), float(rates[j])) for j in range(m)]
    return reqs, fleet


def _oracle_row(inst: OfflineInstance) -> dict:
    era = erap_objective(era_assign(inst))
    opt = erap_objective(brute_force_optimal(inst))
    near = erap_objective(nearest_plan(inst))
    return {
        "requests": inst.n_requests,
        "drivers": inst.n_drivers,
        "era_g": era,
        "optimum_g": opt,
        "nearest_g": near,
        "gap_pct": (era - opt) / opt * 100.0 if opt > 0 else 0.0,
        "inversion": era < opt * (1 - 1e-9),
    }


def cmd_oracle(args) -> int:
    rows = []
    if args.trips:
        ds = _load_dataset(args)
        starts = ds.initial_positions()
        reqs = [
            OfflineRequest(t.ride_id, t.pickup, t.dropoff, t.request_ts, t.trip_distance_km) for t in ds.trips
        ]
        fleet = [DriverStart(d, starts[d], ds.fleet[d].unit_emission) for d in ds.driver_ids]
        inst = OfflineInstance(reqs, fleet, args.detour, args.speed_kmh)
        rows.append(_oracle_row(inst))
    else:
        rng = np.random.default_rng(args.seed)
        for _ in range(args.instances):
            n = int(rng.integers(args.min_requests, args.max_requests + 1))
            m = int(rng.integers(args.min_drivers, args.max_drivers + 1))
            reqs, fleet = random_offline_instance(rng, n, m)
            rows.append(_oracle_row(OfflineInstance(reqs, fleet, args.detour, args.speed_kmh)))
    gaps = [r["gap_pct"] for r in rows]
    report = {
        "manifest": run_manifest(args),
        "instances": rows,
        "aggregate": {
            "count": len(rows),
            "inversions": sum(r["inversion"] for r in rows),
            "mean_gap_pct": float(np.mean(gaps)) if gaps else 0.0,
            "max_gap_pct": float(np.max(gaps)) if gaps else 0.0,
            "era_le_nearest": sum(r["era_g"] <= r["nearest_g"] for r in rows),
        },
    }
    text = json.dumps(report, indent=2, sort_keys=True) + "\n"
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "oracle.json").write_text(text, encoding="utf-8")
    print(json.dumps(report["aggregate"], sort_keys=True))
    return 0


def _write_dataset(ds: Dataset, args, name: str) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    path = out / name
    write_trips(ds, path, augment=True, lev_threshold=args.lev_threshold, hev_threshold=args.hev_threshold)
    _sidecar(path, run_manifest(args, ds))
    print(f"{len(ds.trips)} trips, {len(ds.fleet)} vehicles written to {path}")
    return path


def cmd_inject_ev(args) -> int:
    ds = _load_dataset(args)
    _write_dataset(ds, args, "trips.csv")
    return 0


def cmd_augment(args) -> int:
    args.ev_fraction = 0.0
    ds = _load_dataset(args)
    _write_dataset(ds, args, "trips.csv")
    return 0


def cmd_gen_synth(args) -> int:
    cfg = SynthConfig(
        n_drivers=args.drivers,
        n_requests=args.requests,
        extent_km=args.extent_km,
        duration_s=args.duration_s,
        lev_fraction=args.lev_fraction,
        detour_factor=args.detour,
    )
    ds = gen_synthetic(cfg, args.seed)
    if args.ev_fraction:
        ds = inject_evs(ds, args.ev_fraction, args.seed, args.lev_threshold)
    _write_dataset(ds, args, "trips.csv")
    return 0


def cmd_routes_gen(args) -> int:
    ds = _load_dataset(args)
    cfg = SimConfig(seed=args.seed, trip_speed_kmh=args.trip_speed_kmh, detour_factor=args.detour)
    triples = dict(zip((t.ride_id for t in ds.trips), route_triples_for(ds, cfg)))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_route_triples(triples, out / "routes.csv")
    _sidecar(out / "routes.csv", run_manifest(args, ds))
    print(f"{len(triples)} route triples written to {out / 'routes.csv'}")
    return 0


def cmd_routes_check(args) -> int:
    rejected: list = []
    triples = load_route_triples(args.routes, rejected)
    for line, why in rejected:
        print(f"{args.routes}:{line}: {why}", file=sys.stderr)
    print(json.dumps({"accepted": len(triples), "rejected": len(rejected)}, sort_keys=True))
    return 1 if rejected else 0


# --------------------------------------------------------------------------- parser


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="key=value file; command-line flags take precedence")
    p.add_argument("--trips", help="trips CSV")
    p.add_argument("--emissions", help="vehicle emissions CSV (make,model,year,co2_g_per_km,fuel_l_per_100km)")
    p.add_argument("--column-map", help="key=value file mapping canonical to source column names")
    p.add_argument("--lev-threshold", type=_pos_float, default=LEV_THRESHOLD)
    p.add_argument("--hev-threshold", type=_pos_float, default=HEV_THRESHOLD)
    p.add_argument("--ev-fraction", type=_fraction, default=0.0, help="share of non-LEV vehicles converted to EVs")
    p.add_argument("--detour", type=_detour, default=DEFAULT_DETOUR_FACTOR)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="out")
    p.add_argument("-v", "--verbose", action="store_true")


def _add_sim(p: argparse.ArgumentParser) -> None:
    p.add_argument("--routes", help="route triples CSV; missing rides get synthesized triples")
    p.add_argument("--policy", choices=[x.value for x in Policy], default="tora")
    p.add_argument("--phi", type=_nonneg_float, default=1.0)
    p.add_argument("--e0", type=_pos_float, default=63.35)
    p.add_argument("--horizon-s", type=_nonneg_float, default=0.0)
    p.add_argument("--speed-kmh", type=_pos_float, default=30.0, help="deadhead speed")
    p.add_argument("--trip-speed-kmh", type=_pos_float, default=30.0, help="fastest-route speed for synthesized triples")
    p.add_argument("--routing", choices=[x.value for x in RoutePolicy], default=RoutePolicy.FASTEST.value)
    p.add_argument("--route-deadhead", action="store_true")
    p.add_argument("--max-queue-wait-s", type=_nonneg_float, default=3600.0)
    p.add_argument("--jobs", type=int, default=1)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ecodispatch", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run one dispatch simulation")
    _add_common(p)
    _add_sim(p)
    p.add_argument("--baselines", type=lambda s: [x for x in s.split(",") if x], default=["nearest", "replay"])
    p.set_defaults(func=cmd_simulate, _needs_trips=True)

    p = sub.add_parser("sweep", help="TORA over a grid of thresholds and EV fractions")
    _add_common(p)
    _add_sim(p)
    p.add_argument("--phis", type=_float_list(_nonneg_float), default=[0.001, 0.1, 1.0, 7.5, 18.0])
    p.add_argument("--ev-fractions", type=_float_list(_fraction), default=[0.0])
    p.set_defaults(func=cmd_sweep, _needs_trips=True)

    p = sub.add_parser("oracle", help="compare ERA with the exhaustive optimum")
    _add_common(p)
    p.add_argument("--speed-kmh", type=_pos_float, default=30.0)
    p.add_argument("--instances", type=int, default=200)
    p.add_argument("--min-requests", type=int, default=3)
    p.add_argument("--max-requests", type=int, default=6)
    p.add_argument("--min-drivers", type=int, default=2)
    p.add_argument("--max-drivers", type=int, default=3)
    p.set_defaults(func=cmd_oracle, _needs_trips=False, out=None)

    p = sub.add_parser("inject-ev", help="convert a share of non-LEV vehicles to EVs")
    _add_common(p)
    p.set_defaults(func=cmd_inject_ev, _needs_trips=True)

    p = sub.add_parser("gen-synth", help="generate a synthetic trips dataset")
    _add_common(p)
    p.add_argument("--drivers", type=int, default=200)
    p.add_argument("--requests", type=int, default=5000)
    p.add_argument("--extent-km", type=_pos_float, default=20.0)
    p.add_argument("--duration-s", type=_pos_float, default=72_000.0)
    p.add_argument("--lev-fraction", type=_fraction, default=0.05)
    p.set_defaults(func=cmd_gen_synth, _needs_trips=False)

    p = sub.add_parser("augment", help="add unit emission and class columns to a trips CSV")
    _add_common(p)
    p.set_defaults(func=cmd_augment, _needs_trips=True)

    p = sub.add_parser("routes-gen", help="synthesize route triples for a trips CSV")
    _add_common(p)
    p.add_argument("--trip-speed-kmh", type=_pos_float, default=30.0)
    p.set_defaults(func=cmd_routes_gen, _needs_trips=True)

    p = sub.add_parser("routes-check", help="validate a route triples CSV")
    p.add_argument("--routes", required=True)
    p.add_argument("--config")
    p.add_argument("-v", "--verbose", action="store_true")
    p.set_defaults(func=cmd_routes_check, _needs_trips=False)
    return parser


def read_config_file(path) -> dict[str, str]:
    out = {}
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected key=value")
        k, v = (s.strip() for s in line.split("=", 1))
        out[k.lstrip("-").replace("-", "_")] = v
    return out


def parse_args(argv=None) -> argparse.Namespace:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "config", None):
        try:
            values = read_config_file(args.config)
        except (OSError, ValueError) as exc:
            parser.error(str(exc))
        sub = parser._subparsers._group_actions[0].choices[args.command]  # noqa: SLF001
        actions = {a.dest: a for a in sub._actions}  # noqa: SLF001
        unknown = sorted(set(values) - set(actions))
        if unknown:
            parser.error(f"unknown config keys: {', '.join(unknown)}")
        for k, v in values.items():
            if isinstance(actions[k], argparse._StoreTrueAction):  # noqa: SLF001
                values[k] = v.lower() in ("1", "true", "yes", "on")
        sub.set_defaults(**values)
        args = parser.parse_args(argv)
    if getattr(args, "_needs_trips", False) and not args.trips:
        parser.error(f"{args.command}: --trips is required")
    if getattr(args, "jobs", 1) < 1:
        parser.error("--jobs must be >= 1")
    return args


def main(argv=None) -> int:
    args = parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    for k in [k for k in vars(args) if k.startswith("_")]:
        delattr(args, k)
    try:
        return args.func(args)
    except (EcoDispatchError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
