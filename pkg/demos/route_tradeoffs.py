"""
Shortest, fastest and fuel-efficient routes
===========================================

Each trip gets three route options. Their differences are small (a few
percent), which is why choosing the driver matters more for emissions
than choosing the route.
"""

from dataclasses import replace

import numpy as np

from ecodispatch.ingest import SynthConfig, gen_synthetic
from ecodispatch.metrics import summarize
from ecodispatch.routing import RoutePolicy, TripCategory, category_for, synth_route_columns
from ecodispatch.sim import SimConfig, run

rng = np.random.default_rng(1)
base = np.concatenate([rng.uniform(0.3, 1.5, 2000), rng.uniform(2, 15, 2000), rng.uniform(17, 60, 2000)])
cols = synth_route_columns(base, 30.0, rng)
s_d, s_t, s_e, f_d, f_t, f_e, e_d, e_t, e_e = cols.T
cats = [category_for(x) for x in base]

# Relative inflation of each route over the best one for the metric it loses on.
for cat in TripCategory:
    m = np.array([c is cat for c in cats])
    print(
        f"{cat.value:<6} fastest +{np.mean(f_d[m] / s_d[m] - 1):.2%} distance, "
        f"shortest +{np.mean(s_t[m] / f_t[m] - 1):.2%} time, "
        f"fastest +{np.mean(f_e[m] / e_e[m] - 1):.2%} emissions"
    )

# The same simulation under each routing policy.
ds = gen_synthetic(SynthConfig(n_drivers=100, n_requests=2000, duration_s=36_000.0), seed=3)
for policy in RoutePolicy:
    s = summarize(run(ds, replace(SimConfig(phi=1.0), routing_policy=policy)))
    print(f"{policy.value:<15} trip emissions {s.trip_g / 1000:.0f} kg, total {s.total_g / 1000:.0f} kg")
