"""
Electrifying part of the fleet
==============================

Converting conventional vehicles into EVs gives the threshold rule more
clean drivers to choose from, so its savings over nearest-driver matching
grow. The flip side is equity: low-emission drivers take more rides and
drive more empty kilometres per passenger kilometre.
"""

from dataclasses import replace

from ecodispatch.fleet import EmissionClass
from ecodispatch.ingest import SynthConfig, gen_synthetic, inject_evs
from ecodispatch.metrics import compare, equity, summarize
from ecodispatch.sim import Policy, SimConfig, run

ds = gen_synthetic(SynthConfig(n_drivers=200, n_requests=5000, duration_s=72_000.0), seed=0)
cfg = SimConfig(policy=Policy.TORA, phi=0.1)

for fraction in (0.0, 0.05, 0.10, 0.20):
    fleet_ds = inject_evs(ds, fraction, seed=0)
    tora = run(fleet_ds, cfg)
    near = run(fleet_ds, replace(cfg, policy=Policy.NEAREST))
    d = compare(summarize(tora), summarize(near))
    print(f"{fraction:4.0%} converted (LEV share {fleet_ds.lev_fraction():.0%}): deadhead saving {d.deadhead_reduction_pct:.1f}%")

# Who gets the rides at the two ends of the threshold range?
for phi in (18, 0.001):
    eq = equity(run(ds, replace(cfg, phi=phi)), ds.fleet)
    row = ", ".join(
        f"{c.value} {eq[c].ride_fraction:.1%} of rides (deadhead/trip {eq[c].deadhead_to_trip:.2f})" for c in EmissionClass
    )
    print(f"phi={phi:<6g} {row}")
