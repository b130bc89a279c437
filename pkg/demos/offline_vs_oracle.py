"""
Offline frontier search against the exhaustive optimum
======================================================

For small request sequences the emission-optimal assignment can be found by
enumerating all ``M**N`` driver sequences. The frontier search keeps only
the children with the lowest heuristic emissions, which is much cheaper and
usually close to optimal, but not always.
"""

import numpy as np

from ecodispatch.assign import OfflineInstance, brute_force_optimal, era_assign, erap_objective, nearest_plan
from ecodispatch.cli import random_offline_instance

rng = np.random.default_rng(42)
gaps, vs_nearest = [], []
for i in range(50):
    inst = OfflineInstance(*random_offline_instance(rng, n=int(rng.integers(3, 7)), m=int(rng.integers(2, 4))))
    era = erap_objective(era_assign(inst))
    opt = erap_objective(brute_force_optimal(inst))
    near = erap_objective(nearest_plan(inst))
    gaps.append((era - opt) / opt * 100)
    vs_nearest.append((near - era) / near * 100)

gaps = np.array(gaps)
print(f"optimality gap: mean {gaps.mean():.2f}%, max {gaps.max():.2f}%, optimal in {np.sum(gaps < 1e-9)}/50")
print(f"saving vs nearest-driver plan: mean {np.mean(vs_nearest):.1f}%")

# One instance in detail.
reqs, fleet = random_offline_instance(np.random.default_rng(7), n=4, m=2)
plan = era_assign(reqs, fleet)
for ride in plan.rides:
    print(f"{ride.request_id} -> {ride.driver_id}: deadhead {ride.deadhead_km:.2f} km, "
          f"{ride.deadhead_emission_g:.0f} g + trip {ride.trip_emission_g:.0f} g, wait {ride.waiting_s:.0f} s")  # fmt: skip
print(f"total {erap_objective(plan):.0f} g")
