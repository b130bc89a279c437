"""Ride-assignment algorithms."""

from ecodispatch.assign.offline import (
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
from ecodispatch.assign.online import (
    DEFAULT_E0,
    Candidate,
    CandidateSet,
    Decision,
    deadhead_emission,
    e2d,
    max_e2d_over_e0,
    nearest_assign,
    replay_assign,
    tora_assign,
    tora_decide,
    tora_pick,
)

__all__ = [
    "AssignmentPlan",
    "Candidate",
    "CandidateSet",
    "DEFAULT_E0",
    "Decision",
    "DriverStart",
    "OfflineInstance",
    "OfflineRequest",
    "PlannedRide",
    "best_completion",
    "brute_force_optimal",
    "deadhead_emission",
    "e2d",
    "emission_h",
    "era_assign",
    "erap_objective",
    "max_e2d_over_e0",
    "nearest_assign",
    "nearest_plan",
    "replay_assign",
    "tora_assign",
    "tora_decide",
    "tora_pick",
]
