"""Per-request driver selection: threshold rule, nearest driver and replay."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ecodispatch.errors import DomainError, NoDriverError, RowError
from ecodispatch.fleet import EV_UNIT_EMISSION

DEFAULT_E0 = EV_UNIT_EMISSION


@dataclass(frozen=True, slots=True)
class Candidate:
    driver_id: str
    deadhead_km: float
    unit_emission: float
    delay_s: float = 0.0

    def __post_init__(self) -> None:
        if self.deadhead_km < 0 or self.delay_s < 0:
            raise DomainError("deadhead_km and delay_s must be non-negative")


@dataclass(frozen=True, slots=True)
class CandidateSet:
    request_id: str
    candidates: tuple[Candidate, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "candidates", tuple(self.candidates))
        ids = [c.driver_id for c in self.candidates]
        if len(set(ids)) != len(ids):
            raise DomainError(f"request {self.request_id}: duplicate driver ids in candidate set")

    def __len__(self) -> int:
        return len(self.candidates)


def deadhead_emission(c: Candidate) -> float:
    return c.unit_emission * c.deadhead_km


def e2d(m: Candidate, c: Candidate) -> float:
    """Deadhead emission saved per extra km when ``m`` replaces the closer ``c``."""
    if not m.deadhead_km > c.deadhead_km:
        raise DomainError("E2D needs m strictly farther than c")
    return (deadhead_emission(c) - deadhead_emission(m)) / (m.deadhead_km - c.deadhead_km)


@dataclass(frozen=True, slots=True)
class Decision:
    """Indices into the candidate arrays: the closest driver, the best E2D
    challenger (``-1`` when none is strictly farther) and the choice."""

    closest: int
    challenger: int
    chosen: int
    best_e2d: float


def tora_pick(dist: np.ndarray, rate: np.ndarray, phi: float, e0: float) -> Decision:
    """Threshold rule over parallel arrays already ordered by driver id.

    Ties: closest by (distance, rate, position); challenger by
    (E2D desc, distance, position).
    """
    n = len(dist)
    if n == 0:
        raise NoDriverError("empty candidate set")
    order = np.lexsort((rate, dist))
    c = int(order[0])
    farther = np.flatnonzero(dist > dist[c])
    if farther.size == 0:
        return Decision(c, -1, c, float("-inf"))
    ed = rate * dist
    ratio = (ed[c] - ed[farther]) / (dist[farther] - dist[c])
    best = int(np.lexsort((farther, dist[farther], -ratio))[0])
    m = int(farther[best])
    r = float(ratio[best])
    return Decision(c, m, m if phi * e0 < r else c, r)


def _arrays(cs: CandidateSet):
    if not cs.candidates:
        raise NoDriverError(f"no candidate driver for request {cs.request_id}")
    cands = sorted(cs.candidates, key=lambda c: c.driver_id)
    dist = np.array([c.deadhead_km for c in cands], dtype=float)
    rate = np.array([c.unit_emission for c in cands], dtype=float)
    return cands, dist, rate


def tora_decide(cs: CandidateSet, phi: float, e0: float = DEFAULT_E0) -> tuple[Candidate, Candidate | None, Candidate]:
    """Return ``(closest, challenger, chosen)`` for one request."""
    if phi < 0:
        raise DomainError(f"phi must be >= 0, got {phi}")
    if not e0 > 0:
        raise DomainError(f"E0 must be > 0, got {e0}")
    cands, dist, rate = _arrays(cs)
    d = tora_pick(dist, rate, phi, e0)
    return cands[d.closest], (cands[d.challenger] if d.challenger >= 0 else None), cands[d.chosen]


def tora_assign(cs: CandidateSet, phi: float, e0: float = DEFAULT_E0) -> str:
    """Closest driver unless a farther one's E2D ratio exceeds ``phi * e0``."""
    return tora_decide(cs, phi, e0)[2].driver_id


def nearest_assign(cs: CandidateSet) -> str:
    cands, dist, rate = _arrays(cs)
    return cands[int(np.lexsort((rate, dist))[0])].driver_id


def replay_assign(trip) -> str:
    """The driver recorded for ``trip`` in the source dataset."""
    if not getattr(trip, "driver_id", None):
        raise RowError(f"trip {getattr(trip, 'ride_id', '?')} has no recorded driver")
    return trip.driver_id


def max_e2d_over_e0(candidate_sets: Sequence[CandidateSet], e0: float = DEFAULT_E0) -> float:
    """Largest E2D/E0 any closest/farther pair attains; above it TORA equals nearest."""
    worst = float("-inf")
    for cs in candidate_sets:
        if not cs.candidates:
            continue
        _, dist, rate = _arrays(cs)
        d = tora_pick(dist, rate, float("inf"), e0)
        worst = max(worst, d.best_e2d / e0)
    return worst
