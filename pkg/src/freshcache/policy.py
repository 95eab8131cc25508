"""Cache state machine and the per-slot protocols.

LP and LRU run under the freshness-agnostic protocol: a stale cached copy is
only replaced when it is requested. M-LP, M-LRU and LEH run under the
freshness-aware protocol, which purges every stale entry at the start of the
slot before serving.

Within one slot the order is: purge (aware protocol only), serve, replacement
decision, age increment. An entry inserted in slot ``t`` therefore carries age
2 when its next request is tested in slot ``t + 1``.

This module is the readable reference. Long runs go through the compiled
kernel in :mod:`freshcache._kernels`, which must reproduce :func:`step`
outcome for outcome.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .model import FreshnessProfile, PopularityModel


class PolicyKind(enum.Enum):
    LP = "LP"
    LRU = "LRU"
    MLP = "MLP"
    MLRU = "MLRU"
    LEH = "LEH"

    @property
    def freshness_aware(self) -> bool:
        return self in (PolicyKind.MLP, PolicyKind.MLRU, PolicyKind.LEH)

    @property
    def code(self) -> int:
        return _CODES[self]

    @classmethod
    def parse(cls, name: str) -> "PolicyKind":
        key = name.upper().replace("-", "").replace("_", "")
        try:
            return cls(key)
        except ValueError:
            raise ValueError(f"unknown policy {name!r}; expected one of "
                             f"{', '.join(k.value for k in cls)}") from None


_CODES = {PolicyKind.LP: 0, PolicyKind.LRU: 1, PolicyKind.MLP: 2,
          PolicyKind.MLRU: 3, PolicyKind.LEH: 4}


class Result(enum.Enum):
    HIT = "hit"
    MISS_NOT_PRESENT = "miss_not_present"
    MISS_STALE = "miss_stale"


@dataclass
class CacheEntry:
    content: int
    age: int = 1
    last_use_slot: int = 0


@dataclass(frozen=True)
class SlotOutcome:
    requested: int
    result: Result
    evicted: Optional[int] = None
    inserted: bool = False

    @property
    def hit(self) -> bool:
        return self.result is Result.HIT


@dataclass
class CacheState:
    capacity: int
    entries: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.capacity < 1:
            raise ValueError(f"cache capacity must be >= 1, got {self.capacity}")

    def __contains__(self, content: int) -> bool:
        return content in self.entries

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def full(self) -> bool:
        return len(self.entries) >= self.capacity

    def contents(self) -> set:
        return set(self.entries)

    def insert(self, content: int, slot: int) -> None:
        if content in self.entries:
            raise ValueError(f"content {content} already cached")
        if self.full:
            raise ValueError("cache is full")
        self.entries[content] = CacheEntry(content, age=1, last_use_slot=slot)

    def evict(self, content: int) -> None:
        del self.entries[content]


def select_victim_lp(state: CacheState, model: PopularityModel,
                     popularity: Optional[np.ndarray] = None) -> int:
    """Least popular cached content; ties go to the higher index."""
    pop = model.pmf if popularity is None else popularity
    return min(state.entries, key=lambda c: (pop[c - 1], -c))


def select_victim_lru(state: CacheState) -> int:
    return min(state.entries.values(),
               key=lambda e: (e.last_use_slot, -e.content)).content


def expected_future_hits(content: int, age_if_cached: Optional[int],
                         model: PopularityModel, profile: FreshnessProfile) -> float:
    """Mean of the Binomial count of hits left to ``content``.

    A cached copy of age ``T`` has ``F - T`` fresh slots left; a copy placed now
    would have ``F - 1``.
    """
    F = profile.F(content)
    p = model.p(content)
    if age_if_cached is None:
        return (F - 1) * p
    if age_if_cached > F:
        raise ValueError(f"age {age_if_cached} exceeds freshness {F} of content {content}")
    return (F - age_if_cached) * p


def select_victim_leh(state: CacheState, arriving: int, model: PopularityModel,
                      profile: FreshnessProfile) -> Optional[int]:
    """Entry with the fewest expected future hits, if the arrival beats it."""
    victim = min(state.entries.values(),
                 key=lambda e: (expected_future_hits(e.content, e.age, model, profile),
                                -e.content))
    worst = expected_future_hits(victim.content, victim.age, model, profile)
    if expected_future_hits(arriving, None, model, profile) > worst:
        return victim.content
    return None


def step(state: CacheState, kind: PolicyKind, request: int, slot: int,
         model: PopularityModel, profile: FreshnessProfile, *,
         popularity: Optional[np.ndarray] = None,
         refresh_updates_recency: bool = True) -> SlotOutcome:
    """Advance the cache by one slot serving ``request``.

    ``popularity`` replaces the oracle pmf in LP/M-LP decisions (used by the
    frequency-counter estimator). ``refresh_updates_recency=False`` keeps the
    old LRU timestamp when a stale copy is refetched under the agnostic
    protocol.
    """
    if not 1 <= request <= model.n:
        raise ValueError(f"request {request} outside 1..{model.n}")
    aware = kind.freshness_aware

    if aware:
        for e in [e for e in state.entries.values() if e.age > profile.F(e.content)]:
            state.evict(e.content)

    evicted = None
    inserted = False
    entry = state.entries.get(request)
    if entry is not None and entry.age <= profile.F(request):
        result = Result.HIT
        entry.last_use_slot = slot
    elif entry is not None:
        # only reachable under the agnostic protocol
        result = Result.MISS_STALE
        entry.age = 1
        if refresh_updates_recency:
            entry.last_use_slot = slot
    else:
        result = Result.MISS_NOT_PRESENT
        if not state.full:
            victim, admit = None, True
        elif kind in (PolicyKind.LP, PolicyKind.MLP):
            victim = select_victim_lp(state, model, popularity)
            pop = model.pmf if popularity is None else popularity
            admit = pop[request - 1] > pop[victim - 1]
        elif kind in (PolicyKind.LRU, PolicyKind.MLRU):
            victim, admit = select_victim_lru(state), True
        else:
            victim = select_victim_leh(state, request, model, profile)
            admit = victim is not None
        if admit:
            if victim is not None:
                state.evict(victim)
                evicted = victim
            state.insert(request, slot)
            inserted = True

    for e in state.entries.values():
        e.age += 1
    return SlotOutcome(request, result, evicted, inserted)
