"""Slot-by-slot simulation runs with warm-up, replication and seeding."""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import _kernels
from .model import FreshnessProfile, PopularityModel, RequestStream, build_zipf, derive_seed
from .policy import PolicyKind

log = logging.getLogger(__name__)

CHUNK = 1 << 18


class UndefinedHitRate(ValueError):
    """Raised for a content that received no post-warm-up requests."""


def default_warmup(m: int, profile: FreshnessProfile, slots: int) -> int:
    return min(10 * m * profile.max_F, slots // 2)


@dataclass(frozen=True)
class SimConfig:
    n: int
    m: int
    beta: float
    profile: FreshnessProfile
    kind: PolicyKind
    slots: int = 1_000_000
    warmup_slots: Optional[int] = None
    replications: int = 10
    master_seed: int = 42
    lp_estimator: str = "oracle"
    refresh_updates_recency: bool = True

    def __post_init__(self):
        if self.m < 1:
            raise ValueError(f"cache size m must be >= 1, got {self.m}")
        if self.n < 1:
            raise ValueError(f"catalog size n must be >= 1, got {self.n}")
        if self.profile.n != self.n:
            raise ValueError(f"freshness profile has {self.profile.n} entries, catalog has {self.n}")
        if self.slots < 1:
            raise ValueError("slots must be positive")
        if self.replications < 1:
            raise ValueError("replications must be positive")
        if self.lp_estimator not in ("oracle", "frequency"):
            raise ValueError(f"lp_estimator must be 'oracle' or 'frequency', got {self.lp_estimator!r}")
        if self.warmup_slots is None:
            object.__setattr__(self, "warmup_slots",
                               default_warmup(self.m, self.profile, self.slots))
        if not 0 <= self.warmup_slots < self.slots:
            raise ValueError(f"warmup_slots must lie in [0, slots), got {self.warmup_slots}")

    @property
    def model(self) -> PopularityModel:
        return build_zipf(self.n, self.beta)


@dataclass(frozen=True, eq=False)
class SimulationMetrics:
    """Per-replication counters, shape ``(replications, n)``."""

    config: SimConfig
    requests: np.ndarray = field(repr=False)
    hits: np.ndarray = field(repr=False)

    @property
    def total_requests(self) -> int:
        return int(self.requests.sum())

    @property
    def total_hits(self) -> int:
        return int(self.hits.sum())

    @property
    def content_requests(self) -> np.ndarray:
        return self.requests.sum(axis=0)

    @property
    def content_hits(self) -> np.ndarray:
        return self.hits.sum(axis=0)

    @property
    def hit_rates(self) -> np.ndarray:
        """Pooled per-content hit-rates; NaN where a content was never requested."""
        req = self.content_requests
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(req > 0, self.content_hits / np.maximum(req, 1), np.nan)

    @property
    def hit_prob(self) -> float:
        return self.total_hits / self.total_requests

    @property
    def replication_hit_probs(self) -> np.ndarray:
        return self.hits.sum(axis=1) / self.requests.sum(axis=1)

    @property
    def hit_prob_stderr(self) -> float:
        R = self.requests.shape[0]
        if R < 2:
            h = self.hit_prob
            return math.sqrt(h * (1 - h) / self.total_requests)
        return float(np.std(self.replication_hit_probs, ddof=1) / math.sqrt(R))

    @property
    def binomial_stderr(self) -> np.ndarray:
        h = self.hit_rates
        req = self.content_requests
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.sqrt(h * (1 - h) / req)

    @property
    def replication_stderr(self) -> np.ndarray:
        """Across-replication standard error of each content's hit-rate."""
        R = self.requests.shape[0]
        if R < 2:
            return np.full(self.requests.shape[1], np.nan)
        with np.errstate(invalid="ignore", divide="ignore"):
            rates = self.hits / self.requests
            return np.nanstd(rates, axis=0, ddof=1) / np.sqrt(np.sum(self.requests > 0, axis=0))

    @property
    def rate_stderr(self) -> np.ndarray:
        """Per-content standard error: the larger of binomial and replication.

        Hits of one content are serially correlated, so the binomial figure
        alone can understate the noise.
        """
        return np.fmax(self.binomial_stderr, self.replication_stderr)


def hit_rate(metrics: SimulationMetrics, i: int) -> float:
    req = int(metrics.content_requests[i - 1])
    if req == 0:
        raise UndefinedHitRate(f"content {i} was never requested after warm-up")
    return int(metrics.content_hits[i - 1]) / req


def simulate_replication(config: SimConfig, seed: int, model: PopularityModel | None = None):
    """One run of ``config.slots`` slots; returns (requests, hits) counters."""
    model = model or config.model
    n = config.n
    stream = RequestStream(model, seed)
    arrays = _kernels.CacheArrays(n, config.m)
    req = np.zeros(n, dtype=np.int64)
    hit = np.zeros(n, dtype=np.int64)
    F = config.profile.values.astype(np.int64)
    empty_i = np.zeros(0, dtype=np.int64)
    empty_b = np.zeros(0, dtype=np.bool_)
    t = 0
    while t < config.slots:
        size = min(CHUNK, config.slots - t)
        requests = stream.sample_many(size) - 1
        _kernels.simulate(requests, t, config.warmup_slots, config.kind.code, model.pmf, F,
                          config.lp_estimator == "frequency", config.refresh_updates_recency,
                          arrays.pos, arrays.fetch, arrays.last_use, arrays.freq,
                          arrays.cached, arrays.size, req, hit,
                          False, empty_i, empty_i, empty_b)
        t += size
    return req, hit


def run(config: SimConfig, threads: int = 1) -> SimulationMetrics:
    """Run every replication and collect counters in replication order."""
    model = config.model
    seeds = [derive_seed(config.master_seed, r) for r in range(config.replications)]
    log.debug("run %s n=%d m=%d beta=%g reps=%d", config.kind.value, config.n, config.m,
              config.beta, config.replications)
    if threads > 1 and config.replications > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(lambda s: simulate_replication(config, s, model), seeds))
    else:
        results = [simulate_replication(config, s, model) for s in seeds]
    requests = np.stack([r for r, _ in results])
    hits = np.stack([h for _, h in results])
    return SimulationMetrics(config, requests, hits)
