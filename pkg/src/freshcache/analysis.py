"""Closed-form hit-rates, the universal upper bound and the LRU approximation."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .model import FreshnessProfile, PopularityModel


class Provenance(enum.Enum):
    UPPER_BOUND = "UpperBound"
    LP_EXACT = "LPExact"
    LRU_APPROX = "LRUApprox"


@dataclass(frozen=True, eq=False)
class HitRateVector:
    values: np.ndarray
    provenance: Provenance

    def rate(self, i: int) -> float:
        """Hit-rate of content ``i`` (1-based)."""
        return float(self.values[i - 1])

    def __len__(self):
        return len(self.values)


@dataclass(frozen=True, eq=False)
class MLPBounds:
    """Per-content bounds on M-LP hit-rates.

    For the tail (``i > m``) the lower bound is exclusive: ``strictly_positive``
    marks contents whose rate is known to be above zero.
    """

    lower: HitRateVector
    upper: HitRateVector
    strictly_positive: np.ndarray


def _check_shapes(model: PopularityModel, profile: FreshnessProfile) -> None:
    if model.n != profile.n:
        raise ValueError(f"model has {model.n} contents, profile has {profile.n}")


def _check_cache(model: PopularityModel, m: int) -> None:
    if not 1 <= m < model.n:
        raise ValueError(f"cache size must satisfy 1 <= m < n={model.n}, got {m}")


def upper_bound_hit_rate(p, F):
    """``(F-1)p / (1 + (F-1)p)``; scalar or elementwise over arrays."""
    p_arr = np.asarray(p, dtype=np.float64)
    F_arr = np.asarray(F)
    if np.any(F_arr < 1):
        raise ValueError("freshness must be >= 1")
    if np.any((p_arr < 0) | (p_arr > 1)):
        raise ValueError("probability outside [0, 1]")
    x = (F_arr - 1) * p_arr
    h = x / (1.0 + x)
    return float(h) if np.ndim(h) == 0 else h


def upper_bound_hit_rates(model: PopularityModel, profile: FreshnessProfile) -> HitRateVector:
    _check_shapes(model, profile)
    return HitRateVector(upper_bound_hit_rate(model.pmf, profile.values), Provenance.UPPER_BOUND)


def upper_bound_hit_prob(model: PopularityModel, profile: FreshnessProfile) -> float:
    h = upper_bound_hit_rates(model, profile).values
    return math.fsum(model.pmf * h)


def lp_hit_rates(model: PopularityModel, profile: FreshnessProfile, m: int) -> HitRateVector:
    _check_shapes(model, profile)
    _check_cache(model, m)
    h = upper_bound_hit_rate(model.pmf, profile.values)
    h[m:] = 0.0
    return HitRateVector(h, Provenance.LP_EXACT)


def lp_hit_prob(model: PopularityModel, profile: FreshnessProfile, m: int) -> float:
    h = lp_hit_rates(model, profile, m).values
    return math.fsum(model.pmf * h)


def lru_hit_rate_approx(model: PopularityModel, profile: FreshnessProfile,
                        t_c: float) -> HitRateVector:
    """Minimum of the infinite-cache rate and the finite-cache recency rate.

    ``t_c`` is the cache characteristic time (see
    :func:`freshcache.coupon.characteristic_time_tc`), used unrounded.
    """
    _check_shapes(model, profile)
    if not t_c > 1:
        raise ValueError(f"characteristic time must exceed 1, got {t_c}")
    p = model.pmf
    with np.errstate(divide="ignore"):
        recency = -np.expm1((t_c - 1.0) * np.log1p(-p))
    fresh = upper_bound_hit_rate(p, profile.values)
    return HitRateVector(np.minimum(fresh, recency), Provenance.LRU_APPROX)


def mlp_hit_rate_bounds(model: PopularityModel, profile: FreshnessProfile, m: int) -> MLPBounds:
    _check_shapes(model, profile)
    _check_cache(model, m)
    upper = upper_bound_hit_rate(model.pmf, profile.values)
    lower = upper.copy()
    lower[m:] = 0.0
    positive = upper > 0
    return MLPBounds(HitRateVector(lower, Provenance.LP_EXACT),
                     HitRateVector(upper, Provenance.UPPER_BOUND),
                     positive)
