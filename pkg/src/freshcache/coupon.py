"""Coupon Collector waiting times and the LRU characteristic time.

``T_m`` is the number of i.i.d. draws needed to see ``m`` distinct coupons.
``T_c(i)`` is the same count when draws of coupon ``i`` are blanks: they use
up a slot but never add a coupon. The cache characteristic time is
``t_c = E(T_{m+1}) - 1``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import _kernels
from .model import PopularityModel, build_zipf

EXACT_MAX_N = 20
DEFAULT_SAMPLES = 100_000
_CHUNK = 1 << 18


class EnumerationTooLarge(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class WaitingTimeSample:
    m: int
    samples: np.ndarray

    @property
    def mean(self) -> float:
        return float(np.mean(self.samples))

    @property
    def std(self) -> float:
        return float(np.std(self.samples, ddof=1)) if len(self.samples) > 1 else 0.0

    @property
    def stderr(self) -> float:
        return self.std / math.sqrt(len(self.samples))

    @property
    def cv(self) -> float:
        return self.std / self.mean


@dataclass(frozen=True)
class TailBoundReport:
    n: int
    m: int
    delta: float
    lower_bound: float
    upper_bound: float
    lower_freq: Optional[float] = None
    upper_freq: Optional[float] = None
    samples: int = 0
    mean: Optional[float] = None


def _probabilities(model) -> np.ndarray:
    if isinstance(model, PopularityModel):
        return np.asarray(model.pmf, dtype=np.float64)
    return np.asarray(model, dtype=np.float64)


def waiting_time_sample(model: PopularityModel, m: int, samples: int,
                        rng: np.random.Generator, skip: Optional[int] = None) -> WaitingTimeSample:
    """``samples`` realizations of ``T_m``, or of ``T_c(skip)`` when ``skip`` is given."""
    n = model.n
    limit = n if skip is None else n - 1
    if not 1 <= m <= limit:
        raise ValueError(f"m must lie in 1..{limit}, got {m}")
    if skip is not None and not 1 <= skip <= n:
        raise ValueError(f"content index {skip} outside 1..{n}")
    if samples < 1:
        raise ValueError("need at least one sample")
    out = np.zeros(samples, dtype=np.int64)
    occupied = np.zeros(n, dtype=np.bool_)
    touched = np.zeros(m, dtype=np.int64)
    state = np.zeros(3, dtype=np.int64)
    skip0 = -1 if skip is None else skip - 1
    while state[2] < samples:
        draws = model.draw(rng, _CHUNK) - 1
        _kernels.collect_waiting_times(draws, m, skip0, occupied, touched, state, out)
    return WaitingTimeSample(m, out)


def sample_waiting_time(model: PopularityModel, m: int, rng: np.random.Generator) -> int:
    return int(waiting_time_sample(model, m, 1, rng).samples[0])


def sample_per_content_characteristic_time(model: PopularityModel, m: int, i: int,
                                           rng: np.random.Generator) -> int:
    return int(waiting_time_sample(model, m, 1, rng, skip=i).samples[0])


def exact_expected_waiting_time(model, m: int) -> float:
    """``E(T_m)`` by inclusion-exclusion over all coupon subsets of size < m.

    Accepts a :class:`PopularityModel` or a plain probability vector.
    """
    p = _probabilities(model)
    n = len(p)
    if n > EXACT_MAX_N:
        raise EnumerationTooLarge(
            f"exact expectation needs exponential enumeration over 2^{n} subsets; "
            f"n={n} exceeds {EXACT_MAX_N}, use waiting_time_sample instead")
    if not 1 <= m <= n:
        raise ValueError(f"m must lie in 1..{n}, got {m}")
    size = 1 << n
    mass = np.zeros(size)
    card = np.zeros(size, dtype=np.int64)
    for b in range(n):
        lo = 1 << b
        mass[lo:2 * lo] = mass[:lo] + p[b]
        card[lo:2 * lo] = card[:lo] + 1
    with np.errstate(divide="ignore"):
        inv = 1.0 / (1.0 - mass)
    terms = []
    for q in range(m):
        s = math.fsum(inv[card == q])
        terms.append((-1) ** (m - 1 - q) * math.comb(n - q - 1, n - m) * s)
    return math.fsum(terms)


def uniform_expected_waiting_time(n: int, m: int) -> float:
    """``n (H_n - H_{n-m})`` by direct summation."""
    if not 1 <= m <= n:
        raise ValueError(f"m must lie in 1..{n}, got {m}")
    return n * math.fsum(1.0 / k for k in range(n - m + 1, n + 1))


def characteristic_time_tc(model: PopularityModel, m: int, samples: int = DEFAULT_SAMPLES,
                           rng: Optional[np.random.Generator] = None, exact: bool = False) -> float:
    """``E(T_{m+1}) - 1``, by Monte Carlo or (``exact=True``, n <= 20) enumeration."""
    if not 1 <= m < model.n:
        raise ValueError(f"characteristic time needs 1 <= m < n={model.n}, got m={m}")
    if exact:
        return exact_expected_waiting_time(model, m + 1) - 1.0
    if rng is None:
        raise ValueError("Monte Carlo estimate needs an rng")
    return waiting_time_sample(model, m + 1, samples, rng).mean - 1.0


def approximation1_error(model: PopularityModel, m: int, i: int, samples: int,
                         rng: np.random.Generator) -> float:
    """Relative gap ``|E(T_c(i)) - t_c| / E(T_c(i))`` from Monte Carlo means."""
    per_content = waiting_time_sample(model, m, samples, rng, skip=i).mean
    t_c = characteristic_time_tc(model, m, samples, rng)
    return abs(per_content - t_c) / per_content


def coefficient_of_variation(model: PopularityModel, m: int, i: int, samples: int,
                             rng: np.random.Generator) -> float:
    if samples < 2:
        raise ValueError("coefficient of variation needs at least two samples")
    return waiting_time_sample(model, m, samples, rng, skip=i).cv


def tail_bounds(n: int, m: int, delta: float) -> TailBoundReport:
    if not 1 <= m < n:
        raise ValueError(f"tail bounds need 1 <= m < n, got m={m}, n={n}")
    if not delta > 0:
        raise ValueError(f"delta must be positive, got {delta}")
    return TailBoundReport(n=n, m=m, delta=delta,
                           lower_bound=math.exp(-m * delta ** 2 / 2),
                           upper_bound=math.exp(-math.sqrt(n / m) * delta ** 1.5))


def empirical_tail_check(n: int, m: int, delta: float, samples: int,
                         rng: np.random.Generator) -> TailBoundReport:
    """Tail frequencies of ``T_m / E(T_m)`` for equiprobable coupons."""
    bounds = tail_bounds(n, m, delta)
    mean = uniform_expected_waiting_time(n, m)
    t = waiting_time_sample(build_zipf(n, 0.0), m, samples, rng).samples
    return TailBoundReport(n=n, m=m, delta=delta,
                           lower_bound=bounds.lower_bound, upper_bound=bounds.upper_bound,
                           lower_freq=float(np.mean(t < (1 - delta) * mean)),
                           upper_freq=float(np.mean(t > (1 + delta) * mean)),
                           samples=samples, mean=mean)


def power_scaled(n: int, exponent: float) -> int:
    """``ceil(n ** exponent)``, robust to round-off such as ``1e5 ** 0.2``."""
    return max(1, math.ceil(n ** exponent - 1e-9))


def convergence_exponent_limit(beta: float) -> float:
    return (1 - beta) / (2 - beta)


def zipf_convergence_check(beta: float, n_grid: Sequence[int], m_exponent: float,
                           samples: int, rng: np.random.Generator,
                           strict: bool = True) -> np.ndarray:
    """Empirical ``P(T_m = m)`` for each ``n`` with ``m = ceil(n ** m_exponent)``.

    An exponent at or above ``(1 - beta) / (2 - beta)`` is outside the regime
    where the probability tends to one: rejected, or only warned about when
    ``strict`` is false.
    """
    if not 0 <= beta < 1:
        raise ValueError(f"beta must lie in [0, 1), got {beta}")
    limit = convergence_exponent_limit(beta)
    if m_exponent >= limit:
        msg = f"m exponent {m_exponent} >= (1-beta)/(2-beta) = {limit:.4f}"
        if strict:
            raise ValueError(msg)
        warnings.warn(msg, stacklevel=2)
    freqs = []
    for n in n_grid:
        m = power_scaled(n, m_exponent)
        t = waiting_time_sample(build_zipf(n, beta), m, samples, rng).samples
        freqs.append(float(np.mean(t == m)))
    return np.array(freqs)
