"""Content catalog, Zipf popularity law, freshness profiles and the IRM request stream.

Content indices are 1-based in every public call (index 1 is the most popular
content). Vectors such as ``pmf`` and ``values`` are plain numpy arrays, so
position ``k`` holds content ``k + 1``.

Random numbers come from numpy's PCG64 bit generator (``numpy.random.PCG64``,
128-bit state, 64-bit output). Sub-seeds for replications are derived with the
SplitMix64 finalizer applied to ``seed ^ index``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

MASK64 = (1 << 64) - 1


def splitmix64(x: int) -> int:
    """SplitMix64 finalizer; a bijective 64-bit mixer."""
    x = (x + 0x9E3779B97F4A7C15) & MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & MASK64
    return x ^ (x >> 31)


def derive_seed(master_seed: int, index: int) -> int:
    """Sub-seed for replication (or worker) ``index`` of ``master_seed``."""
    return splitmix64((master_seed ^ index) & MASK64)


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed & MASK64))


@dataclass(frozen=True, eq=False)
class PopularityModel:
    """Zipf popularity over ``n`` contents, ``pmf[k] ∝ (k+1)**-beta``."""

    n: int
    beta: float
    pmf: np.ndarray = field(repr=False)
    cdf: np.ndarray = field(repr=False)

    def p(self, i: int) -> float:
        """Popularity of content ``i`` (1-based)."""
        self._check_index(i)
        return float(self.pmf[i - 1])

    def draw(self, rng: np.random.Generator, size: int) -> np.ndarray:
        """Draw ``size`` i.i.d. content indices (1-based) by inverse transform."""
        u = rng.random(size)
        return np.searchsorted(self.cdf, u, side="right").astype(np.int64) + 1

    def _check_index(self, i: int) -> None:
        if not 1 <= i <= self.n:
            raise ValueError(f"content index {i} outside 1..{self.n}")


def build_zipf(n: int, beta: float) -> PopularityModel:
    if int(n) != n or n < 1:
        raise ValueError(f"catalog size must be a positive integer, got {n!r}")
    beta = float(beta)
    if not math.isfinite(beta) or beta < 0:
        raise ValueError(f"Zipf exponent must be finite and non-negative, got {beta!r}")
    n = int(n)
    weights = np.arange(1, n + 1, dtype=np.float64) ** -beta
    pmf = weights / math.fsum(weights)
    cdf = np.cumsum(pmf)
    # guard against the last bucket being unreachable through rounding
    cdf[-1] = 1.0
    pmf.setflags(write=False)
    cdf.setflags(write=False)
    return PopularityModel(n=n, beta=beta, pmf=pmf, cdf=cdf)


def head_mass(model: PopularityModel, m: int) -> float:
    """Total popularity of the ``m`` most popular contents."""
    if not 1 <= m <= model.n:
        raise ValueError(f"m must lie in 1..{model.n}, got {m}")
    if m == model.n:
        return 1.0
    return math.fsum(model.pmf[:m])


class FreshnessKind(enum.Enum):
    UNIFORM = "uniform"
    LINEAR = "linear"
    EXPLICIT = "explicit"


@dataclass(frozen=True, eq=False)
class FreshnessProfile:
    """Per-content freshness specification ``F(i)`` in slots."""

    kind: FreshnessKind
    values: np.ndarray = field(repr=False)

    @property
    def n(self) -> int:
        return len(self.values)

    def F(self, i: int) -> int:
        return int(self.values[i - 1])

    @property
    def max_F(self) -> int:
        return int(self.values.max())

    @classmethod
    def uniform(cls, n: int, F: int) -> "FreshnessProfile":
        if F < 1:
            raise ValueError(f"freshness must be >= 1 slot, got {F}")
        return cls._make(FreshnessKind.UNIFORM, np.full(n, int(F), dtype=np.int64))

    @classmethod
    def linear(cls, n: int, slope: int = 1) -> "FreshnessProfile":
        """``F(i) = 1 + slope * i``."""
        if slope < 1:
            raise ValueError(f"linear slope must be >= 1, got {slope}")
        return cls._make(FreshnessKind.LINEAR, 1 + int(slope) * np.arange(1, n + 1, dtype=np.int64))

    @classmethod
    def explicit(cls, values) -> "FreshnessProfile":
        arr = np.asarray(values)
        if arr.ndim != 1 or len(arr) == 0:
            raise ValueError("explicit freshness needs a non-empty 1-d sequence")
        if not np.all(arr == np.round(arr)):
            raise ValueError("freshness values must be integers")
        return cls._make(FreshnessKind.EXPLICIT, arr.astype(np.int64))

    @classmethod
    def _make(cls, kind, values):
        if np.any(values < 1):
            raise ValueError("every F(i) must be >= 1")
        values.setflags(write=False)
        return cls(kind=kind, values=values)


class RequestStream:
    """Seeded IRM request source.

    ``sample()`` and ``sample_many()`` consume the same underlying sequence, so
    a stream read one request at a time and one read in blocks agree.
    """

    def __init__(self, model: PopularityModel, seed: int):
        self.model = model
        self.seed = int(seed)
        self.slot = 0
        self._rng = make_rng(self.seed)

    def sample(self) -> int:
        self.slot += 1
        u = self._rng.random()
        return int(np.searchsorted(self.model.cdf, u, side="right")) + 1

    def sample_many(self, size: int) -> np.ndarray:
        self.slot += size
        return self.model.draw(self._rng, size)
