"""Compiled inner loops for long simulation runs and coupon sampling.

Ages are implicit here: a copy fetched in slot ``s`` has age ``t - s + 1``
while slot ``t`` is being served, which is exactly what the explicit
increment in :func:`freshcache.policy.step` produces. Content ids are 0-based.
"""

import numpy as np
from numba import njit

HIT = 0
MISS_NOT_PRESENT = 1
MISS_STALE = 2

LP, LRU, MLP, MLRU, LEH = 0, 1, 2, 3, 4


class CacheArrays:
    """Mutable cache state shared across chunks of one run."""

    def __init__(self, n, m):
        self.pos = np.full(n, -1, dtype=np.int64)
        self.fetch = np.zeros(n, dtype=np.int64)
        self.last_use = np.zeros(n, dtype=np.int64)
        self.freq = np.zeros(n, dtype=np.int64)
        self.cached = np.full(m, -1, dtype=np.int64)
        self.size = np.zeros(1, dtype=np.int64)


@njit(cache=True, nogil=True)
def _remove(c, cached, pos, size):
    j = pos[c]
    last = cached[size[0] - 1]
    cached[j] = last
    pos[last] = j
    cached[size[0] - 1] = -1
    pos[c] = -1
    size[0] -= 1


@njit(cache=True, nogil=True)
def simulate(requests, t0, warmup, kind, pmf, F, use_freq, refresh_recency,
             pos, fetch, last_use, freq, cached, size,
             req_count, hit_count, trace, out_result, out_evicted, out_inserted):
    m = cached.shape[0]
    aware = kind >= MLP
    for k in range(requests.shape[0]):
        t = t0 + k
        r = requests[k]
        if use_freq:
            freq[r] += 1

        if aware:
            j = 0
            while j < size[0]:
                c = cached[j]
                if t - fetch[c] + 1 > F[c]:
                    _remove(c, cached, pos, size)
                else:
                    j += 1

        result = MISS_NOT_PRESENT
        evicted = -1
        inserted = False
        if pos[r] >= 0:
            if t - fetch[r] + 1 <= F[r]:
                result = HIT
                last_use[r] = t
            else:
                result = MISS_STALE
                fetch[r] = t
                if refresh_recency:
                    last_use[r] = t
        else:
            admit = True
            victim = -1
            if size[0] >= m:
                if kind == LP or kind == MLP:
                    best = np.inf
                    for j in range(size[0]):
                        c = cached[j]
                        s = freq[c] if use_freq else pmf[c]
                        if s < best or (s == best and c > victim):
                            best = s
                            victim = c
                    sr = freq[r] if use_freq else pmf[r]
                    admit = sr > best
                elif kind == LRU or kind == MLRU:
                    best_t = np.iinfo(np.int64).max
                    for j in range(size[0]):
                        c = cached[j]
                        if last_use[c] < best_t or (last_use[c] == best_t and c > victim):
                            best_t = last_use[c]
                            victim = c
                else:
                    best = np.inf
                    for j in range(size[0]):
                        c = cached[j]
                        e = (F[c] - (t - fetch[c] + 1)) * pmf[c]
                        if e < best or (e == best and c > victim):
                            best = e
                            victim = c
                    admit = (F[r] - 1) * pmf[r] > best
            if admit:
                if victim >= 0:
                    _remove(victim, cached, pos, size)
                    evicted = victim
                cached[size[0]] = r
                pos[r] = size[0]
                size[0] += 1
                fetch[r] = t
                last_use[r] = t
                inserted = True

        if t >= warmup:
            req_count[r] += 1
            if result == HIT:
                hit_count[r] += 1
        if trace:
            out_result[k] = result
            out_evicted[k] = evicted
            out_inserted[k] = inserted


@njit(cache=True, nogil=True)
def collect_waiting_times(draws, m, skip, occupied, touched, state, out):
    """Consume 0-based ``draws`` filling ``out`` with waiting times.

    ``state`` holds (elapsed draws, distinct so far, samples done) and carries
    a partially collected sample over to the next call. Draws equal to
    ``skip`` count as elapsed slots but never as new coupons.
    """
    t = state[0]
    k = state[1]
    s = state[2]
    n_out = out.shape[0]
    for d in draws:
        if s >= n_out:
            break
        t += 1
        if d != skip and not occupied[d]:
            occupied[d] = True
            touched[k] = d
            k += 1
            if k == m:
                out[s] = t
                s += 1
                for j in range(k):
                    occupied[touched[j]] = False
                t = 0
                k = 0
    state[0] = t
    state[1] = k
    state[2] = s
