"""Compiled inner loops: the xoshiro256** generator and the Q-learning
episode kernel.

Generator: xoshiro256** 1.0 (Blackman & Vigna), state seeded by four
successive splitmix64 outputs of the 64-bit seed. ``uniform`` is
``(next >> 11) * 2**-53``; ``integer(n)`` is ``floor(uniform * n)``.
"""

from __future__ import annotations

import numpy as np
from numba import njit

_U64 = np.uint64
_MASK53 = np.float64(1.0 / 9007199254740992.0)


@njit(cache=True)
def _rotl(x, k):
    return (x << _U64(k)) | (x >> _U64(64 - k))


def seed_state(seed: int) -> np.ndarray:
    """splitmix64 expansion of ``seed`` into a xoshiro256** state."""
    mask = (1 << 64) - 1
    x = seed & mask
    out = []
    for _ in range(4):
        x = (x + 0x9E3779B97F4A7C15) & mask
        z = x
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & mask
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & mask
        out.append(z ^ (z >> 31))
    return np.array(out, dtype=np.uint64)


@njit(cache=True)
def next_u64(s):
    result = _rotl(s[1] * _U64(5), 7) * _U64(9)
    t = s[1] << _U64(17)
    s[2] ^= s[0]
    s[3] ^= s[1]
    s[1] ^= s[2]
    s[0] ^= s[3]
    s[2] ^= t
    s[3] = _rotl(s[3], 45)
    return result


@njit(cache=True)
def uniform(s):
    return np.float64(next_u64(s) >> _U64(11)) * _MASK53


@njit(cache=True)
def integer(s, n):
    return np.int64(uniform(s) * n)


@njit(cache=True)
def train_kernel(ptr, target, prob, rate, r_ok, r_fail, aptr, aidx,
                 q, counts, epochs, epsilon, alpha, gamma, max_steps, rng):
    """Run ``epochs`` episodes from state 0, updating ``q``/``counts`` in place.

    ``ptr`` is the CSR offset array over flattened (state, action) cells
    into the outcome arrays; an empty range means no successor. ``aptr`` /
    ``aidx`` list each state's greedy candidates (ATTACK + feasible
    defenses). Returns the total number of updates made.
    """
    n_actions = q.shape[1]
    keep = 1.0 - alpha
    total = 0
    for _ in range(epochs):
        s = 0
        steps = 0
        while steps < max_steps:
            if uniform(rng) < epsilon:
                a = integer(rng, n_actions)
            else:
                a = aidx[aptr[s]]
                best = q[s, a]
                for k in range(aptr[s] + 1, aptr[s + 1]):
                    b = aidx[k]
                    if q[s, b] > best:
                        a = b
                        best = q[s, b]
            cell = s * n_actions + a
            lo = ptr[cell]
            hi = ptr[cell + 1]
            if lo == hi:
                break
            o = lo
            if hi - lo > 1:
                u = uniform(rng)
                acc = 0.0
                o = hi - 1
                for k in range(lo, hi):
                    acc += prob[k]
                    if u < acc:
                        o = k
                        break
            if uniform(rng) < rate[o]:
                reward = r_ok[o]
                nxt = target[o]
            else:
                reward = r_fail[o]
                nxt = s
            future = q[nxt, aidx[aptr[nxt]]]
            for k in range(aptr[nxt] + 1, aptr[nxt + 1]):
                v = q[nxt, aidx[k]]
                if v > future:
                    future = v
            q[s, a] = keep * q[s, a] + alpha * (reward + gamma * future)
            counts[s, a] += 1
            total += 1
            s = nxt
            steps += 1
    return total
