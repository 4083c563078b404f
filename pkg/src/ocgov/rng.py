"""Deterministic, platform-independent random streams for the simulator.

A single root seed fans out into named substreams (population, per-agent,
per-window) via FNV-1a label hashing plus splitmix64 mixing; each substream
is an independent xoshiro256** generator. Everything is pure 64-bit integer
arithmetic, so replays are bit-identical across platforms and Python
versions.
"""

from __future__ import annotations

import math

_MASK = (1 << 64) - 1


def _splitmix64(state: int) -> tuple[int, int]:
    state = (state + 0x9E3779B97F4A7C15) & _MASK
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return state, z ^ (z >> 31)


def _fnv1a64(text: str) -> int:
    h = 0xCBF29CE484222325
    for byte in text.encode("utf-8"):
        h = ((h ^ byte) * 0x100000001B3) & _MASK
    return h


def _rotl(x: int, k: int) -> int:
    return ((x << k) | (x >> (64 - k))) & _MASK


class Stream:
    """xoshiro256** generator; construct via ``substream``."""

    def __init__(self, seed: int) -> None:
        state = seed & _MASK
        s = []
        for _ in range(4):
            state, out = _splitmix64(state)
            s.append(out)
        self._s = s

    def next_u64(self) -> int:
        s0, s1, s2, s3 = self._s
        result = (_rotl((s1 * 5) & _MASK, 7) * 9) & _MASK
        t = (s1 << 17) & _MASK
        s2 ^= s0
        s3 ^= s1
        s1 ^= s2
        s0 ^= s3
        s2 ^= t
        s3 = _rotl(s3, 45)
        self._s = [s0, s1, s2, s3]
        return result

    def uniform(self) -> float:
        """Uniform double in [0, 1) with 53 random bits."""
        return (self.next_u64() >> 11) * (1.0 / (1 << 53))

    def uniform_in(self, low: float, high: float) -> float:
        return low + (high - low) * self.uniform()

    def randint_below(self, n: int) -> int:
        """Integer in [0, n) by scaling; adequate for small n."""
        return min(int(self.uniform() * n), n - 1)

    def poisson(self, lam: float) -> int:
        """Poisson draw by CDF inversion; one uniform per draw.

        Deterministic given the stream; intended for modest rates
        (lambda up to a few tens).
        """
        u = self.uniform()
        p = math.exp(-lam)
        cdf = p
        k = 0
        while u > cdf and k < 1000:
            k += 1
            p *= lam / k
            cdf += p
        return k


def substream(seed: int, *labels: object) -> Stream:
    """Derive an independent named stream from the root seed."""
    state = seed & _MASK
    for label in labels:
        state ^= _fnv1a64(str(label))
        state, _ = _splitmix64(state)
    return Stream(state)
