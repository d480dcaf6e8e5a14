"""Deterministic, language-portable RNG and linear algebra helpers.

The synthetic embedding map must be reproducible bit-for-bit (up to libm
ulps) by out-of-process backends written in other languages, so the random
projection is derived from a splitmix64 stream and plain Gram-Schmidt
instead of numpy's generator machinery.
"""
from __future__ import annotations

import math

import numpy as np

_MASK64 = (1 << 64) - 1


class SplitMix64:
    """splitmix64 stream; the de-facto portable 64-bit mixer."""

    def __init__(self, seed: int):
        self.state = seed & _MASK64

    def next_u64(self) -> int:
        self.state = (self.state + 0x9E3779B97F4A7C15) & _MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        return z ^ (z >> 31)

    def next_float(self) -> float:
        # 53-bit mantissa uniform in [0, 1)
        return (self.next_u64() >> 11) * (1.0 / (1 << 53))

    def next_gaussian_pair(self) -> tuple[float, float]:
        u1 = self.next_float()
        u2 = self.next_float()
        if u1 <= 0.0:
            u1 = 2.0 ** -53
        r = math.sqrt(-2.0 * math.log(u1))
        t = 2.0 * math.pi * u2
        return r * math.cos(t), r * math.sin(t)

    def gaussians(self, n: int) -> np.ndarray:
        out = np.empty(n)
        for i in range(0, n - 1, 2):
            out[i], out[i + 1] = self.next_gaussian_pair()
        if n % 2 == 1:
            out[n - 1] = self.next_gaussian_pair()[0]
        return out


def random_semi_orthogonal(rows: int, cols: int, seed: int) -> np.ndarray:
    """A rows x cols matrix with orthonormal columns, seeded portably.

    Columns are drawn from the splitmix64 gaussian stream in order, then
    orthonormalized with modified Gram-Schmidt. Requires cols <= rows.
    """
    if cols > rows:
        raise ValueError("need cols <= rows for orthonormal columns")
    rng = SplitMix64(seed)
    g = rng.gaussians(rows * cols).reshape(cols, rows)  # one column per row of g
    q = np.empty((cols, rows))
    for j in range(cols):
        v = g[j].copy()
        for i in range(j):
            v -= float(np.dot(v, q[i])) * q[i]
        v /= float(np.sqrt(np.dot(v, v)))
        q[j] = v
    return q.T
