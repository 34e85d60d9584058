"""SplitMix64 generator used to build reproducible problem data"""

import math
from typing import List, Optional

import numpy as np

_MASK64 = (1 << 64) - 1
_GOLDEN_GAMMA = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB


class SplitMix64:
    """
    Portable 64-bit generator with Box-Muller normals

    Everything is done on Python integers masked to 64 bits so that the
    stream is identical on every platform. Normals are produced in pairs
    from two consecutive 53-bit uniforms; the second of each pair is cached.
    """

    def __init__(self, seed: int):
        self.state = seed & _MASK64
        self._spare: Optional[float] = None

    def next_u64(self) -> int:
        self.state = (self.state + _GOLDEN_GAMMA) & _MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * _MIX1) & _MASK64
        z = ((z ^ (z >> 27)) * _MIX2) & _MASK64
        return z ^ (z >> 31)

    def next_uniform(self) -> float:
        """Uniform in [0, 1) with 53 random bits"""
        return (self.next_u64() >> 11) * (1.0 / (1 << 53))

    def next_normal(self) -> float:
        if self._spare is not None:
            z, self._spare = self._spare, None
            return z
        u1 = 1.0 - self.next_uniform()  # (0, 1], keeps log finite
        u2 = self.next_uniform()
        radius = math.sqrt(-2.0 * math.log(u1))
        angle = 2.0 * math.pi * u2
        self._spare = radius * math.sin(angle)
        return radius * math.cos(angle)

    def normals(self, count: int) -> np.ndarray:
        return np.array([self.next_normal() for _ in range(count)], dtype=float)

    def next_below(self, bound: int) -> int:
        """Integer in [0, bound) by rejection, free of modulo bias"""
        if bound <= 0:
            raise ValueError("bound must be positive")
        limit = (_MASK64 + 1) - ((_MASK64 + 1) % bound)
        while True:
            r = self.next_u64()
            if r < limit:
                return r % bound

    def sample_indices(self, population: int, count: int) -> List[int]:
        """count distinct indices from range(population), partial Fisher-Yates"""
        pool = list(range(population))
        for i in range(count):
            j = i + self.next_below(population - i)
            pool[i], pool[j] = pool[j], pool[i]
        return sorted(pool[:count])
