"""Counter-based splitmix64 generator.

Every random draw in the package goes through here so that results are
identical on every platform and independent of iteration order: a stream is
addressed by ``(seed, key)`` and element ``k`` of that stream is
``mix(base + (k + 1) * GOLDEN)``.
"""

from __future__ import annotations

import numpy as np

GOLDEN = 0x9E3779B97F4A7C15
_MASK = (1 << 64) - 1


def mix64(z: int) -> int:
    z &= _MASK
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return z ^ (z >> 31)


def fnv1a64(text: str) -> int:
    h = 0xCBF29CE484222325
    for byte in text.encode("utf-8"):
        h = ((h ^ byte) * 0x100000001B3) & _MASK
    return h


def derive_seed(seed: int, key: str) -> int:
    """Seed for the stream named ``key`` under the master ``seed``."""
    return mix64((seed & _MASK) ^ fnv1a64(key))


def stream_u64(seed: int, count: int, start: int = 0) -> np.ndarray:
    """Elements ``start .. start+count`` of the splitmix64 sequence for ``seed``."""
    k = np.arange(start + 1, start + count + 1, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = np.uint64(seed & _MASK) + k * np.uint64(GOLDEN)
        z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return z ^ (z >> np.uint64(31))


def stream_uniform(seed: int, count: int, start: int = 0) -> np.ndarray:
    """Float64 uniforms in [0, 1) with 53 random bits each."""
    return (stream_u64(seed, count, start) >> np.uint64(11)).astype(np.float64) * 2.0**-53


def truncated_normal(seed: int, count: int, std: float, bound: float = 2.0) -> np.ndarray:
    """Normal(0, std) samples with |z| <= bound, via Box-Muller plus rejection.

    Rejected draws are replaced by continuing the same stream, so the output
    depends only on ``(seed, count)``.
    """
    out = np.empty(count, dtype=np.float64)
    filled = 0
    cursor = 0
    while filled < count:
        need = count - filled
        pairs = need // 2 + 8
        u = stream_uniform(seed, 2 * pairs, cursor)
        cursor += 2 * pairs
        u1 = 1.0 - u[0::2]  # (0, 1], keeps log finite
        u2 = u[1::2]
        r = np.sqrt(-2.0 * np.log(u1))
        z = np.concatenate([r * np.cos(2.0 * np.pi * u2), r * np.sin(2.0 * np.pi * u2)])
        z = z[np.abs(z) <= bound][:need]
        out[filled:filled + z.size] = z
        filled += z.size
    return out * std


class SplitMix64:
    """Sequential generator for small control-flow draws (shuffles, flips)."""

    def __init__(self, seed: int):
        self.state = seed & _MASK

    def next_u64(self) -> int:
        self.state = (self.state + GOLDEN) & _MASK
        return mix64(self.state)

    def uniform(self) -> float:
        return (self.next_u64() >> 11) * 2.0**-53

    def randbelow(self, n: int) -> int:
        """Unbiased integer in [0, n) by rejection."""
        if n <= 0:
            raise ValueError("n must be positive")
        limit = (1 << 64) - ((1 << 64) % n)
        while True:
            v = self.next_u64()
            if v < limit:
                return v % n

    def shuffle(self, items: list) -> None:
        """In-place Fisher-Yates."""
        for i in range(len(items) - 1, 0, -1):
            j = self.randbelow(i + 1)
            items[i], items[j] = items[j], items[i]
