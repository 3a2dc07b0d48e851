"""Counter-based random draws keyed by (seed, image, replication, stream).

Every draw comes from a fresh Philox-4x64 stream whose 128-bit key is
``(seed, splitmix64(image_index, replication_index, stream))``. Element ``i``
of a stream depends only on the key and ``i``, so results never depend on
scheduling or on how many other draws were made elsewhere.

Uniforms are ``((raw >> 11) + 0.5) * 2**-53``, which lies strictly inside
(0, 1). Normals are the inverse Gaussian CDF of those uniforms, so each
normal consumes exactly one 64-bit word.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import ndtri

_MASK64 = (1 << 64) - 1


def splitmix64(x: int) -> int:
    z = (x + 0x9E3779B97F4A7C15) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


@dataclass(frozen=True)
class NoiseDraw:
    seed: int
    image_index: int = 0
    replication_index: int = 0
    stream: int = 0

    def __post_init__(self):
        for name in ("seed", "image_index", "replication_index", "stream"):
            value = getattr(self, name)
            if not 0 <= value <= _MASK64:
                raise ValueError(f"{name} must fit in an unsigned 64-bit integer, got {value}")

    def key(self) -> tuple[int, int]:
        h = splitmix64(self.image_index)
        h = splitmix64(h ^ self.replication_index)
        h = splitmix64(h ^ self.stream)
        return self.seed, h

    def raw(self, n: int) -> np.ndarray:
        bitgen = np.random.Philox(key=np.array(self.key(), dtype=np.uint64))
        return bitgen.random_raw(n)

    def uniforms(self, n: int) -> np.ndarray:
        words = self.raw(n) >> np.uint64(11)
        return (words.astype(np.float64) + 0.5) * 2.0**-53

    def normals(self, n: int) -> np.ndarray:
        return ndtri(self.uniforms(n))

    def child(self, stream: int) -> "NoiseDraw":
        return NoiseDraw(self.seed, self.image_index, self.replication_index, stream)
