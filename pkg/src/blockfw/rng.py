"""Seeded random streams with a fixed, version-independent output.

Raw bits come from PCG64 seeded through ``SeedSequence``; both are frozen
algorithms in numpy. Uniform doubles, Gaussians (Marsaglia polar method)
and exponentials are derived here so that the transforms never change
under us.
"""

from __future__ import annotations

import math
import zlib

import numpy as np

_TWO_M53 = 2.0 ** -53


def _label_key(label) -> int:
    if isinstance(label, str):
        return zlib.crc32(label.encode("utf-8"))
    key = int(label)
    if key < 0:
        raise ValueError(f"stream labels must be non-negative, got {key}")
    return key


class Stream:
    """A named random stream, e.g. ``Stream(seed, "instance")``.

    Two streams built from the same seed and labels yield identical
    sequences; different labels give independent streams.
    """

    def __init__(self, seed: int, *labels):
        if int(seed) < 0:
            raise ValueError(f"seed must be non-negative, got {seed}")
        entropy = [int(seed)] + [_label_key(lab) for lab in labels]
        self.seed = int(seed)
        self.labels = labels
        self._bits = np.random.PCG64(np.random.SeedSequence(entropy))

    def _raw53(self, size: int) -> np.ndarray:
        raw = self._bits.random_raw(int(size))
        return (raw >> np.uint64(11)).astype(np.float64)

    def uniform(self, size: int) -> np.ndarray:
        """Doubles in [0, 1)."""
        return self._raw53(size) * _TWO_M53

    def uniform_open(self, size: int) -> np.ndarray:
        """Doubles in (0, 1)."""
        return (self._raw53(size) + 0.5) * _TWO_M53

    def index(self, m: int) -> int:
        """Uniform integer in [0, m)."""
        return min(int(self.uniform(1)[0] * m), m - 1)

    def exponential(self, size: int) -> np.ndarray:
        return -np.log(self.uniform_open(size))

    def standard_normal(self, size: int) -> np.ndarray:
        out = np.empty(int(size))
        have = 0
        while have < size:
            pairs = math.ceil((size - have) / 2 * 1.3) + 4
            uv = 2.0 * self.uniform(2 * pairs).reshape(pairs, 2) - 1.0
            s = uv[:, 0] ** 2 + uv[:, 1] ** 2
            ok = (s > 0.0) & (s < 1.0)
            uv, s = uv[ok], s[ok]
            z = (uv * np.sqrt(-2.0 * np.log(s) / s)[:, None]).ravel()
            take = min(len(z), size - have)
            out[have:have + take] = z[:take]
            have += take
        return out
