"""Self-contained deterministic randomness.

A splitmix-style 64-bit generator: the state advances by a fixed odd constant
and each output is a bijective bit mix of the state. Outputs are therefore a
pure function of (seed, draw index), which makes array generation vectorizable
and keeps every artifact reproducible across numpy versions and platforms.
"""

from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB


class SplitMix64:
    def __init__(self, seed: int):
        self._state = int(seed) & _MASK64

    def next_u64_array(self, count: int) -> np.ndarray:
        """count raw 64-bit outputs as a uint64 array."""
        if count < 0:
            raise ValueError(f"count must be >= 0, got {count}")
        steps = np.arange(count, dtype=np.uint64)
        base = np.uint64((self._state + _GAMMA) & _MASK64)
        z = base + steps * np.uint64(_GAMMA)
        self._state = (self._state + count * _GAMMA) & _MASK64
        z = z ^ (z >> np.uint64(30))
        z = z * np.uint64(_MIX1)
        z = z ^ (z >> np.uint64(27))
        z = z * np.uint64(_MIX2)
        z = z ^ (z >> np.uint64(31))
        return z

    def next_u64(self) -> int:
        return int(self.next_u64_array(1)[0])

    def uniform(self, count: int) -> np.ndarray:
        """count doubles uniform in [0, 1) at 53-bit resolution."""
        return (self.next_u64_array(count) >> np.uint64(11)) * (2.0**-53)

    def gaussian(self, count: int) -> np.ndarray:
        """count standard normal doubles via the Box-Muller transform."""
        pairs = (count + 1) // 2
        # u1 shifted into (0, 1] so the log is always finite
        u1 = ((self.next_u64_array(pairs) >> np.uint64(11)) + np.uint64(1)) * (
            2.0**-53
        )
        u2 = self.uniform(pairs)
        radius = np.sqrt(-2.0 * np.log(u1))
        theta = 2.0 * np.pi * u2
        out = np.empty(2 * pairs)
        out[0::2] = radius * np.cos(theta)
        out[1::2] = radius * np.sin(theta)
        return out[:count]

    def child(self) -> "SplitMix64":
        """Independent sub-stream. One parent draw per child, so the layout of
        derived streams is fixed no matter how much each child consumes."""
        return SplitMix64(self.next_u64())
