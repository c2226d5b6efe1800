"""Deterministic random-stream management.

Every stochastic component receives an RngStream, a value object naming a
(seed, stream_id) pair. Streams are cheap to derive and independent: child
ids are produced by a splitmix64 hash of the parent id and the child index,
and each generator() call builds a fresh PCG64 from a SeedSequence keyed on
(seed, stream_id). The same stream therefore always yields the same draws
no matter how many other streams were consumed in between.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ccsopt.errors import EmptyInput

_MASK64 = (1 << 64) - 1


def _splitmix64(z: int) -> int:
    # Finalizer from the splitmix64 PRNG; good avalanche for id mixing.
    z = (z + 0x9E3779B97F4A7C15) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return (z ^ (z >> 31)) & _MASK64


@dataclass(frozen=True)
class RngStream:
    """Immutable handle for a reproducible random stream."""

    seed: int
    stream_id: int = 0

    def generator(self) -> np.random.Generator:
        """Fresh Generator for this stream; identical draws every call."""
        ss = np.random.SeedSequence(
            entropy=self.seed & _MASK64, spawn_key=(self.stream_id & _MASK64,)
        )
        return np.random.Generator(np.random.PCG64(ss))

    def child(self, index: int) -> "RngStream":
        """Derive an independent stream for sub-task `index` (>= 0)."""
        if index < 0:
            raise EmptyInput(f"child index must be >= 0, got {index}")
        mixed = _splitmix64((self.stream_id & _MASK64) ^ _splitmix64(index + 1))
        return RngStream(seed=self.seed, stream_id=mixed)


def standard_normal(n: int, rng: RngStream) -> np.ndarray:
    """n iid N(0,1) draws from the stream."""
    if n < 1:
        raise EmptyInput(f"need n >= 1, got {n}")
    return rng.generator().standard_normal(n)
