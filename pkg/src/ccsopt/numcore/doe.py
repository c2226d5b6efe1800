"""Space-filling initial designs on the unit cube."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ccsopt.errors import EmptyInput
from ccsopt.numcore.rng import RngStream


@dataclass(frozen=True)
class DoeDesign:
    points: np.ndarray  # (n, d) in [0, 1]
    scheme: str


def lhs_sample(n: int, d: int, rng: RngStream) -> DoeDesign:
    """Latin hypercube: each column has exactly one point per 1/n stratum."""
    if n < 1 or d < 1:
        raise EmptyInput(f"need n >= 1 and d >= 1, got n={n}, d={d}")
    gen = rng.generator()
    pts = np.empty((n, d))
    for j in range(d):
        perm = gen.permutation(n)
        pts[:, j] = (perm + gen.random(n)) / n
    return DoeDesign(points=pts, scheme="latin_hypercube")
