"""Analytic benchmark objectives on the unit cube, sign-flipped to
maximization so they share the optimizer's convention."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from ccsopt.errors import DimensionMismatch, UnknownBenchmark

_H6_ALPHA = np.array([1.0, 1.2, 3.0, 3.2])
_H6_A = np.array(
    [
        [10.0, 3.0, 17.0, 3.5, 1.7, 8.0],
        [0.05, 10.0, 17.0, 0.1, 8.0, 14.0],
        [3.0, 3.5, 1.7, 10.0, 17.0, 8.0],
        [17.0, 8.0, 0.05, 10.0, 0.1, 14.0],
    ]
)
_H6_P = 1.0e-4 * np.array(
    [
        [1312, 1696, 5569, 124, 8283, 5886],
        [2329, 4135, 8307, 3736, 1004, 9991],
        [2348, 1451, 3522, 2883, 3047, 6650],
        [4047, 8828, 8732, 5743, 1091, 381],
    ]
)


def _branin(u: np.ndarray) -> np.ndarray:
    x1 = -5.0 + 15.0 * u[0]
    x2 = 15.0 * u[1]
    b = 5.1 / (4.0 * np.pi**2)
    c = 5.0 / np.pi
    value = (
        (x2 - b * x1**2 + c * x1 - 6.0) ** 2
        + 10.0 * (1.0 - 1.0 / (8.0 * np.pi)) * np.cos(x1)
        + 10.0
    )
    return np.array([-value])


def _hartmann6(u: np.ndarray) -> np.ndarray:
    sq = np.sum(_H6_A * (u[None, :] - _H6_P) ** 2, axis=1)
    return np.array([float(_H6_ALPHA @ np.exp(-sq))])


def _dtlz2_m2(u: np.ndarray) -> np.ndarray:
    g = float(np.sum((u[1:] - 0.5) ** 2))
    theta = 0.5 * np.pi * u[0]
    return -np.array([(1.0 + g) * np.cos(theta), (1.0 + g) * np.sin(theta)])


@dataclass(frozen=True)
class BenchmarkSpec:
    name: str
    dim: int
    n_objectives: int
    fn: Callable[[np.ndarray], np.ndarray]


BENCHMARKS: dict[str, BenchmarkSpec] = {
    "branin": BenchmarkSpec("branin", 2, 1, _branin),
    "hartmann6": BenchmarkSpec("hartmann6", 6, 1, _hartmann6),
    "dtlz2_m2": BenchmarkSpec("dtlz2_m2", 6, 2, _dtlz2_m2),
}


def benchmark_eval(name: str, x) -> np.ndarray:
    """Evaluate a registered benchmark at a unit-cube point."""
    try:
        spec = BENCHMARKS[name]
    except KeyError:
        raise UnknownBenchmark(
            f"{name!r}; known: {sorted(BENCHMARKS)}"
        ) from None
    u = np.asarray(x, dtype=float).ravel()
    if u.shape[0] != spec.dim:
        raise DimensionMismatch(f"{name} expects dim {spec.dim}, got {u.shape[0]}")
    if np.any(u < 0.0) or np.any(u > 1.0):
        raise ValueError(f"{name} input must lie in the unit cube")
    return spec.fn(u)
