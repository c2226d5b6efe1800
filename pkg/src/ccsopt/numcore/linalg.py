"""Cholesky utilities with jitter escalation.

Kernel matrices are symmetric positive definite in exact arithmetic but
often indefinite at float64 resolution. cholesky_factor retries with a
geometrically growing diagonal jitter (1e-10, 1e-9, ...) up to max_jitter
before giving up, and reports the jitter it actually used.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular

from ccsopt.errors import DimensionMismatch, NotPositiveDefinite


@dataclass(frozen=True)
class CholeskyFactor:
    """Lower-triangular factor L with L @ L.T = A + jitter_used * I."""

    lower: np.ndarray
    jitter_used: float


def _jitter_schedule(max_jitter: float):
    j = 1e-10
    while j <= max_jitter * (1 + 1e-12):
        yield j
        j *= 10.0
    # land exactly on the cap when the geometric ladder skipped it
    if j / 10.0 < max_jitter * (1 - 1e-12):
        yield max_jitter


def cholesky_factor(a: np.ndarray, max_jitter: float = 1e-4) -> CholeskyFactor:
    """Factor a symmetric PSD matrix, escalating jitter only on failure."""
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionMismatch(f"expected square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise NotPositiveDefinite("matrix contains non-finite entries")
    scale = max(1.0, float(np.abs(a).max()) if a.size else 1.0)
    if a.size and float(np.abs(a - a.T).max()) > 1e-10 * scale:
        raise DimensionMismatch("matrix is not symmetric within 1e-10")

    try:
        return CholeskyFactor(lower=np.linalg.cholesky(a), jitter_used=0.0)
    except np.linalg.LinAlgError:
        pass
    eye = np.eye(a.shape[0])
    for jitter in _jitter_schedule(max_jitter):
        try:
            low = np.linalg.cholesky(a + jitter * eye)
            return CholeskyFactor(lower=low, jitter_used=jitter)
        except np.linalg.LinAlgError:
            continue
    raise NotPositiveDefinite(
        f"factorization failed with jitter up to {max_jitter:g}"
    )


def chol_solve(factor: CholeskyFactor, b: np.ndarray) -> np.ndarray:
    """Solve (L L^T) x = b given the factor from cholesky_factor."""
    low = factor.lower
    b = np.asarray(b, dtype=float)
    if b.shape[0] != low.shape[0]:
        raise DimensionMismatch(
            f"rhs has leading dim {b.shape[0]}, factor is {low.shape[0]}"
        )
    y = solve_triangular(low, b, lower=True)
    return solve_triangular(low.T, y, lower=False)
