"""Monte-Carlo acquisition values over coherent posterior sample rows."""

from __future__ import annotations

import numpy as np

from ccsopt.errors import EmptyInput, ShapeMismatch
from ccsopt.acquisition.pareto import ParetoArchive, hypervolume


def mc_ei(samples, f_best: float) -> float:
    """Mean over rows of max(0, best batch value - f_best).

    samples: (n_rows, q) joint draws; each row is one function realization
    over the whole candidate batch.
    """
    samples = np.atleast_2d(np.asarray(samples, dtype=float))
    if samples.shape[0] == 0:
        raise EmptyInput("need at least one sample row")
    gain = samples.max(axis=1) - float(f_best)
    return float(np.mean(np.maximum(gain, 0.0)))


def mc_ehvi(samples, archive: ParetoArchive) -> float:
    """Mean over rows of HV(front + batch row) - HV(front).

    samples: (n_rows, q, m) per-row objective vectors for the batch;
    a (n_rows, m) matrix is treated as q = 1.
    """
    samples = np.asarray(samples, dtype=float)
    if samples.ndim == 2:
        samples = samples[:, None, :]
    if samples.ndim != 3:
        raise ShapeMismatch(f"expected (rows, q, m) samples, got {samples.shape}")
    if samples.shape[0] == 0:
        raise EmptyInput("need at least one sample row")
    if samples.shape[2] != archive.n_objectives:
        raise ShapeMismatch(
            f"samples carry {samples.shape[2]} objectives, archive has"
            f" {archive.n_objectives}"
        )
    ref = archive.ref_point
    if ref is None:
        raise EmptyInput("archive has no reference point")
    front = archive.front()
    hv0 = hypervolume(front, ref)
    total = 0.0
    for row in samples:
        total += hypervolume(np.vstack([front, row]), ref) - hv0
    return float(total / samples.shape[0])
