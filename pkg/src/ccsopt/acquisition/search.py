"""Greedy batch selection by Monte-Carlo acquisition over a quasi-random pool.

Candidates live in the unit cube. For every batch slot the acquisition is
evaluated jointly over (already chosen points + each proposal) with common
random numbers: one sampling stream per slot, so every comparison inside a
scoring call sees the same posterior draws. The best proposals are refined
by derivative-free coordinate pattern search, which keeps every surrogate
family usable (parameter-ensemble posteriors are not differentiable with
respect to the candidate).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.stats import qmc

from ccsopt.errors import ConfigError, EmptyInput
from ccsopt.numcore.rng import RngStream
from ccsopt.acquisition.pareto import ParetoArchive, nondominated_boxes

_POLL_COORD_CAP = 32  # poll every coordinate up to this input dimension
_POLL_SUBSET = 16  # coordinates polled per step above the cap
_INITIAL_STEP = 0.25


@dataclass(frozen=True)
class AcqSpec:
    """What to optimize and how hard to look."""

    kind: str  # "mc_ei" or "mc_ehvi"
    n_mc_samples: int = 64
    q: int = 1
    f_best: float | None = None  # incumbent best (mc_ei)
    ref_point: np.ndarray | None = None  # overrides the archive's (mc_ehvi)
    raw_candidates: int = 1024
    n_restarts: int = 4
    local_steps: int = 3

    def __post_init__(self):
        if self.kind not in ("mc_ei", "mc_ehvi"):
            raise ConfigError(f"unknown acquisition kind {self.kind!r}")
        if self.n_mc_samples < 16:
            raise ConfigError(f"need n_mc_samples >= 16, got {self.n_mc_samples}")
        if self.q < 1:
            raise ConfigError(f"need q >= 1, got {self.q}")
        if self.raw_candidates < 1 or self.n_restarts < 1 or self.local_steps < 0:
            raise ConfigError("raw_candidates, n_restarts >= 1; local_steps >= 0")


@dataclass
class CandidateBatch:
    points: np.ndarray  # (q, d) unit-cube rows
    acq_value: float
    diagnostics: dict = field(default_factory=dict)


def _input_dim(surrogate) -> int:
    model = getattr(surrogate, "model", None)
    if model is not None:
        return int(model.x_train.shape[1])
    return int(surrogate.spec.d_in)


def _joint_samples(surrogates, pts: np.ndarray, n_mc: int, rng: RngStream):
    """(n_mc, n_pts, m) rows coherent per objective, objectives independent."""
    draws = [
        s.predict_samples(pts, n_mc, rng.child(j)) for j, s in enumerate(surrogates)
    ]
    return np.stack(draws, axis=-1)


def _corner_edges(lo, hi, ys):
    """Edge lengths of each point's dominated corner inside each box.

    ys (n, m) against boxes (B, m) -> (n, B, m); a zero edge means the
    point contributes nothing to that box.
    """
    return np.clip(
        np.minimum(hi[None, :, :], ys[:, None, :]) - lo[None, :, :], 0.0, None
    )


def _prune_boxes(lo, hi, samples):
    """Drop boxes no sampled objective vector reaches; their clipped
    corner volume is zero for every candidate in this scoring call."""
    ymax = samples.max(axis=tuple(range(samples.ndim - 1)))
    keep = np.all(lo < ymax[None, :], axis=1)
    return lo[keep], hi[keep]


def _conditional_gain(e_new, e_prefix):
    """Per-candidate volume dominated by the candidate but by neither the
    front nor the chosen prefix, summed over the front's box cover.

    e_new is (n, B, m); e_prefix is (k, B, m). Inclusion-exclusion over
    prefix subsets: vol(new \\ union) = sum_R (-1)^|R| vol(new & R-mins).
    """
    gain = e_new.prod(axis=2).sum(axis=1)
    k = e_prefix.shape[0]
    for mask in range(1, 1 << k):
        idx = [i for i in range(k) if mask >> i & 1]
        m_r = e_prefix[idx[0]] if len(idx) == 1 else e_prefix[idx].min(axis=0)
        term = np.minimum(e_new, m_r[None, :, :]).prod(axis=2).sum(axis=1)
        gain += term if len(idx) % 2 == 0 else -term
    return gain


def _score(surrogates, spec: AcqSpec, ctx, chosen: list, cands: np.ndarray,
           rng: RngStream) -> np.ndarray:
    """Joint acquisition gain of each candidate appended to the chosen prefix."""
    cands = np.atleast_2d(cands)
    k = len(chosen)
    pts = np.vstack([np.asarray(chosen), cands]) if k else cands
    samples = _joint_samples(surrogates, pts, spec.n_mc_samples, rng)
    if spec.kind == "mc_ei":
        vals = samples[..., 0]
        base = vals[:, :k].max(axis=1) if k else np.full(vals.shape[0], -np.inf)
        best = np.maximum(vals[:, k:], base[:, None])
        return np.maximum(best - ctx["f_best"], 0.0).mean(axis=0)
    lo, hi = _prune_boxes(*ctx["boxes"], samples)
    if lo.shape[0] == 0:
        return np.zeros(cands.shape[0])
    scores = np.zeros(cands.shape[0])
    for s in range(samples.shape[0]):
        e_new = _corner_edges(lo, hi, samples[s, k:, :])
        e_prefix = _corner_edges(lo, hi, samples[s, :k, :])
        scores += _conditional_gain(e_new, e_prefix)
    return scores / samples.shape[0]


def _pattern_search(x0, chosen, surrogates, spec, ctx, slot_rng, restart_idx, d):
    """Coordinate polls with step halving; incumbent re-scored in every call."""
    x = np.asarray(x0, dtype=float).copy()
    gen = slot_rng.child(10_000 + restart_idx).generator()
    step = _INITIAL_STEP
    halvings = 0
    budget = max(1, spec.local_steps) * 6
    while halvings < spec.local_steps and budget > 0:
        budget -= 1
        if d <= _POLL_COORD_CAP:
            coords = np.arange(d)
        else:
            coords = gen.choice(d, size=_POLL_SUBSET, replace=False)
        polls = np.repeat(x[None, :], 2 * coords.size, axis=0)
        rows = np.arange(coords.size)
        polls[2 * rows, coords] = np.clip(x[coords] + step, 0.0, 1.0)
        polls[2 * rows + 1, coords] = np.clip(x[coords] - step, 0.0, 1.0)
        batch = np.vstack([x[None, :], polls])
        sc = _score(surrogates, spec, ctx, chosen, batch, slot_rng)
        j = int(np.argmax(sc[1:]))
        if sc[1 + j] > sc[0]:
            x = batch[1 + j]
        else:
            step *= 0.5
            halvings += 1
    return x


def _sobol_pool(n: int, d: int, rng: RngStream) -> np.ndarray:
    sob = qmc.Sobol(d, scramble=True, seed=rng.generator())
    m = max(0, int(np.ceil(np.log2(n))))
    return sob.random_base2(m)[:n]


def optimize_acquisition(
    surrogates,
    spec: AcqSpec,
    rng: RngStream,
    archive: ParetoArchive | None = None,
) -> CandidateBatch:
    """Greedy sequential batch construction under common random numbers."""
    if not isinstance(surrogates, (list, tuple)):
        surrogates = [surrogates]
    if len(surrogates) == 0:
        raise EmptyInput("need at least one surrogate")
    if spec.kind == "mc_ei":
        if len(surrogates) != 1:
            raise ConfigError("mc_ei takes exactly one objective surrogate")
        if spec.f_best is None:
            raise ConfigError("mc_ei needs f_best")
        ctx = {"f_best": float(spec.f_best)}
    else:
        if archive is None:
            raise ConfigError("mc_ehvi needs a ParetoArchive")
        if len(surrogates) != archive.n_objectives:
            raise ConfigError(
                f"{len(surrogates)} surrogates for {archive.n_objectives} objectives"
            )
        ref = spec.ref_point if spec.ref_point is not None else archive.ref_point
        if ref is None:
            raise ConfigError("mc_ehvi needs a reference point")
        ref = np.asarray(ref, dtype=float)
        front = archive.front()
        # the front is fixed for the whole call: decompose once, score
        # every candidate and prefix against the same box cover
        ctx = {"front": front, "ref": ref, "boxes": nondominated_boxes(front, ref)}

    d = _input_dim(surrogates[0])
    pool = _sobol_pool(spec.raw_candidates, d, rng.child(0))

    chosen: list[np.ndarray] = []
    restart_values = []
    for slot in range(spec.q):
        slot_rng = rng.child(slot + 1)
        pool_scores = _score(surrogates, spec, ctx, chosen, pool, slot_rng)
        top = np.argsort(-pool_scores)[: spec.n_restarts]
        finalists = [
            _pattern_search(pool[t], chosen, surrogates, spec, ctx, slot_rng, r, d)
            for r, t in enumerate(top)
        ]
        fscores = _score(
            surrogates, spec, ctx, chosen, np.asarray(finalists), slot_rng
        )
        chosen.append(finalists[int(np.argmax(fscores))])
        restart_values.append([float(v) for v in fscores])

    points = np.asarray(chosen)
    trace = _batch_trace(surrogates, spec, ctx, points, rng.child(spec.q + 1))
    return CandidateBatch(
        points=points,
        acq_value=float(trace[-1]),
        diagnostics={"restart_values": restart_values, "batch_trace": trace},
    )


def _batch_trace(surrogates, spec, ctx, points, rng) -> list[float]:
    """Joint acquisition of each batch prefix under one fixed draw set.

    Prefix values share the sample rows, so the trace is non-decreasing by
    construction (a larger batch can only raise each row's improvement).
    """
    samples = _joint_samples(surrogates, points, spec.n_mc_samples, rng)
    q = points.shape[0]
    if spec.kind == "mc_ei":
        vals = samples[..., 0]
        cummax = np.maximum.accumulate(vals, axis=1)
        gains = np.maximum(cummax - ctx["f_best"], 0.0)
        return [float(v) for v in gains.mean(axis=0)]
    lo, hi = _prune_boxes(*ctx["boxes"], samples)
    sums = np.zeros(q)
    if lo.shape[0] == 0:
        return [0.0] * q
    for s in range(samples.shape[0]):
        edges = _corner_edges(lo, hi, samples[s])
        acc = 0.0
        for k in range(q):
            marg = _conditional_gain(edges[k : k + 1], edges[:k])
            # the true marginal is nonnegative; inclusion-exclusion can
            # cancel to a tiny negative float, which would break the
            # monotone-prefix guarantee
            acc += max(float(marg[0]), 0.0)
            sums[k] += acc
    return [float(v) for v in sums / samples.shape[0]]
