"""Pareto bookkeeping and exact hypervolume for 2-4 objectives.

Maximization convention throughout. The hypervolume of a front Y relative
to a reference point r is the Lebesgue measure of the union of boxes
[r, y] over y in Y, computed exactly by recursive objective slicing with
dominance filtering in every slice. The same slicing, run on the
complement, yields a disjoint box cover of the not-yet-dominated region,
which turns per-sample hypervolume improvement into a vectorized
clip-and-product over boxes.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ccsopt.errors import DimensionMismatch, EmptyInput, ObjectiveCountUnsupported

MIN_OBJECTIVES = 2
MAX_OBJECTIVES = 4


def pareto_front(ys) -> np.ndarray:
    """Indices of non-dominated rows; exact duplicates keep the lowest index."""
    ys = np.atleast_2d(np.asarray(ys, dtype=float))
    n = ys.shape[0]
    if n == 0:
        return np.empty(0, dtype=int)
    # ge[i, j]: row j >= row i in every objective
    ge = np.all(ys[None, :, :] >= ys[:, None, :], axis=2)
    gt = np.any(ys[None, :, :] > ys[:, None, :], axis=2)
    dominated = np.any(ge & gt, axis=1)
    eq = ge & ~gt  # exact duplicates (and self)
    earlier = np.tril(np.ones((n, n), dtype=bool), k=-1)
    dup_later = np.any(eq & earlier, axis=1)
    return np.flatnonzero(~dominated & ~dup_later)


def _clip_front(front, ref) -> tuple[np.ndarray, np.ndarray]:
    front = np.asarray(front, dtype=float)
    if front.size == 0:
        front = front.reshape(0, ref.size if ref is not None else 0)
    front = np.atleast_2d(front)
    ref = np.asarray(ref, dtype=float).ravel()
    m = ref.size
    if not MIN_OBJECTIVES <= m <= MAX_OBJECTIVES:
        raise ObjectiveCountUnsupported(
            f"supported objective counts are {MIN_OBJECTIVES}..{MAX_OBJECTIVES}, got {m}"
        )
    if front.shape[0] and front.shape[1] != m:
        raise DimensionMismatch(
            f"front has {front.shape[1]} objectives, reference has {m}"
        )
    return np.maximum(front, ref), ref


def _front2d(pts: np.ndarray) -> np.ndarray:
    """2-D maximization front in canonical order (x desc, y strictly asc).

    Same membership rule as pareto_front (duplicates collapse); sorting
    replaces the pairwise dominance matrix on this hot path.
    """
    p = pts[np.lexsort((-pts[:, 1], -pts[:, 0]))]
    ymax = np.maximum.accumulate(p[:, 1])
    keep = np.empty(p.shape[0], dtype=bool)
    keep[0] = True
    keep[1:] = p[1:, 1] > ymax[:-1]
    return p[keep]


def _filtered(a: np.ndarray) -> np.ndarray:
    if a.shape[1] == 2 and a.shape[0] > 1:
        return _front2d(a)
    return a[pareto_front(a)]


def _level_groups(pts, last, levels, floor_all):
    """Yield (top, floor, projected front) per run of slice levels.

    Slicing the last objective at each distinct level is exact but wasteful:
    points entering below a level often change nothing after projection and
    dominance filtering, so consecutive slabs frequently share one slice
    front. Runs are grouped so callers recurse once per distinct slice,
    with the run's total height. Filtered sets never recur after changing
    (supersets cannot reproduce an earlier front), so grouping consecutive
    runs loses nothing.
    """
    k = 0
    pending = None  # level k's filtered slice when the previous run broke on it
    while k < levels.size:
        v = float(levels[k])
        if pending is None:
            pending = _filtered(pts[last >= v, :-1])
        active, pending = pending, None
        k += 1
        while k < levels.size:
            a = _filtered(pts[last >= levels[k], :-1])
            if a.shape != active.shape or not np.array_equal(a, active):
                pending = a
                break
            k += 1
        floor = float(levels[k]) if k < levels.size else floor_all
        yield v, floor, active


def _hv_recurse(pts: np.ndarray, ref: np.ndarray) -> float:
    """Exact dominated volume; pts already clipped to >= ref."""
    if pts.shape[0] == 0:
        return 0.0
    if ref.size == 2:
        order = np.argsort(-pts[:, 0])
        hv = 0.0
        height = ref[1]
        for i in order:
            if pts[i, 1] > height:
                hv += (pts[i, 0] - ref[0]) * (pts[i, 1] - height)
                height = pts[i, 1]
        return hv
    last = pts[:, -1]
    levels = np.unique(last[last > ref[-1]])[::-1]
    hv = 0.0
    for v, floor, active in _level_groups(pts, last, levels, float(ref[-1])):
        hv += (v - floor) * _hv_recurse(active, ref[:-1])
    return hv


def hypervolume(front, ref) -> float:
    """Exact hypervolume of a maximization front relative to ref.

    Points not dominating ref are clipped to it (zero contribution).
    """
    pts, ref = _clip_front(front, ref)
    if pts.shape[0] == 0:
        return 0.0
    pts = pts[pareto_front(pts)]
    return float(_hv_recurse(pts, ref))


def _boxes_recurse(pts: np.ndarray, lo: np.ndarray, out_lo, out_hi, tail_lo, tail_hi):
    """Disjoint boxes covering [lo, inf)^m minus the region dominated by pts.

    tail_lo/tail_hi carry the already-fixed trailing coordinates of the
    enclosing slices.
    """
    m = lo.size
    if pts.shape[0] == 0:
        out_lo.append(list(lo) + tail_lo)
        out_hi.append([np.inf] * m + tail_hi)
        return
    if m == 1:
        out_lo.append([float(pts[:, 0].max())] + tail_lo)
        out_hi.append([np.inf] + tail_hi)
        return
    if m == 2:
        # staircase complement directly: the strip right of the front plus
        # one vertical slab per step (pts is a front: x desc => y asc)
        order = np.argsort(-pts[:, 0])
        sx = pts[order, 0]
        sy = pts[order, 1]
        out_lo.append([float(sx[0]), float(lo[1])] + tail_lo)
        out_hi.append([np.inf, np.inf] + tail_hi)
        for i in range(sx.size):
            left = float(sx[i + 1]) if i + 1 < sx.size else float(lo[0])
            out_lo.append([left, float(sy[i])] + tail_lo)
            out_hi.append([float(sx[i]), np.inf] + tail_hi)
        return
    last = pts[:, -1]
    levels = np.unique(last[last > lo[-1]])[::-1]
    if levels.size == 0:
        out_lo.append(list(lo) + tail_lo)
        out_hi.append([np.inf] * m + tail_hi)
        return
    # above the highest level nothing dominates
    out_lo.append(list(lo[:-1]) + [float(levels[0])] + tail_lo)
    out_hi.append([np.inf] * m + tail_hi)
    for v, floor, active in _level_groups(pts, last, levels, float(lo[-1])):
        _boxes_recurse(
            active, lo[:-1], out_lo, out_hi,
            [floor] + tail_lo, [v] + tail_hi,
        )


def _merge_boxes(lo: np.ndarray, hi: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Fuse abutting boxes that agree in every extent but one.

    The slicing recursion stacks thin slabs along each objective; fusing
    them keeps the cover disjoint and its union unchanged while shrinking
    the array every improvement scan runs over. Extents are copied, never
    computed, so exact float equality identifies mergeable neighbors.
    """
    m = lo.shape[1]
    changed = True
    while changed and lo.shape[0] > 1:
        changed = False
        for j in range(m):
            other = [k for k in range(m) if k != j]
            keys = np.concatenate([lo[:, other], hi[:, other]], axis=1)
            order = np.lexsort((lo[:, j],) + tuple(keys.T))
            klo, khi, kk = lo[order], hi[order], keys[order]
            same = np.all(kk[1:] == kk[:-1], axis=1)
            adj = same & (khi[:-1, j] == klo[1:, j])
            if not adj.any():
                continue
            changed = True
            starts = np.flatnonzero(np.concatenate(([True], ~adj)))
            ends = np.concatenate((starts[1:], [lo.shape[0]])) - 1
            lo, hi = klo[starts], khi[starts].copy()
            hi[:, j] = khi[ends, j]
    return lo, hi


def nondominated_boxes(front, ref) -> tuple[np.ndarray, np.ndarray]:
    """Disjoint boxes [lower, upper) covering the region above ref that the
    front does not dominate; uppers may be +inf."""
    pts, ref = _clip_front(front, ref)
    if pts.shape[0]:
        pts = pts[pareto_front(pts)]
    out_lo: list[list[float]] = []
    out_hi: list[list[float]] = []
    _boxes_recurse(pts, ref, out_lo, out_hi, [], [])
    return _merge_boxes(
        np.asarray(out_lo, dtype=float), np.asarray(out_hi, dtype=float)
    )


def box_improvement(lower: np.ndarray, upper: np.ndarray, ys: np.ndarray) -> np.ndarray:
    """Hypervolume gained by each candidate row of ys against the box cover."""
    ys = np.atleast_2d(np.asarray(ys, dtype=float))
    n, m = ys.shape
    if lower.shape[0] == 0:
        return np.zeros(n)
    out = np.empty(n)
    # chunk candidates so the (chunk, boxes, m) intermediate stays small
    chunk = max(1, int(4_000_000 // max(lower.shape[0] * m, 1)))
    for s in range(0, n, chunk):
        block = ys[s : s + chunk]
        edges = np.minimum(upper[None, :, :], block[:, None, :]) - lower[None, :, :]
        np.clip(edges, 0.0, None, out=edges)
        out[s : s + chunk] = edges.prod(axis=2).sum(axis=1)
    return out


def default_reference(ys) -> np.ndarray:
    """Per-objective observed minimum minus 10% of the observed range."""
    ys = np.atleast_2d(np.asarray(ys, dtype=float))
    if ys.shape[0] == 0:
        raise EmptyInput("need at least one objective vector")
    lo = ys.min(axis=0)
    span = ys.max(axis=0) - lo
    pad = np.where(span > 0.0, 0.1 * span, 1e-6)
    return lo - pad


@dataclass
class ParetoArchive:
    """Evaluated points with their objective vectors and the current front."""

    n_objectives: int
    points: list = field(default_factory=list)  # (x, y) pairs
    ref_point: np.ndarray | None = None

    def __post_init__(self):
        if not MIN_OBJECTIVES <= self.n_objectives <= MAX_OBJECTIVES:
            raise ObjectiveCountUnsupported(
                f"supported objective counts are {MIN_OBJECTIVES}.."
                f"{MAX_OBJECTIVES}, got {self.n_objectives}"
            )

    def add(self, x, y) -> None:
        y = np.asarray(y, dtype=float).ravel()
        if y.size != self.n_objectives:
            raise DimensionMismatch(
                f"objective vector has {y.size} entries, expected {self.n_objectives}"
            )
        self.points.append((np.asarray(x, dtype=float).copy(), y.copy()))

    @property
    def ys(self) -> np.ndarray:
        if not self.points:
            return np.zeros((0, self.n_objectives))
        return np.stack([y for _, y in self.points])

    @property
    def front_indices(self) -> np.ndarray:
        return pareto_front(self.ys)

    def front(self) -> np.ndarray:
        return self.ys[self.front_indices]

    def update_reference(self) -> np.ndarray:
        """Recompute ref from everything observed; never moves up."""
        fresh = default_reference(self.ys)
        if self.ref_point is not None:
            fresh = np.minimum(fresh, self.ref_point)
        self.ref_point = fresh
        return fresh

    def hypervolume(self, ref=None) -> float:
        r = self.ref_point if ref is None else ref
        if r is None:
            raise EmptyInput("archive has no reference point")
        return hypervolume(self.front(), r)
