"""Covariance kernels: Matern 5/2 with ARD, and the ReLU network kernel.

The network kernel is the infinite-width limit of a fully connected ReLU
net: the arc-cosine order-1 recursion. depth counts ReLU hidden layers, so
the depth-L kernel is the covariance of the scalar pre-activation output of
an L-hidden-layer network.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from ccsopt.errors import DimensionMismatch

_SQRT5 = np.sqrt(5.0)


@dataclass
class KernelSpec:
    """Hyperparameters shared by every kernel family.

    lengthscales has one entry per input dimension (ARD) or a single entry
    (isotropic). nngp_* are ignored by matern52; matern hypers are ignored
    by nngp except signal_variance and noise_variance.
    """

    family: str = "matern52"
    lengthscales: np.ndarray = field(default_factory=lambda: np.ones(1))
    signal_variance: float = 1.0
    noise_variance: float = 1e-6
    nngp_depth: int = 3
    nngp_weight_var: float = 2.0
    nngp_bias_var: float = 0.1

    def copy(self, **changes) -> "KernelSpec":
        out = replace(self, **changes)
        out.lengthscales = np.array(out.lengthscales, dtype=float, copy=True)
        return out


def _scaled_sqdist(x1: np.ndarray, x2: np.ndarray, ls: np.ndarray) -> np.ndarray:
    """Pairwise squared distance of rows after dividing coords by ls."""
    a = x1 / ls
    b = x2 / ls
    aa = np.sum(a * a, axis=1)[:, None]
    bb = np.sum(b * b, axis=1)[None, :]
    d2 = aa + bb - 2.0 * (a @ b.T)
    return np.maximum(d2, 0.0)


def _check_pair(x1: np.ndarray, x2: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    x1 = np.atleast_2d(np.asarray(x1, dtype=float))
    x2 = np.atleast_2d(np.asarray(x2, dtype=float))
    if x1.shape[1] != x2.shape[1]:
        raise DimensionMismatch(
            f"inputs have {x1.shape[1]} and {x2.shape[1]} features"
        )
    return x1, x2


def _broadcast_ls(spec: KernelSpec, d: int) -> np.ndarray:
    ls = np.atleast_1d(np.asarray(spec.lengthscales, dtype=float))
    if ls.size == 1:
        return np.full(d, ls[0])
    if ls.size != d:
        raise DimensionMismatch(
            f"{ls.size} lengthscales for {d}-dimensional inputs"
        )
    return ls


def matern52_matrix(spec: KernelSpec, x1: np.ndarray, x2: np.ndarray) -> np.ndarray:
    """Matern 5/2 cross-covariance matrix (no noise term)."""
    x1, x2 = _check_pair(x1, x2)
    ls = _broadcast_ls(spec, x1.shape[1])
    r = np.sqrt(_scaled_sqdist(x1, x2, ls))
    sr = _SQRT5 * r
    return spec.signal_variance * (1.0 + sr + sr * sr / 3.0) * np.exp(-sr)


def matern52(x1: np.ndarray, x2: np.ndarray, spec: KernelSpec) -> float:
    """Matern 5/2 kernel value for a single pair of points."""
    return float(matern52_matrix(spec, np.atleast_2d(x1), np.atleast_2d(x2))[0, 0])


def _relu_cross(kaa, kbb, kab):
    """E[relu(u) relu(v)] for (u,v) ~ N(0, [[kaa, kab], [kab, kbb]])."""
    denom = np.sqrt(np.maximum(kaa * kbb, 0.0))
    safe = np.maximum(denom, 1e-300)
    cos_t = np.clip(kab / safe, -1.0, 1.0)
    theta = np.arccos(cos_t)
    out = denom / (2.0 * np.pi) * (np.sin(theta) + (np.pi - theta) * cos_t)
    return np.where(denom > 0.0, out, 0.0)


def nngp_matrix(spec: KernelSpec, x1: np.ndarray, x2: np.ndarray) -> np.ndarray:
    """ReLU arc-cosine kernel matrix after nngp_depth hidden layers."""
    x1, x2 = _check_pair(x1, x2)
    d_in = x1.shape[1]
    sw = spec.nngp_weight_var
    sb = spec.nngp_bias_var
    kab = sb + sw * (x1 @ x2.T) / d_in
    kaa = sb + sw * np.sum(x1 * x1, axis=1) / d_in
    kbb = sb + sw * np.sum(x2 * x2, axis=1) / d_in
    for _ in range(spec.nngp_depth):
        kab = sb + sw * _relu_cross(kaa[:, None], kbb[None, :], kab)
        kaa = sb + sw * kaa / 2.0
        kbb = sb + sw * kbb / 2.0
    return spec.signal_variance * kab


def nngp_kernel(x1: np.ndarray, x2: np.ndarray, spec: KernelSpec) -> float:
    """Network kernel value for a single pair of points."""
    return float(nngp_matrix(spec, np.atleast_2d(x1), np.atleast_2d(x2))[0, 0])


def kernel_matrix(spec: KernelSpec, x1: np.ndarray, x2: np.ndarray) -> np.ndarray:
    """Dispatch on spec.family. dkl uses matern52 on embedded inputs, so the
    caller embeds first and passes family='matern52' semantics here."""
    if spec.family in ("matern52", "dkl"):
        return matern52_matrix(spec, x1, x2)
    if spec.family == "nngp":
        return nngp_matrix(spec, x1, x2)
    raise DimensionMismatch(f"unknown kernel family {spec.family!r}")
