"""Exact Gaussian-process regression.

Targets are standardized internally; predictions are returned on the raw
scale. Hyperparameters are fitted by multi-start coordinate ascent on the
log marginal likelihood, with all positive hypers searched in log space.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.special import ndtri

from ccsopt.errors import DimensionMismatch, EmptyInput, NotPositiveDefinite
from ccsopt.numcore.linalg import CholeskyFactor, chol_solve, cholesky_factor
from ccsopt.numcore.rng import RngStream
from ccsopt.surrogates.kernels import (
    KernelSpec,
    kernel_matrix,
    matern52_matrix,
    nngp_matrix,
)

ARD_DIM_CAP = 20  # per-dimension lengthscales only up to this input dim

LOG_BOUNDS = {
    "lengthscale": (np.log(0.005), np.log(10.0)),
    "signal_variance": (np.log(0.01), np.log(100.0)),
    "noise_variance": (np.log(1e-8), np.log(1.0)),
    "nngp_weight_var": (np.log(0.1), np.log(10.0)),
    "nngp_bias_var": (np.log(1e-4), np.log(10.0)),
}


@dataclass
class GpModel:
    kernel: KernelSpec
    x_train: np.ndarray  # (n, d) raw inputs
    y_train: np.ndarray  # (n,) standardized targets
    y_mean: float
    y_std: float
    chol: CholeskyFactor  # factor of K + noise * I on the standardized scale
    alpha: np.ndarray  # (K + noise I)^-1 y_train
    embed: Optional[Callable[[np.ndarray], np.ndarray]] = None
    fit_info: dict = field(default_factory=dict)


@dataclass
class GpPosterior:
    mean: np.ndarray  # (nq,) raw scale
    cov: np.ndarray  # (nq, nq) raw scale, noise-free
    noise_variance: float  # raw-scale observation noise


def _embedded(model_embed, x: np.ndarray) -> np.ndarray:
    x = np.atleast_2d(np.asarray(x, dtype=float))
    return model_embed(x) if model_embed is not None else x


def build_gp(
    x: np.ndarray,
    y: np.ndarray,
    kernel: KernelSpec,
    embed: Optional[Callable[[np.ndarray], np.ndarray]] = None,
    max_jitter: float = 1e-4,
) -> GpModel:
    """Condition a GP with fixed hyperparameters on (x, y)."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    y = np.asarray(y, dtype=float).ravel()
    if x.shape[0] != y.shape[0]:
        raise DimensionMismatch(f"{x.shape[0]} inputs vs {y.shape[0]} targets")
    if x.shape[0] == 0:
        raise EmptyInput("need at least one observation")
    y_mean = float(np.mean(y))
    y_std = float(np.std(y))
    if y_std < 1e-12:
        y_std = 1.0
    ys = (y - y_mean) / y_std
    z = _embedded(embed, x)
    k = kernel_matrix(kernel, z, z)
    k = k + kernel.noise_variance * np.eye(len(ys))
    chol = cholesky_factor(k, max_jitter=max_jitter)
    alpha = chol_solve(chol, ys)
    return GpModel(
        kernel=kernel,
        x_train=x,
        y_train=ys,
        y_mean=y_mean,
        y_std=y_std,
        chol=chol,
        alpha=alpha,
        embed=embed,
    )


def log_marginal_likelihood(model: GpModel) -> float:
    """LML of the standardized targets under the model's kernel."""
    ys = model.y_train
    n = ys.shape[0]
    logdet_half = float(np.sum(np.log(np.diag(model.chol.lower))))
    return float(
        -0.5 * ys @ model.alpha - logdet_half - 0.5 * n * np.log(2.0 * np.pi)
    )


def posterior_predict(model: GpModel, x_query: np.ndarray) -> GpPosterior:
    """Noise-free posterior over latent function values at x_query."""
    from scipy.linalg import solve_triangular

    xq = np.atleast_2d(np.asarray(x_query, dtype=float))
    if xq.shape[1] != model.x_train.shape[1]:
        raise DimensionMismatch(
            f"query dim {xq.shape[1]} vs train dim {model.x_train.shape[1]}"
        )
    zq = _embedded(model.embed, xq)
    zt = _embedded(model.embed, model.x_train)
    ks = kernel_matrix(model.kernel, zq, zt)
    kqq = kernel_matrix(model.kernel, zq, zq)
    mean_s = ks @ model.alpha
    v = solve_triangular(model.chol.lower, ks.T, lower=True)
    cov_s = kqq - v.T @ v
    cov_s = 0.5 * (cov_s + cov_s.T)
    diag = np.diag(cov_s).copy()
    np.fill_diagonal(cov_s, np.maximum(diag, 0.0))
    scale = model.y_std**2
    return GpPosterior(
        mean=model.y_mean + model.y_std * mean_s,
        cov=scale * cov_s,
        noise_variance=scale * model.kernel.noise_variance,
    )


def _stratified_normals(n_rows: int, n_cols: int, gen) -> np.ndarray:
    """Column-stratified standard normals; every row is still N(0, I).

    Each column's values hit every quantile stratum once, in an
    independent random order per column, so the strata a row lands in
    are independent across columns. This cuts the Monte-Carlo error of
    per-point integrals (expected improvement in particular) roughly to
    O(1/n) without breaking row coherence.
    """
    ranks = np.argsort(gen.random((n_rows, n_cols)), axis=0)
    u = (ranks + gen.uniform(size=(n_rows, n_cols))) / n_rows
    return ndtri(np.clip(u, 1e-15, 1.0 - 1e-15))


def gp_joint_samples(
    post: GpPosterior, n_samples: int, rng: RngStream, include_noise: bool = False
) -> np.ndarray:
    """Joint draws from the posterior, shape (n_samples, nq).

    Base normals are column-stratified and paired antithetically (z, -z):
    sample means match the posterior mean exactly and acquisition
    estimators see far less Monte-Carlo noise, while each row remains a
    coherent joint draw. Dimensions with zero posterior variance
    reproduce the mean exactly.
    """
    if n_samples < 1:
        raise EmptyInput(f"need n_samples >= 1, got {n_samples}")
    mean = np.asarray(post.mean, dtype=float).ravel()
    cov = np.asarray(post.cov, dtype=float)
    nq = mean.shape[0]
    if cov.shape != (nq, nq):
        raise DimensionMismatch(f"cov shape {cov.shape} vs mean length {nq}")
    if include_noise:
        cov = cov + post.noise_variance * np.eye(nq)

    diag = np.diag(cov)
    active = diag > 0.0
    out = np.tile(mean, (n_samples, 1))
    if not np.any(active):
        return out
    sub = cov[np.ix_(active, active)]
    # jitter must track the covariance scale: objectives measured in
    # millions put variances around 1e12 and an absolute ladder would
    # never reach them
    scale = float(np.mean(np.diag(sub)))
    chol = cholesky_factor(sub / scale, max_jitter=1e-4)

    gen = rng.generator()
    n_half = (n_samples + 1) // 2
    z_half = _stratified_normals(n_half, int(active.sum()), gen)
    z = np.concatenate([z_half, -z_half], axis=0)[:n_samples]
    out[:, active] += (z @ chol.lower.T) * np.sqrt(scale)
    return out


def _standardize(y: np.ndarray) -> tuple[np.ndarray, float, float]:
    y_mean = float(np.mean(y))
    y_std = float(np.std(y))
    if y_std < 1e-12:
        return np.zeros_like(y), y_mean, 0.0
    return (y - y_mean) / y_std, y_mean, y_std


class _MaternObjective:
    """LML as a function of log-hypers, with cached pairwise distances."""

    def __init__(self, x: np.ndarray, ys: np.ndarray, ard: bool):
        self.x = x
        self.ys = ys
        self.ard = ard
        self.n, self.d = x.shape
        if not ard:
            diff2 = (x[:, None, :] - x[None, :, :]) ** 2
            self.d2_raw = diff2.sum(axis=2)
        self.n_hypers = (self.d if ard else 1) + 2

    def names(self) -> list[str]:
        ls = ["lengthscale"] * (self.d if self.ard else 1)
        return ls + ["signal_variance", "noise_variance"]

    def __call__(self, logp: np.ndarray) -> float:
        n_ls = self.n_hypers - 2
        ls = np.exp(logp[:n_ls])
        sig = float(np.exp(logp[-2]))
        noise = float(np.exp(logp[-1]))
        if self.ard:
            a = self.x / ls
            aa = np.sum(a * a, axis=1)
            d2 = np.maximum(aa[:, None] + aa[None, :] - 2.0 * (a @ a.T), 0.0)
        else:
            d2 = self.d2_raw / (ls[0] ** 2)
        sr = np.sqrt(5.0 * d2)
        k = sig * (1.0 + sr + sr * sr / 3.0) * np.exp(-sr)
        return _lml_from_k(k, noise, self.ys)


class _NngpObjective:
    """LML over (log weight_var, log bias_var, log signal, log noise)."""

    def __init__(self, x: np.ndarray, ys: np.ndarray, depth: int):
        self.x = x
        self.ys = ys
        self.depth = depth
        d_in = x.shape[1]
        self.gram = (x @ x.T) / d_in
        self.sq = np.sum(x * x, axis=1) / d_in
        self.n_hypers = 4

    def names(self) -> list[str]:
        return ["nngp_weight_var", "nngp_bias_var", "signal_variance", "noise_variance"]

    def __call__(self, logp: np.ndarray) -> float:
        sw, sb, sig, noise = np.exp(logp)
        kab = sb + sw * self.gram
        kaa = sb + sw * self.sq
        from ccsopt.surrogates.kernels import _relu_cross

        for _ in range(self.depth):
            kab = sb + sw * _relu_cross(kaa[:, None], kaa[None, :], kab)
            kaa = sb + sw * kaa / 2.0
        k = sig * kab
        # exact symmetry: floating error in the cross term breaks it slightly
        k = 0.5 * (k + k.T)
        return _lml_from_k(k, float(noise), self.ys)


def _lml_from_k(k: np.ndarray, noise: float, ys: np.ndarray) -> float:
    n = ys.shape[0]
    try:
        chol = cholesky_factor(k + noise * np.eye(n), max_jitter=1e-6)
    except NotPositiveDefinite:
        return -np.inf
    alpha = chol_solve(chol, ys)
    val = (
        -0.5 * ys @ alpha
        - np.sum(np.log(np.diag(chol.lower)))
        - 0.5 * n * np.log(2.0 * np.pi)
    )
    return float(val) if np.isfinite(val) else -np.inf


def _coordinate_ascent(
    objective, logp0: np.ndarray, lo: np.ndarray, hi: np.ndarray
) -> tuple[np.ndarray, float]:
    """Greedy per-coordinate line moves with a shrinking log step."""
    logp = np.clip(logp0.copy(), lo, hi)
    best = objective(logp)
    step = np.log(4.0)
    min_step = np.log(1.05)
    while step > min_step:
        moved = False
        for i in range(logp.size):
            for sign in (1.0, -1.0):
                # ride one direction while it keeps paying
                while True:
                    cand = logp.copy()
                    cand[i] = np.clip(cand[i] + sign * step, lo[i], hi[i])
                    if cand[i] == logp[i]:
                        break
                    val = objective(cand)
                    if val > best + 1e-10:
                        logp, best = cand, val
                        moved = True
                    else:
                        break
        if not moved:
            step /= 2.0
    return logp, best


def _default_start(names: list[str], d: int) -> np.ndarray:
    start = []
    for nm in names:
        if nm == "lengthscale":
            start.append(np.log(0.5 * np.sqrt(max(d, 1))))
        elif nm == "signal_variance":
            start.append(0.0)
        elif nm == "noise_variance":
            start.append(np.log(1e-2))
        elif nm == "nngp_weight_var":
            start.append(np.log(2.0))
        elif nm == "nngp_bias_var":
            start.append(np.log(0.1))
    return np.array(start)


def fit_hyperparams(
    x: np.ndarray,
    y: np.ndarray,
    family: str = "matern52",
    rng: RngStream = RngStream(0),
    n_starts: int = 8,
    nngp_depth: int = 3,
    **options,
) -> GpModel:
    """Fit kernel hypers by multi-start log-space coordinate ascent.

    family 'dkl' trains a feature map jointly with the kernel hypers by
    gradient ascent and is handled in the dkl module.
    """
    if family == "dkl":
        from ccsopt.surrogates.dkl import fit_dkl

        return fit_dkl(x, y, rng=rng, **options)

    x = np.atleast_2d(np.asarray(x, dtype=float))
    y = np.asarray(y, dtype=float).ravel()
    if x.shape[0] != y.shape[0]:
        raise DimensionMismatch(f"{x.shape[0]} inputs vs {y.shape[0]} targets")
    if x.shape[0] == 0:
        raise EmptyInput("need at least one observation")
    n, d = x.shape

    ys, y_mean, y_std = _standardize(y)
    if y_std == 0.0:
        # constant targets: collapse to a flat model under the noise floor
        kern = KernelSpec(
            family=family if family in ("matern52", "nngp") else "matern52",
            lengthscales=np.ones(1),
            signal_variance=1e-12,
            noise_variance=1e-8,
            nngp_depth=nngp_depth,
        )
        model = build_gp(x, y, kern)
        model.fit_info["degenerate"] = True
        return model

    if family == "matern52":
        ard = d <= ARD_DIM_CAP
        obj = _MaternObjective(x, ys, ard)
    elif family == "nngp":
        obj = _NngpObjective(x, ys, nngp_depth)
    else:
        raise DimensionMismatch(f"unknown kernel family {family!r}")

    names = obj.names()
    lo = np.array([LOG_BOUNDS[nm][0] for nm in names])
    hi = np.array([LOG_BOUNDS[nm][1] for nm in names])

    gen = rng.generator()
    starts = [_default_start(names, d)]
    for _ in range(max(n_starts - 1, 0)):
        starts.append(lo + (hi - lo) * gen.random(len(names)))

    best_logp, best_val, start_vals = None, -np.inf, []
    for s in starts:
        start_vals.append(obj(np.clip(s, lo, hi)))
        logp, val = _coordinate_ascent(obj, s, lo, hi)
        if val > best_val:
            best_logp, best_val = logp, val

    vals = np.exp(best_logp)
    if family == "matern52":
        n_ls = len(names) - 2
        kern = KernelSpec(
            family="matern52",
            lengthscales=vals[:n_ls].copy(),
            signal_variance=float(vals[-2]),
            noise_variance=float(vals[-1]),
        )
    else:
        kern = KernelSpec(
            family="nngp",
            lengthscales=np.ones(1),
            signal_variance=float(vals[2]),
            noise_variance=float(vals[3]),
            nngp_depth=nngp_depth,
            nngp_weight_var=float(vals[0]),
            nngp_bias_var=float(vals[1]),
        )
    model = build_gp(x, y, kern)
    model.fit_info.update(
        {"lml": best_val, "start_lmls": start_vals, "family": family}
    )
    return model
