"""Learned-feature kernel: an MLP embedding composed with a Matern 5/2 GP.

The feature map and the kernel hyperparameters are trained jointly by
gradient ascent on the exact log marginal likelihood. The marginal's
kernel-matrix gradient is 0.5 * (alpha alpha^T - K_inv); it is chained
through the Matern radial profile into embedding coordinates and then
through the network by reverse mode.

Unlike the Bayesian-MLP spec, the feature map may have zero hidden layers
(a pure linear projection), so it gets its own spec type.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ccsopt.errors import DimensionMismatch, EmptyInput, NotPositiveDefinite, ShapeMismatch
from ccsopt.numcore.linalg import chol_solve, cholesky_factor
from ccsopt.numcore.rng import RngStream
from ccsopt.surrogates.gp import GpModel, _standardize, build_gp
from ccsopt.surrogates.kernels import KernelSpec
from ccsopt.surrogates.optim import Adam

_SQRT5 = np.sqrt(5.0)


@dataclass(frozen=True)
class FeatureMapSpec:
    """MLP embedding architecture; hidden_widths may be empty (linear map)."""

    d_in: int
    hidden_widths: tuple[int, ...] = (32, 32)
    d_embed: int = 8
    activation: str = "tanh"

    def __post_init__(self):
        if self.activation != "tanh":
            raise ShapeMismatch("feature map supports tanh only")
        if self.d_in < 1 or self.d_embed < 1:
            raise ShapeMismatch("feature dims must be >= 1")

    @property
    def widths(self) -> tuple[int, ...]:
        return (self.d_in, *self.hidden_widths, self.d_embed)


def feature_n_params(spec: FeatureMapSpec) -> int:
    w = spec.widths
    return sum(w[i + 1] * w[i] + w[i + 1] for i in range(len(w) - 1))


def identity_feature_params(spec: FeatureMapSpec) -> np.ndarray:
    """W = I, b = 0 for a linear map with d_embed == d_in."""
    if spec.hidden_widths or spec.d_embed != spec.d_in:
        raise ShapeMismatch("identity init needs a square linear map")
    w = np.eye(spec.d_in)
    return np.concatenate([w.ravel(), np.zeros(spec.d_in)])


def _unpack(spec: FeatureMapSpec, params: np.ndarray):
    params = np.asarray(params, dtype=float).ravel()
    if params.size != feature_n_params(spec):
        raise ShapeMismatch(
            f"got {params.size} feature params, need {feature_n_params(spec)}"
        )
    out, pos = [], 0
    w = spec.widths
    for i in range(len(w) - 1):
        wo, wi = w[i + 1], w[i]
        out.append(
            (params[pos : pos + wo * wi].reshape(wo, wi), params[pos + wo * wi : pos + wo * wi + wo])
        )
        pos += wo * wi + wo
    return out


def feature_forward(
    spec: FeatureMapSpec, params: np.ndarray, x: np.ndarray
) -> np.ndarray:
    """(n, d_in) -> (n, d_embed); tanh on all but the last affine map."""
    h = np.atleast_2d(np.asarray(x, dtype=float))
    if h.shape[1] != spec.d_in:
        raise DimensionMismatch(f"input dim {h.shape[1]}, spec wants {spec.d_in}")
    layers = _unpack(spec, params)
    for li, (w, b) in enumerate(layers):
        z = h @ w.T + b
        h = np.tanh(z) if li < len(layers) - 1 else z
    return h


def _feature_forward_cached(spec, params, x):
    layers = _unpack(spec, params)
    acts = [x]
    zs = []
    h = x
    for li, (w, b) in enumerate(layers):
        z = h @ w.T + b
        zs.append(z)
        h = np.tanh(z) if li < len(layers) - 1 else z
        if li < len(layers) - 1:
            acts.append(h)
    return h, layers, acts, zs


def _feature_pullback(spec, layers, acts, zs, dz):
    """Map d(loss)/d(embedding) back to flat feature-param gradient."""
    grads = [None] * len(layers)
    delta = dz
    for li in range(len(layers) - 1, -1, -1):
        w, _ = layers[li]
        grads[li] = (delta.T @ acts[li], delta.sum(axis=0))
        if li > 0:
            a = np.tanh(zs[li - 1])
            delta = (delta @ w) * (1.0 - a * a)
    flat = []
    for gw, gb in grads:
        flat.append(gw.ravel())
        flat.append(gb)
    return np.concatenate(flat)


def _lml_value_and_grads(z, ys, log_ell, log_sig, log_noise):
    """LML plus gradients wrt embeddings and the three log-hypers."""
    n = z.shape[0]
    ell = np.exp(log_ell)
    sig = np.exp(log_sig)
    noise = np.exp(log_noise)

    diff = z[:, None, :] - z[None, :, :]
    d2 = np.maximum((diff * diff).sum(axis=2), 0.0) / ell**2
    r = np.sqrt(d2)
    sr = _SQRT5 * r
    e = np.exp(-sr)
    k = sig * (1.0 + sr + sr * sr / 3.0) * e

    try:
        chol = cholesky_factor(k + noise * np.eye(n), max_jitter=1e-6)
    except NotPositiveDefinite:
        return -np.inf, None, None, None, None
    alpha = chol_solve(chol, ys)
    lml = float(
        -0.5 * ys @ alpha
        - np.sum(np.log(np.diag(chol.lower)))
        - 0.5 * n * np.log(2.0 * np.pi)
    )
    if not np.isfinite(lml):
        return -np.inf, None, None, None, None

    k_inv = chol_solve(chol, np.eye(n))
    w = 0.5 * (np.outer(alpha, alpha) - k_inv)  # dLML/dK

    # radial chain: dk/dr = -sig * (5/3) * r * (1 + sr) * e
    dk_dr = -sig * (5.0 / 3.0) * r * (1.0 + sr) * e
    # embeddings enter through r = |zi - zj| / ell
    with np.errstate(invalid="ignore", divide="ignore"):
        coef = np.where(r > 0.0, w * dk_dr / (r * ell**2), 0.0)
    dz = 2.0 * (coef[:, :, None] * diff).sum(axis=1)

    g_log_ell = float((w * dk_dr * (-r)).sum())  # dr/dlog_ell = -r
    g_log_sig = float((w * k).sum())  # k proportional to sig
    g_log_noise = float(np.trace(w) * noise)
    return lml, dz, g_log_ell, g_log_sig, g_log_noise


def fit_dkl(
    x: np.ndarray,
    y: np.ndarray,
    rng: RngStream = RngStream(0),
    feature_spec: FeatureMapSpec | None = None,
    n_steps: int = 500,
    learn_rate: float = 0.01,
    **_ignored,
) -> GpModel:
    """Joint Adam ascent of feature params and log kernel hypers on LML."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    y = np.asarray(y, dtype=float).ravel()
    if x.shape[0] != y.shape[0]:
        raise DimensionMismatch(f"{x.shape[0]} inputs vs {y.shape[0]} targets")
    if x.shape[0] == 0:
        raise EmptyInput("need at least one observation")
    if feature_spec is None:
        feature_spec = FeatureMapSpec(d_in=x.shape[1])

    ys, _, y_std = _standardize(y)
    if y_std == 0.0:
        kern = KernelSpec(family="matern52", signal_variance=1e-12, noise_variance=1e-8)
        model = build_gp(x, y, kern)
        model.fit_info["degenerate"] = True
        return model

    gen = rng.generator()
    p_feat = []
    widths = feature_spec.widths
    for i in range(len(widths) - 1):
        wo, wi = widths[i + 1], widths[i]
        p_feat.append(gen.standard_normal((wo, wi)).ravel() / np.sqrt(wi))
        p_feat.append(np.zeros(wo))
    p_feat = np.concatenate(p_feat)
    hypers = np.array([np.log(1.0), 0.0, np.log(1e-2)])  # log ell, log sig, log noise

    n_feat = p_feat.size
    opt = Adam(n_feat + 3, lr=learn_rate)
    hyper_lo = np.log(np.array([0.005, 0.01, 1e-8]))
    hyper_hi = np.log(np.array([10.0, 100.0, 1.0]))

    best = (-np.inf, p_feat.copy(), hypers.copy())
    for _ in range(n_steps):
        z, layers, acts, zs = _feature_forward_cached(feature_spec, p_feat, x)
        lml, dz, g_le, g_ls, g_ln = _lml_value_and_grads(
            z, ys, hypers[0], hypers[1], hypers[2]
        )
        if lml == -np.inf:
            break
        if lml > best[0]:
            best = (lml, p_feat.copy(), hypers.copy())
        g_feat = _feature_pullback(feature_spec, layers, acts, zs, dz)
        inc = opt.step(np.concatenate([g_feat, [g_le, g_ls, g_ln]]))
        p_feat = p_feat + inc[:n_feat]
        hypers = np.clip(hypers + inc[n_feat:], hyper_lo, hyper_hi)

    _, p_feat, hypers = best
    kern = KernelSpec(
        family="dkl",
        lengthscales=np.array([float(np.exp(hypers[0]))]),
        signal_variance=float(np.exp(hypers[1])),
        noise_variance=float(np.exp(hypers[2])),
    )
    feat = p_feat.copy()
    model = build_gp(
        x, y, kern, embed=lambda q: feature_forward(feature_spec, feat, q)
    )
    model.fit_info.update(
        {"lml": best[0], "family": "dkl", "feature_spec": feature_spec,
         "feature_params": feat}
    )
    return model
