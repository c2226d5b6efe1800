"""Bayesian-network log posterior and gradient on flat parameter vectors.

theta layout: the flat MLP parameters, optionally followed by one trailing
log-noise coordinate when the observation noise is inferred. Priors are
independent Gaussians: weights N(0, (base/sqrt(fan_in))^2), biases
N(0, bias_std^2), log-noise N(noise_log_mean, noise_log_std^2).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

from ccsopt.errors import DimensionMismatch, ShapeMismatch
from ccsopt.surrogates.mlp import MlpSpec, forward_backward, layer_shapes, n_params

_LOG2PI = np.log(2.0 * np.pi)


@dataclass(frozen=True)
class PriorSpec:
    weight_std_base: float = 1.0  # per-layer std = base / sqrt(fan_in)
    bias_std: float = 1.0
    noise_log_mean: float = float(np.log(0.1))
    noise_log_std: float = 0.5


def prior_std_vector(spec: MlpSpec, prior: PriorSpec) -> np.ndarray:
    """Per-parameter prior std, aligned with the flat layout (no noise)."""
    parts = []
    for (wo, wi), _ in layer_shapes(spec):
        parts.append(np.full(wo * wi, prior.weight_std_base / np.sqrt(wi)))
        parts.append(np.full(wo, prior.bias_std))
    return np.concatenate(parts)


def theta_dim(spec: MlpSpec, infer_noise: bool = True) -> int:
    return n_params(spec) + (1 if infer_noise else 0)


def log_posterior_and_grad(
    spec: MlpSpec,
    prior: PriorSpec,
    x: np.ndarray,
    y: np.ndarray,
    theta: np.ndarray,
    noise: Union[str, float] = "infer",
) -> tuple[float, np.ndarray]:
    """Unnormalized log posterior and its gradient wrt theta.

    noise='infer' reads log sigma from theta's last coordinate; a float
    fixes sigma and drops that coordinate.
    """
    theta = np.asarray(theta, dtype=float).ravel()
    x = np.atleast_2d(np.asarray(x, dtype=float)) if np.size(x) else np.zeros((0, spec.d_in))
    y = np.asarray(y, dtype=float).ravel()
    if x.shape[0] != y.shape[0]:
        raise DimensionMismatch(f"{x.shape[0]} inputs vs {y.shape[0]} targets")
    infer = noise == "infer"
    if theta.size != theta_dim(spec, infer):
        raise ShapeMismatch(
            f"theta has {theta.size} entries, expected {theta_dim(spec, infer)}"
        )
    params = theta[: n_params(spec)]
    if infer:
        log_sigma = float(theta[-1])
    else:
        log_sigma = float(np.log(noise))

    n = y.shape[0]
    grad = np.zeros_like(theta)

    logp = 0.0
    if n > 0:
        f, pullback = forward_backward(spec, params, x)
        resid = y - f[:, 0]
        sse = float(resid @ resid)
        # log-domain precision: exp saturates to inf/0 instead of raising,
        # so a wild log-noise proposal surfaces as -inf logp (a divergence)
        with np.errstate(over="ignore", under="ignore", invalid="ignore"):
            inv_var = float(np.exp(np.float64(-2.0 * log_sigma)))
            logp += -0.5 * n * _LOG2PI - n * log_sigma - 0.5 * sse * inv_var
            grad[: n_params(spec)] += pullback((resid * inv_var)[:, None])
            if infer:
                grad[-1] += -n + sse * inv_var

    std = prior_std_vector(spec, prior)
    logp += float(
        -0.5 * np.sum((params / std) ** 2)
        - np.sum(np.log(std))
        - 0.5 * std.size * _LOG2PI
    )
    grad[: n_params(spec)] += -params / std**2

    if infer:
        zn = (log_sigma - prior.noise_log_mean) / prior.noise_log_std
        logp += -0.5 * zn * zn - np.log(prior.noise_log_std) - 0.5 * _LOG2PI
        grad[-1] += -zn / prior.noise_log_std
    return float(logp), grad


def make_logpost(spec, prior, x, y, noise="infer"):
    """Closure suited to the samplers: theta -> (logpost, grad)."""

    def fn(theta: np.ndarray) -> tuple[float, np.ndarray]:
        return log_posterior_and_grad(spec, prior, x, y, theta, noise=noise)

    return fn
