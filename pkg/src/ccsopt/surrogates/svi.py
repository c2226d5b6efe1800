"""Mean-field Gaussian variational inference by stochastic ELBO ascent.

The core works on any (logpost, grad) callable so it can be checked against
conjugate closed forms; the network wrapper plugs in the Bayesian-MLP
posterior. Reparameterization: theta = mu + exp(log_sigma) * eps, with the
entropy term handled analytically (its log_sigma gradient is exactly 1).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ccsopt.errors import EmptyInput, NonFiniteElbo
from ccsopt.numcore.rng import RngStream
from ccsopt.surrogates.bnn import MlpSpec, PriorSpec, make_logpost, theta_dim
from ccsopt.surrogates.hmc import PosteriorEnsemble
from ccsopt.surrogates.optim import Adam

_HALF_LOG_2PIE = 0.5 * np.log(2.0 * np.pi * np.e)


@dataclass
class VariationalParams:
    mu: np.ndarray
    log_sigma: np.ndarray
    elbo_trace: np.ndarray


def svi_fit_density(
    fng,
    dim: int,
    rng: RngStream,
    n_steps: int = 3000,
    learn_rate: float = 0.01,
    n_mc: int = 8,
    init_mu: np.ndarray | None = None,
    init_log_sigma: float = np.log(0.1),
    tail_average: float = 0.2,
) -> VariationalParams:
    """Fit q = N(mu, diag(exp(2 log_sigma))) to an unnormalized density.

    The returned parameters are the average of the final tail_average
    fraction of iterates, which suppresses the stationary stochastic
    jitter of the Adam updates around the optimum.
    """
    if n_mc < 1:
        raise EmptyInput(f"need n_mc >= 1, got {n_mc}")
    if n_steps < 1:
        raise EmptyInput(f"need n_steps >= 1, got {n_steps}")
    gen = rng.generator()
    mu = np.zeros(dim) if init_mu is None else np.asarray(init_mu, dtype=float).copy()
    log_sigma = np.full(dim, float(init_log_sigma))
    opt = Adam(2 * dim, lr=learn_rate)

    trace = np.empty(n_steps)
    tail_start = max(0, int(np.floor(n_steps * (1.0 - tail_average))))
    mu_acc = np.zeros(dim)
    ls_acc = np.zeros(dim)
    n_acc = 0

    for step in range(n_steps):
        sigma = np.exp(log_sigma)
        g_mu = np.zeros(dim)
        g_ls = np.zeros(dim)
        logp_sum = 0.0
        for _ in range(n_mc):
            eps = gen.standard_normal(dim)
            theta = mu + sigma * eps
            logp, grad = fng(theta)
            logp_sum += logp
            g_mu += grad
            g_ls += grad * eps * sigma
        g_mu /= n_mc
        g_ls = g_ls / n_mc + 1.0  # +1: analytic entropy gradient per coord
        entropy = float(np.sum(log_sigma)) + dim * _HALF_LOG_2PIE
        elbo = logp_sum / n_mc + entropy
        if not np.isfinite(elbo):
            raise NonFiniteElbo(f"ELBO became non-finite at step {step}")
        trace[step] = elbo

        inc = opt.step(np.concatenate([g_mu, g_ls]))
        mu = mu + inc[:dim]
        log_sigma = log_sigma + inc[dim:]
        if step >= tail_start:
            mu_acc += mu
            ls_acc += log_sigma
            n_acc += 1

    if n_acc > 0:
        mu, log_sigma = mu_acc / n_acc, ls_acc / n_acc
    return VariationalParams(mu=mu, log_sigma=log_sigma, elbo_trace=trace)


def svi_fit(
    spec: MlpSpec,
    prior: PriorSpec,
    x: np.ndarray,
    y: np.ndarray,
    rng: RngStream,
    n_steps: int = 3000,
    learn_rate: float = 0.01,
    n_mc: int = 8,
    noise: str | float = "infer",
) -> VariationalParams:
    """Variational fit of the Bayesian-MLP posterior."""
    fng = make_logpost(spec, prior, x, y, noise=noise)
    dim = theta_dim(spec, infer_noise=noise == "infer")
    return svi_fit_density(
        fng, dim, rng, n_steps=n_steps, learn_rate=learn_rate, n_mc=n_mc
    )


def svi_posterior_samples(
    vp: VariationalParams, n: int, rng: RngStream
) -> PosteriorEnsemble:
    """n parameter draws theta = mu + exp(log_sigma) * z."""
    if n < 1:
        raise EmptyInput(f"need n >= 1, got {n}")
    z = rng.generator().standard_normal((n, vp.mu.shape[0]))
    members = vp.mu + np.exp(vp.log_sigma) * z
    return PosteriorEnsemble(
        members=members,
        weights=np.full(n, 1.0 / n),
        provenance="svi",
        diagnostics={"final_elbo": float(vp.elbo_trace[-1])},
    )
