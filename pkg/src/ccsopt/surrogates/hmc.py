"""Hamiltonian Monte Carlo with dual-averaging step-size adaptation.

Targets are supplied as a callable theta -> (log density, gradient). The
integrator uses an identity mass matrix; trajectories whose energy error
exceeds MAX_ENERGY_ERROR are counted as divergent and rejected.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ccsopt.errors import EmptyInput
from ccsopt.numcore.rng import RngStream

MAX_ENERGY_ERROR = 1000.0


@dataclass
class PosteriorEnsemble:
    """Weighted parameter-vector atoms representing a posterior."""

    members: np.ndarray  # (m, dim)
    weights: np.ndarray  # (m,) nonnegative, sums to 1
    provenance: str
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        self.members = np.atleast_2d(np.asarray(self.members, dtype=float))
        self.weights = np.asarray(self.weights, dtype=float).ravel()
        if self.members.shape[0] != self.weights.shape[0]:
            raise EmptyInput("one weight per member required")
        if self.members.shape[0] == 0:
            raise EmptyInput("ensemble needs at least one member")


def leapfrog(theta, r, grad, eps, fng):
    """One leapfrog step; returns (theta', r', grad', logp')."""
    # divergent trajectories overflow on purpose; inf/nan mark them downstream
    with np.errstate(over="ignore", invalid="ignore"):
        r_half = r + 0.5 * eps * grad
        theta_new = theta + eps * r_half
        logp_new, grad_new = fng(theta_new)
        r_new = r_half + 0.5 * eps * grad_new
    return theta_new, r_new, grad_new, logp_new


class DualAveraging:
    """Nesterov dual averaging on log step size (target acceptance form)."""

    def __init__(self, eps0: float, target: float = 0.8):
        self.mu = np.log(10.0 * eps0)
        self.target = target
        self.log_eps = np.log(eps0)
        self.log_eps_bar = 0.0
        self.h_bar = 0.0
        self.m = 0
        self.gamma = 0.05
        self.t0 = 10.0
        self.kappa = 0.75

    def update(self, accept_prob: float) -> float:
        self.m += 1
        frac = 1.0 / (self.m + self.t0)
        self.h_bar = (1 - frac) * self.h_bar + frac * (self.target - accept_prob)
        self.log_eps = self.mu - np.sqrt(self.m) / self.gamma * self.h_bar
        w = self.m ** (-self.kappa)
        self.log_eps_bar = w * self.log_eps + (1 - w) * self.log_eps_bar
        return float(np.exp(self.log_eps))

    def adapted(self) -> float:
        return float(np.exp(self.log_eps_bar)) if self.m else float(np.exp(self.log_eps))


def find_initial_step(fng, theta, gen, eps0: float = 1.0) -> float:
    """Double/halve eps until one leapfrog's acceptance crosses 0.5."""
    logp, grad = fng(theta)
    r = gen.standard_normal(theta.shape[0])
    h0 = -logp + 0.5 * r @ r
    eps = eps0
    _, r1, _, logp1 = leapfrog(theta, r, grad, eps, fng)
    h1 = -logp1 + 0.5 * r1 @ r1
    d_h = h0 - h1 if np.isfinite(h1) else -np.inf
    direction = 1.0 if d_h > np.log(0.5) else -1.0
    for _ in range(50):
        eps *= 2.0**direction
        _, r1, _, logp1 = leapfrog(theta, r, grad, eps, fng)
        h1 = -logp1 + 0.5 * r1 @ r1
        d_h = h0 - h1 if np.isfinite(h1) else -np.inf
        if direction * d_h <= direction * np.log(0.5):
            break
    return float(eps)


def hmc_sample(
    fng,
    init: np.ndarray,
    rng: RngStream,
    n_warmup: int = 500,
    n_draws: int = 256,
    n_leapfrog: int = 32,
    target_accept: float = 0.8,
    step_size: float | None = None,
) -> PosteriorEnsemble:
    """Sample with fixed-length trajectories, adapting eps during warmup."""
    if n_draws < 1:
        raise EmptyInput(f"need n_draws >= 1, got {n_draws}")
    theta = np.asarray(init, dtype=float).copy()
    gen = rng.generator()
    logp, grad = fng(theta)

    eps = step_size if step_size is not None else find_initial_step(fng, theta, gen)
    adapt = DualAveraging(eps, target=target_accept)

    draws = np.empty((n_draws, theta.shape[0]))
    divergences = 0
    accept_sum = 0.0

    for it in range(n_warmup + n_draws):
        sampling = it >= n_warmup
        r0 = gen.standard_normal(theta.shape[0])
        h0 = -logp + 0.5 * r0 @ r0
        th, rr, gr, lp = theta, r0, grad, logp
        diverged = False
        for _ in range(n_leapfrog):
            th, rr, gr, lp = leapfrog(th, rr, gr, eps, fng)
            if not np.isfinite(lp):
                diverged = True
                break
        if not diverged:
            with np.errstate(over="ignore", invalid="ignore"):
                h1 = -lp + 0.5 * rr @ rr
            energy_err = h1 - h0
            diverged = not np.isfinite(energy_err) or energy_err > MAX_ENERGY_ERROR
        if diverged:
            alpha = 0.0
            if sampling:
                divergences += 1
        else:
            alpha = float(min(1.0, np.exp(min(h0 - h1, 0.0))))
            if np.log(gen.random()) < h0 - h1:
                theta, grad, logp = th, gr, lp
        if sampling:
            draws[it - n_warmup] = theta
            accept_sum += alpha
        else:
            eps = adapt.update(alpha)
            if it == n_warmup - 1:
                eps = adapt.adapted()

    return PosteriorEnsemble(
        members=draws,
        weights=np.full(n_draws, 1.0 / n_draws),
        provenance="hmc",
        diagnostics={
            "accept_rate": accept_sum / n_draws,
            "divergences": divergences,
            "step_size": eps,
            "n_leapfrog": n_leapfrog,
        },
    )
