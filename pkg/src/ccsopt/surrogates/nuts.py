"""No-U-Turn sampler: recursive tree doubling with multinomial selection.

Trajectory length adapts per draw: the binary tree doubles until either a
U-turn (the trajectory starts folding back on itself) or a divergence.
Proposals are drawn from the whole trajectory with weights exp(H0 - H),
and step size adapts by dual averaging during warmup exactly as in HMC.
"""

from __future__ import annotations

import numpy as np

from ccsopt.errors import EmptyInput
from ccsopt.numcore.rng import RngStream
from ccsopt.surrogates.hmc import (
    MAX_ENERGY_ERROR,
    DualAveraging,
    PosteriorEnsemble,
    find_initial_step,
    leapfrog,
)


class _Tree:
    __slots__ = (
        "theta_minus", "r_minus", "grad_minus",
        "theta_plus", "r_plus", "grad_plus",
        "proposal", "proposal_logp", "proposal_grad",
        "log_weight", "sum_alpha", "n_alpha", "stop", "divergent",
    )


def _uturn(theta_minus, theta_plus, r_minus, r_plus) -> bool:
    span = theta_plus - theta_minus
    return (span @ r_minus < 0.0) or (span @ r_plus < 0.0)


def _base_case(theta, r, grad, direction, eps, h0, fng) -> _Tree:
    th, rr, gr, lp = leapfrog(theta, r, grad, direction * eps, fng)
    t = _Tree()
    t.theta_minus = t.theta_plus = th
    t.r_minus = t.r_plus = rr
    t.grad_minus = t.grad_plus = gr
    t.proposal, t.proposal_logp, t.proposal_grad = th, lp, gr
    if np.isfinite(lp):
        h1 = -lp + 0.5 * rr @ rr
        err = h1 - h0
        t.divergent = not np.isfinite(err) or err > MAX_ENERGY_ERROR
        t.log_weight = -np.inf if t.divergent else (h0 - h1)
        t.sum_alpha = float(min(1.0, np.exp(min(h0 - h1, 0.0)))) if not t.divergent else 0.0
    else:
        t.divergent = True
        t.log_weight = -np.inf
        t.sum_alpha = 0.0
    t.n_alpha = 1
    t.stop = t.divergent
    return t


def _build_tree(theta, r, grad, direction, depth, eps, h0, fng, gen) -> _Tree:
    if depth == 0:
        return _base_case(theta, r, grad, direction, eps, h0, fng)

    first = _build_tree(theta, r, grad, direction, depth - 1, eps, h0, fng, gen)
    if first.stop:
        return first
    if direction == 1:
        second = _build_tree(
            first.theta_plus, first.r_plus, first.grad_plus,
            direction, depth - 1, eps, h0, fng, gen,
        )
        first.theta_plus = second.theta_plus
        first.r_plus = second.r_plus
        first.grad_plus = second.grad_plus
    else:
        second = _build_tree(
            first.theta_minus, first.r_minus, first.grad_minus,
            direction, depth - 1, eps, h0, fng, gen,
        )
        first.theta_minus = second.theta_minus
        first.r_minus = second.r_minus
        first.grad_minus = second.grad_minus

    total = np.logaddexp(first.log_weight, second.log_weight)
    if np.isfinite(second.log_weight) and np.log(gen.random()) < second.log_weight - total:
        first.proposal = second.proposal
        first.proposal_logp = second.proposal_logp
        first.proposal_grad = second.proposal_grad
    first.log_weight = total
    first.sum_alpha += second.sum_alpha
    first.n_alpha += second.n_alpha
    first.divergent = first.divergent or second.divergent
    first.stop = second.stop or _uturn(
        first.theta_minus, first.theta_plus, first.r_minus, first.r_plus
    )
    return first


def nuts_sample(
    fng,
    init: np.ndarray,
    rng: RngStream,
    n_warmup: int = 500,
    n_draws: int = 256,
    max_depth: int = 10,
    target_accept: float = 0.8,
    step_size: float | None = None,
) -> PosteriorEnsemble:
    """Adaptive-trajectory sampling from theta -> (logp, grad)."""
    if n_draws < 1:
        raise EmptyInput(f"need n_draws >= 1, got {n_draws}")
    theta = np.asarray(init, dtype=float).copy()
    gen = rng.generator()
    logp, grad = fng(theta)

    eps = step_size if step_size is not None else find_initial_step(fng, theta, gen)
    adapt = DualAveraging(eps, target=target_accept)

    draws = np.empty((n_draws, theta.shape[0]))
    divergences = 0
    depth_hits = 0
    accept_sum = 0.0

    for it in range(n_warmup + n_draws):
        sampling = it >= n_warmup
        r0 = gen.standard_normal(theta.shape[0])
        h0 = -logp + 0.5 * r0 @ r0

        theta_minus = theta_plus = theta
        r_minus = r_plus = r0
        grad_minus = grad_plus = grad
        proposal, proposal_logp, proposal_grad = theta, logp, grad
        log_weight = 0.0  # weight of the initial point: exp(h0 - h0)
        sum_alpha, n_alpha = 0.0, 0
        diverged = False
        depth = 0
        while depth < max_depth:
            direction = 1 if gen.random() < 0.5 else -1
            if direction == 1:
                sub = _build_tree(
                    theta_plus, r_plus, grad_plus, 1, depth, eps, h0, fng, gen
                )
            else:
                sub = _build_tree(
                    theta_minus, r_minus, grad_minus, -1, depth, eps, h0, fng, gen
                )
            sum_alpha += sub.sum_alpha
            n_alpha += sub.n_alpha
            diverged = diverged or sub.divergent
            if sub.stop:
                break
            # biased progressive sampling toward the fresh subtree
            if np.isfinite(sub.log_weight) and np.log(gen.random()) < sub.log_weight - log_weight:
                proposal = sub.proposal
                proposal_logp = sub.proposal_logp
                proposal_grad = sub.proposal_grad
            log_weight = np.logaddexp(log_weight, sub.log_weight)
            if direction == 1:
                theta_plus, r_plus, grad_plus = (
                    sub.theta_plus, sub.r_plus, sub.grad_plus,
                )
            else:
                theta_minus, r_minus, grad_minus = (
                    sub.theta_minus, sub.r_minus, sub.grad_minus,
                )
            if _uturn(theta_minus, theta_plus, r_minus, r_plus):
                break
            depth += 1
        else:
            if sampling:
                depth_hits += 1

        theta, logp, grad = proposal, proposal_logp, proposal_grad
        alpha = sum_alpha / max(n_alpha, 1)
        if sampling:
            draws[it - n_warmup] = theta
            accept_sum += alpha
            if diverged:
                divergences += 1
        else:
            eps = adapt.update(alpha)
            if it == n_warmup - 1:
                eps = adapt.adapted()

    return PosteriorEnsemble(
        members=draws,
        weights=np.full(n_draws, 1.0 / n_draws),
        provenance="nuts",
        diagnostics={
            "accept_rate": accept_sum / n_draws,
            "divergences": divergences,
            "max_depth_hits": depth_hits,
            "step_size": eps,
            "max_depth": max_depth,
        },
    )
