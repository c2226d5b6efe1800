"""Point-estimate uncertainty methods: MC dropout and deep ensembles.

Both train plain MSE networks; uncertainty comes from mask resampling at
prediction time (dropout) or from independently initialized members
trained on bootstrap resamples (ensembles).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ccsopt.errors import EmptyInput
from ccsopt.numcore.rng import RngStream
from ccsopt.surrogates.hmc import PosteriorEnsemble
from ccsopt.surrogates.mlp import (
    MlpSpec,
    draw_masks,
    forward_backward,
    init_params,
    mlp_forward,
    n_params,
    prior_like_decay_mask,
)
from ccsopt.surrogates.optim import Adam


@dataclass
class DropoutNet:
    spec: MlpSpec
    params: np.ndarray
    train_mse: float


def _mse_training_run(
    spec: MlpSpec,
    x: np.ndarray,
    y: np.ndarray,
    gen: np.random.Generator,
    n_steps: int,
    learn_rate: float,
    weight_decay: float,
    with_masks: bool,
) -> np.ndarray:
    params = init_params(spec, gen)
    opt = Adam(n_params(spec), lr=learn_rate)
    decay_on = prior_like_decay_mask(spec) if weight_decay > 0.0 else None
    n = x.shape[0]
    for _ in range(n_steps):
        masks = draw_masks(spec, gen) if with_masks else None
        f, pullback = forward_backward(spec, params, x, masks=masks)
        resid = f[:, 0] - y
        grad = pullback((2.0 / n) * resid[:, None])
        if decay_on is not None:
            grad = grad + 2.0 * weight_decay * params * decay_on
        params = params - opt.step(grad)
    return params


def dropout_train(
    spec: MlpSpec,
    x: np.ndarray,
    y: np.ndarray,
    rng: RngStream,
    n_steps: int = 2000,
    learn_rate: float = 0.01,
    weight_decay: float = 1e-4,
) -> DropoutNet:
    """Minimize MSE + L2 with dropout masks active every step."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    y = np.asarray(y, dtype=float).ravel()
    if x.shape[0] == 0:
        raise EmptyInput("need training data")
    gen = rng.generator()
    params = _mse_training_run(
        spec, x, y, gen, n_steps, learn_rate, weight_decay, with_masks=True
    )
    f = mlp_forward(spec, params, x)
    mse = float(np.mean((f[:, 0] - y) ** 2))
    return DropoutNet(spec=spec, params=params, train_mse=mse)


def dropout_predict_samples(
    net: DropoutNet, x_query: np.ndarray, n_passes: int, rng: RngStream
) -> np.ndarray:
    """(n_passes, nq) stochastic forward passes with fresh masks."""
    if n_passes < 1:
        raise EmptyInput(f"need n_passes >= 1, got {n_passes}")
    xq = np.atleast_2d(np.asarray(x_query, dtype=float))
    gen = rng.generator()
    out = np.empty((n_passes, xq.shape[0]))
    for i in range(n_passes):
        masks = draw_masks(net.spec, gen)
        out[i] = mlp_forward(net.spec, net.params, xq, masks=masks)[:, 0]
    return out


def ensemble_train(
    spec: MlpSpec,
    x: np.ndarray,
    y: np.ndarray,
    rng: RngStream,
    n_members: int = 8,
    n_steps: int = 2000,
    learn_rate: float = 0.01,
    bootstrap: bool = True,
) -> PosteriorEnsemble:
    """Independent-init members on bootstrap resamples, uniform weights."""
    if n_members < 2:
        raise EmptyInput(f"need n_members >= 2, got {n_members}")
    x = np.atleast_2d(np.asarray(x, dtype=float))
    y = np.asarray(y, dtype=float).ravel()
    n = x.shape[0]
    if n == 0:
        raise EmptyInput("need training data")

    members = np.empty((n_members, n_params(spec)))
    for i in range(n_members):
        gen = rng.child(i).generator()
        if bootstrap:
            idx = gen.integers(0, n, size=n)
            xi, yi = x[idx], y[idx]
        else:
            xi, yi = x, y
        members[i] = _mse_training_run(
            spec, xi, yi, gen, n_steps, learn_rate, 0.0, with_masks=False
        )
    return PosteriorEnsemble(
        members=members,
        weights=np.full(n_members, 1.0 / n_members),
        provenance="ensemble",
        diagnostics={"bootstrap": bootstrap, "n_steps": n_steps},
    )
