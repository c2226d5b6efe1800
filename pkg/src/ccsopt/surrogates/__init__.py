"""Surrogate roster and the fit dispatcher.

Eight families behind one interface: exact GPs (plain Matern, the
infinite-width network kernel, a learned-feature kernel) and five
Bayesian-network treatments (variational, two Hamiltonian samplers, deep
ensembles, MC dropout). fit_surrogate(name, ...) returns an object with
predict_samples(Xq, n_samples, rng) producing row-coherent joint draws.
"""

from __future__ import annotations

import numpy as np

from ccsopt.errors import ConfigError
from ccsopt.numcore.rng import RngStream
from ccsopt.surrogates.approx import dropout_train, ensemble_train
from ccsopt.surrogates.bnn import MlpSpec, PriorSpec, make_logpost, theta_dim
from ccsopt.surrogates.dkl import FeatureMapSpec
from ccsopt.surrogates.gp import fit_hyperparams
from ccsopt.surrogates.hmc import hmc_sample
from ccsopt.surrogates.mlp import init_params, n_params
from ccsopt.surrogates.nuts import nuts_sample
from ccsopt.surrogates.optim import Adam
from ccsopt.surrogates.predict import (
    DropoutSurrogate,
    GpSurrogate,
    MemberSurrogate,
    SviSurrogate,
    predictive_samples,
)
from ccsopt.surrogates.svi import svi_fit

ROSTER = ("GP", "SVI", "MCMC", "NUTS", "IBNN", "Ensemble", "Dropout", "DKL")

# budget-profile defaults; config can override any single key
_PROFILES = {
    "default": {
        "hidden": (32, 32),
        "activation": "tanh",
        "gp_n_starts": 8,
        "hmc_warmup": 500, "hmc_draws": 256, "hmc_leapfrog": 32,
        "nuts_warmup": 500, "nuts_draws": 256, "nuts_max_depth": 8,
        "svi_steps": 3000, "svi_learn_rate": 0.01, "svi_n_mc": 8,
        "dropout_rate": 0.1, "dropout_steps": 2000, "dropout_weight_decay": 1e-4,
        "ensemble_members": 8, "ensemble_steps": 2000,
        "dkl_steps": 500, "dkl_hidden": (32, 32), "dkl_embed": 8,
        "map_warm_steps": 200,
        "nngp_depth": 3,
    },
    # lean budgets for the high-dimensional scheduling case on one CPU
    "desk": {
        "hidden": (16,),
        "activation": "tanh",
        "gp_n_starts": 4,
        "hmc_warmup": 32, "hmc_draws": 24, "hmc_leapfrog": 8,
        "nuts_warmup": 24, "nuts_draws": 16, "nuts_max_depth": 4,
        "svi_steps": 300, "svi_learn_rate": 0.02, "svi_n_mc": 2,
        "dropout_rate": 0.1, "dropout_steps": 400, "dropout_weight_decay": 1e-4,
        "ensemble_members": 4, "ensemble_steps": 300,
        "dkl_steps": 150, "dkl_hidden": (16,), "dkl_embed": 8,
        "map_warm_steps": 100,
        "nngp_depth": 3,
    },
    # the case-study architecture: three hidden layers of 100 units
    "paper": {
        "hidden": (100, 100, 100),
        "activation": "relu",
        "gp_n_starts": 8,
        "hmc_warmup": 500, "hmc_draws": 256, "hmc_leapfrog": 32,
        "nuts_warmup": 500, "nuts_draws": 256, "nuts_max_depth": 8,
        "svi_steps": 3000, "svi_learn_rate": 0.01, "svi_n_mc": 8,
        "dropout_rate": 0.1, "dropout_steps": 2000, "dropout_weight_decay": 1e-4,
        "ensemble_members": 8, "ensemble_steps": 2000,
        "dkl_steps": 500, "dkl_hidden": (100, 100, 100), "dkl_embed": 8,
        "map_warm_steps": 200,
        "nngp_depth": 3,
    },
}


def resolve_options(options: dict | None) -> dict:
    """Merge a profile with per-key overrides; unknown keys are errors."""
    opts = dict(options or {})
    profile = opts.pop("budget", "default")
    if profile not in _PROFILES:
        raise ConfigError(f"unknown budget profile {profile!r}")
    merged = dict(_PROFILES[profile])
    for key, val in opts.items():
        if key not in merged:
            raise ConfigError(f"unknown surrogate option {key!r}")
        merged[key] = val
    for key in ("hidden", "dkl_hidden"):
        merged[key] = tuple(int(v) for v in np.atleast_1d(merged[key]))
    return merged


def _map_warm_start(spec, prior, x, y, rng: RngStream, steps: int) -> np.ndarray:
    """Short posterior ascent to start the samplers near a mode."""
    gen = rng.generator()
    theta = np.concatenate([0.1 * init_params(spec, gen), [prior.noise_log_mean]])
    if steps < 1:
        return theta
    fng = make_logpost(spec, prior, x, y)
    opt = Adam(theta.size, lr=0.02)
    for _ in range(steps):
        _, grad = fng(theta)
        theta = theta + opt.step(grad)
    return theta


def _standardize_targets(y):
    y = np.asarray(y, dtype=float).ravel()
    mean = float(np.mean(y))
    std = float(np.std(y))
    if std < 1e-12:
        std = 1.0
    return (y - mean) / std, mean, std


def fit_surrogate(
    name: str,
    x: np.ndarray,
    y: np.ndarray,
    rng: RngStream,
    options: dict | None = None,
):
    """Train one roster surrogate on (x, y) and wrap it for prediction."""
    if name not in ROSTER:
        raise ConfigError(f"unknown surrogate {name!r}; roster: {', '.join(ROSTER)}")
    opts = resolve_options(options)
    x = np.atleast_2d(np.asarray(x, dtype=float))
    d = x.shape[1]

    if name == "GP":
        model = fit_hyperparams(x, y, family="matern52", rng=rng,
                                n_starts=opts["gp_n_starts"])
        return GpSurrogate(name=name, model=model)
    if name == "IBNN":
        model = fit_hyperparams(x, y, family="nngp", rng=rng,
                                n_starts=opts["gp_n_starts"],
                                nngp_depth=opts["nngp_depth"])
        return GpSurrogate(name=name, model=model)
    if name == "DKL":
        feature_spec = FeatureMapSpec(
            d_in=d, hidden_widths=opts["dkl_hidden"], d_embed=opts["dkl_embed"]
        )
        model = fit_hyperparams(x, y, family="dkl", rng=rng,
                                feature_spec=feature_spec,
                                n_steps=opts["dkl_steps"])
        return GpSurrogate(name=name, model=model)

    spec = MlpSpec(d_in=d, hidden_widths=opts["hidden"], d_out=1,
                   activation=opts["activation"],
                   dropout_rate=opts["dropout_rate"] if name == "Dropout" else 0.0)
    prior = PriorSpec()
    ys, y_mean, y_std = _standardize_targets(y)

    if name in ("MCMC", "NUTS"):
        theta0 = _map_warm_start(spec, prior, x, ys, rng.child(0),
                                 opts["map_warm_steps"])
        fng = make_logpost(spec, prior, x, ys)
        if name == "MCMC":
            ens = hmc_sample(fng, theta0, rng.child(1),
                             n_warmup=opts["hmc_warmup"],
                             n_draws=opts["hmc_draws"],
                             n_leapfrog=opts["hmc_leapfrog"])
        else:
            ens = nuts_sample(fng, theta0, rng.child(1),
                              n_warmup=opts["nuts_warmup"],
                              n_draws=opts["nuts_draws"],
                              max_depth=opts["nuts_max_depth"])
        return MemberSurrogate(name=name, spec=spec, ensemble=ens,
                               y_mean=y_mean, y_std=y_std, has_noise_param=True)

    if name == "SVI":
        vp = svi_fit(spec, prior, x, ys, rng,
                     n_steps=opts["svi_steps"],
                     learn_rate=opts["svi_learn_rate"],
                     n_mc=opts["svi_n_mc"])
        return SviSurrogate(name=name, spec=spec, vp=vp,
                            y_mean=y_mean, y_std=y_std)

    if name == "Ensemble":
        ens = ensemble_train(spec, x, ys, rng,
                             n_members=opts["ensemble_members"],
                             n_steps=opts["ensemble_steps"])
        return MemberSurrogate(name=name, spec=spec, ensemble=ens,
                               y_mean=y_mean, y_std=y_std, has_noise_param=False)

    # Dropout
    net = dropout_train(spec, x, ys, rng,
                        n_steps=opts["dropout_steps"],
                        weight_decay=opts["dropout_weight_decay"])
    return DropoutSurrogate(name=name, spec=spec, params=net.params,
                            y_mean=y_mean, y_std=y_std,
                            train_mse=net.train_mse)


__all__ = [
    "ROSTER",
    "fit_surrogate",
    "predictive_samples",
    "resolve_options",
    "GpSurrogate",
    "MemberSurrogate",
    "SviSurrogate",
    "DropoutSurrogate",
]
