"""One predictive-sampling interface over every surrogate family.

predictive_samples(surrogate, Xq, n_samples, rng) returns a matrix whose
rows are coherent joint function draws over the query set: row r evaluates
ONE function hypothesis at every query point. That coherence is what batch
acquisition needs, and it holds for each family by construction: a joint
Gaussian draw (GP kinds), one parameter-vector member (samplers and
ensembles), one fresh parameter draw (variational), or one fresh mask set
(dropout).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ccsopt.errors import EmptyInput
from ccsopt.numcore.rng import RngStream
from ccsopt.surrogates.gp import GpModel, gp_joint_samples, posterior_predict
from ccsopt.surrogates.hmc import PosteriorEnsemble
from ccsopt.surrogates.mlp import MlpSpec, draw_masks, mlp_forward, mlp_forward_members, n_params
from ccsopt.surrogates.svi import VariationalParams


@dataclass
class GpSurrogate:
    """Exact-GP-backed surrogate (plain, network-kernel, or learned-feature)."""

    name: str
    model: GpModel

    def predict_samples(
        self, x_query, n_samples: int, rng: RngStream, include_noise: bool = False
    ) -> np.ndarray:
        post = posterior_predict(self.model, x_query)
        return gp_joint_samples(post, n_samples, rng, include_noise=include_noise)

    def predict_moments(self, x_query):
        post = posterior_predict(self.model, x_query)
        return post.mean, np.sqrt(np.maximum(np.diag(post.cov), 0.0))


@dataclass
class MemberSurrogate:
    """Posterior represented by parameter-vector atoms (samplers, ensembles)."""

    name: str
    spec: MlpSpec
    ensemble: PosteriorEnsemble
    y_mean: float
    y_std: float
    has_noise_param: bool

    def _member_matrix(self):
        mem = self.ensemble.members
        return mem[:, :-1] if self.has_noise_param else mem

    def predict_samples(
        self, x_query, n_samples: int, rng: RngStream, include_noise: bool = False
    ) -> np.ndarray:
        if n_samples < 1:
            raise EmptyInput(f"need n_samples >= 1, got {n_samples}")
        xq = np.atleast_2d(np.asarray(x_query, dtype=float))
        gen = rng.generator()
        m = self.ensemble.members.shape[0]
        idx = gen.choice(m, size=n_samples, p=self.ensemble.weights)
        uniq, inverse = np.unique(idx, return_inverse=True)
        preds = mlp_forward_members(self.spec, self._member_matrix()[uniq], xq)
        out = preds[inverse]
        if include_noise and self.has_noise_param:
            sigma = np.exp(self.ensemble.members[idx, -1])
            out = out + sigma[:, None] * gen.standard_normal(out.shape)
        return self.y_mean + self.y_std * out

    def predict_moments(self, x_query):
        xq = np.atleast_2d(np.asarray(x_query, dtype=float))
        preds = mlp_forward_members(self.spec, self._member_matrix(), xq)
        w = self.ensemble.weights[:, None]
        mean = (w * preds).sum(axis=0)
        var = (w * (preds - mean) ** 2).sum(axis=0)
        return (
            self.y_mean + self.y_std * mean,
            self.y_std * np.sqrt(np.maximum(var, 0.0)),
        )


@dataclass
class SviSurrogate:
    """Mean-field Gaussian over network parameters; fresh draw per row."""

    name: str
    spec: MlpSpec
    vp: VariationalParams
    y_mean: float
    y_std: float
    has_noise_param: bool = True

    def predict_samples(
        self, x_query, n_samples: int, rng: RngStream, include_noise: bool = False
    ) -> np.ndarray:
        if n_samples < 1:
            raise EmptyInput(f"need n_samples >= 1, got {n_samples}")
        xq = np.atleast_2d(np.asarray(x_query, dtype=float))
        gen = rng.generator()
        dim = self.vp.mu.shape[0]
        thetas = self.vp.mu + np.exp(self.vp.log_sigma) * gen.standard_normal(
            (n_samples, dim)
        )
        p = n_params(self.spec)
        out = mlp_forward_members(self.spec, thetas[:, :p], xq)
        if include_noise and self.has_noise_param:
            sigma = np.exp(thetas[:, -1])
            out = out + sigma[:, None] * gen.standard_normal(out.shape)
        return self.y_mean + self.y_std * out


@dataclass
class DropoutSurrogate:
    """Point network with mask resampling at prediction time."""

    name: str
    spec: MlpSpec
    params: np.ndarray
    y_mean: float
    y_std: float
    noise_std: float = 0.0
    train_mse: float = field(default=0.0)

    def predict_samples(
        self, x_query, n_samples: int, rng: RngStream, include_noise: bool = False
    ) -> np.ndarray:
        if n_samples < 1:
            raise EmptyInput(f"need n_samples >= 1, got {n_samples}")
        xq = np.atleast_2d(np.asarray(x_query, dtype=float))
        gen = rng.generator()
        out = np.empty((n_samples, xq.shape[0]))
        for i in range(n_samples):
            masks = draw_masks(self.spec, gen)
            out[i] = mlp_forward(self.spec, self.params, xq, masks=masks)[:, 0]
        if include_noise and self.noise_std > 0.0:
            out = out + self.noise_std * gen.standard_normal(out.shape)
        return self.y_mean + self.y_std * out


def predictive_samples(
    surrogate,
    x_query: np.ndarray,
    n_samples: int,
    rng: RngStream,
    include_noise: bool = False,
) -> np.ndarray:
    """Delegate to the surrogate's row-coherent sampler."""
    return surrogate.predict_samples(
        x_query, n_samples, rng, include_noise=include_noise
    )
