import numpy as np
import pytest

from ccsopt.numcore import RngStream
from ccsopt.surrogates.hmc import hmc_sample, leapfrog
from ccsopt.surrogates.nuts import nuts_sample


def gaussian_target(mean, cov):
    mean = np.asarray(mean, dtype=float)
    prec = np.linalg.inv(cov)

    def fng(theta):
        d = theta - mean
        g = -prec @ d
        return float(-0.5 * d @ prec @ d), g

    return fng


def std_normal_1d(theta):
    return float(-0.5 * theta[0] ** 2), -theta


class TestHmc:
    def test_1d_standard_normal_moments(self):
        ens = hmc_sample(std_normal_1d, np.zeros(1), RngStream(42),
                         n_warmup=300, n_draws=2000, n_leapfrog=16)
        draws = ens.members[:, 0]
        assert abs(draws.mean()) < 0.1
        assert 0.8 <= draws.var() <= 1.2
        assert ens.provenance == "hmc"

    def test_acceptance_rate_after_adaptation(self):
        cov = np.array([[1.0, 0.6], [0.6, 2.0]])
        fng = gaussian_target([1.0, -1.0], cov)
        ens = hmc_sample(fng, np.zeros(2), RngStream(7),
                         n_warmup=400, n_draws=1500, n_leapfrog=16)
        assert 0.6 <= ens.diagnostics["accept_rate"] <= 0.95
        np.testing.assert_allclose(ens.members.mean(axis=0), [1.0, -1.0], atol=0.15)
        sample_cov = np.cov(ens.members.T)
        np.testing.assert_allclose(sample_cov, cov, rtol=0.35, atol=0.15)

    def test_symplectic_energy_error_small_step(self):
        # 10 leapfrog steps at eps=1e-4 on a Gaussian: |dH| stays tiny
        fng = std_normal_1d
        theta = np.array([0.7])
        r = np.array([0.4])
        logp, grad = fng(theta)
        h0 = -logp + 0.5 * r @ r
        for _ in range(10):
            theta, r, grad, logp = leapfrog(theta, r, grad, 1e-4, fng)
        h1 = -logp + 0.5 * r @ r
        assert abs(h1 - h0) < 1e-3

    def test_deterministic_replay(self):
        a = hmc_sample(std_normal_1d, np.zeros(1), RngStream(3),
                       n_warmup=50, n_draws=100, n_leapfrog=8)
        b = hmc_sample(std_normal_1d, np.zeros(1), RngStream(3),
                       n_warmup=50, n_draws=100, n_leapfrog=8)
        np.testing.assert_array_equal(a.members, b.members)

    def test_divergences_counted_not_fatal(self):
        #extremely tight target with a huge fixed step: energy errors explode
        def stiff(theta):
            return float(-0.5e12 * theta[0] ** 2), -1e12 * theta

        ens = hmc_sample(stiff, np.array([1e-6]), RngStream(0),
                         n_warmup=0, n_draws=50, n_leapfrog=5, step_size=10.0)
        assert ens.diagnostics["divergences"] > 0
        assert ens.members.shape == (50, 1)

    def test_weights_uniform(self):
        ens = hmc_sample(std_normal_1d, np.zeros(1), RngStream(1),
                         n_warmup=20, n_draws=40, n_leapfrog=8)
        np.testing.assert_allclose(ens.weights, 1.0 / 40)


class TestNuts:
    def test_1d_variance(self):
        ens = nuts_sample(std_normal_1d, np.zeros(1), RngStream(11),
                          n_warmup=500, n_draws=4000)
        draws = ens.members[:, 0]
        assert 0.9 <= draws.var() <= 1.1
        assert abs(draws.mean()) < 0.1
        assert ens.provenance == "nuts"

    def test_10d_correlated_means(self):
        rho = 0.5
        cov = rho ** np.abs(np.subtract.outer(np.arange(10), np.arange(10)))
        mean = np.linspace(-1.0, 1.0, 10)
        fng = gaussian_target(mean, cov)
        ens = nuts_sample(fng, np.zeros(10), RngStream(13),
                          n_warmup=500, n_draws=4000)
        np.testing.assert_allclose(ens.members.mean(axis=0), mean, atol=0.1)
        var = ens.members.var(axis=0)
        np.testing.assert_allclose(var, np.diag(cov), rtol=0.25)

    def test_divergence_fraction_low_on_gaussian(self):
        ens = nuts_sample(std_normal_1d, np.zeros(1), RngStream(2),
                          n_warmup=300, n_draws=1000)
        assert ens.diagnostics["divergences"] < 0.05 * 1000

    def test_max_depth_hits_counted(self):
        # huge-scale target with a tiny fixed step: every tree hits the cap
        def wide(theta):
            return float(-0.5e-8 * theta[0] ** 2), -1e-8 * theta

        ens = nuts_sample(wide, np.zeros(1), RngStream(4), n_warmup=0,
                          n_draws=20, max_depth=3, step_size=1e-3)
        assert ens.diagnostics["max_depth_hits"] > 0

    def test_deterministic_replay(self):
        a = nuts_sample(std_normal_1d, np.zeros(1), RngStream(6),
                        n_warmup=100, n_draws=200)
        b = nuts_sample(std_normal_1d, np.zeros(1), RngStream(6),
                        n_warmup=100, n_draws=200)
        np.testing.assert_array_equal(a.members, b.members)

    def test_samples_finite_logp(self):
        ens = nuts_sample(std_normal_1d, np.zeros(1), RngStream(8),
                          n_warmup=100, n_draws=500)
        assert np.all(np.isfinite(ens.members))


class TestCrossSamplerAgreement:
    def test_bnn_predictive_means_agree(self):
        """Both samplers target the same small network posterior."""
        from ccsopt.surrogates.bnn import MlpSpec, PriorSpec, make_logpost, theta_dim
        from ccsopt.surrogates.mlp import mlp_forward_members

        gen = np.random.default_rng(0)
        x = np.linspace(0, 1, 10)[:, None]
        y = np.sin(2 * np.pi * x[:, 0])
        y = (y - y.mean()) / y.std()
        spec = MlpSpec(d_in=1, hidden_widths=(8,), d_out=1)
        prior = PriorSpec()
        fng = make_logpost(spec, prior, x, y)
        init = 0.1 * gen.standard_normal(theta_dim(spec))

        h = hmc_sample(fng, init, RngStream(100), n_warmup=400, n_draws=256,
                       n_leapfrog=24)
        n = nuts_sample(fng, init, RngStream(200), n_warmup=400, n_draws=256)
        mean_h = mlp_forward_members(spec, h.members[:, :-1], x).mean(axis=0)
        mean_n = mlp_forward_members(spec, n.members[:, :-1], x).mean(axis=0)
        rmse = float(np.sqrt(np.mean((mean_h - mean_n) ** 2)))
        assert rmse < 0.1
