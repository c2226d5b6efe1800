import numpy as np
import pytest

from ccsopt.errors import EmptyInput
from ccsopt.numcore import RngStream
from ccsopt.surrogates.approx import (
    dropout_predict_samples,
    dropout_train,
    ensemble_train,
)
from ccsopt.surrogates.bnn import MlpSpec, PriorSpec
from ccsopt.surrogates.dkl import (
    FeatureMapSpec,
    feature_forward,
    feature_n_params,
    fit_dkl,
)
from ccsopt.surrogates.gp import posterior_predict
from ccsopt.surrogates.hmc import hmc_sample
from ccsopt.surrogates.bnn import make_logpost
from ccsopt.surrogates.mlp import init_params, mlp_forward
from ccsopt.surrogates.predict import MemberSurrogate, predictive_samples


def toy_regression(n=48, seed=3, noise=0.05):
    rng = RngStream(seed).generator()
    x = rng.uniform(-1.0, 1.0, size=(n, 1))
    y = np.sin(3.0 * x[:, 0]) + noise * rng.standard_normal(n)
    return x, y


class TestDropout:
    def test_zero_rate_is_deterministic(self):
        x, y = toy_regression()
        spec = MlpSpec(1, (16, 16), 1, dropout_rate=0.0)
        net = dropout_train(spec, x, y, RngStream(11), n_steps=400)
        s = dropout_predict_samples(net, x[:5], 32, RngStream(1))
        assert s.shape == (32, 5)
        assert np.ptp(s, axis=0).max() == 0.0

    def test_mean_tracks_training_targets(self):
        x, y = toy_regression()
        spec = MlpSpec(1, (32, 32), 1, dropout_rate=0.1)
        net = dropout_train(spec, x, y, RngStream(7), n_steps=1500)
        mean = dropout_predict_samples(net, x, 512, RngStream(2)).mean(axis=0)
        train_pred = mlp_forward(net.spec, net.params, x)[:, 0]
        train_rmse = np.sqrt(np.mean((train_pred - y) ** 2))
        assert np.sqrt(np.mean((mean - y) ** 2)) < 3.0 * max(train_rmse, 0.05)

    def test_positive_rate_gives_spread(self):
        x, y = toy_regression()
        spec = MlpSpec(1, (32, 32), 1, dropout_rate=0.1)
        net = dropout_train(spec, x, y, RngStream(7), n_steps=400)
        s = dropout_predict_samples(net, x[:8], 256, RngStream(3))
        assert np.all(s.std(axis=0) > 0.0)

    def test_rows_are_independent_mask_draws(self):
        x, y = toy_regression()
        spec = MlpSpec(1, (32,), 1, dropout_rate=0.3)
        net = dropout_train(spec, x, y, RngStream(7), n_steps=100)
        s = dropout_predict_samples(net, x[:1], 64, RngStream(4))
        assert np.unique(s).size > 1

    def test_predict_deterministic_per_stream(self):
        x, y = toy_regression()
        spec = MlpSpec(1, (16,), 1, dropout_rate=0.2)
        net = dropout_train(spec, x, y, RngStream(5), n_steps=100)
        a = dropout_predict_samples(net, x[:4], 16, RngStream(8))
        b = dropout_predict_samples(net, x[:4], 16, RngStream(8))
        np.testing.assert_array_equal(a, b)


class TestEnsemble:
    def test_rejects_single_member(self):
        x, y = toy_regression()
        spec = MlpSpec(1, (8,), 1)
        with pytest.raises(EmptyInput):
            ensemble_train(spec, x, y, RngStream(0), n_members=1)

    def test_members_differ(self):
        x, y = toy_regression()
        spec = MlpSpec(1, (16,), 1)
        ens = ensemble_train(spec, x, y, RngStream(13), n_members=4,
                             n_steps=200)
        assert ens.members.shape[0] == 4
        assert ens.provenance == "ensemble"
        np.testing.assert_allclose(ens.weights, 0.25)
        for i in range(3):
            assert not np.allclose(ens.members[i], ens.members[i + 1])

    def test_member_mean_fits_signal(self):
        x, y = toy_regression(n=64, noise=0.02)
        spec = MlpSpec(1, (32, 32), 1)
        ens = ensemble_train(spec, x, y, RngStream(19), n_members=4,
                             n_steps=2000)
        preds = np.stack(
            [mlp_forward(spec, m, x)[:, 0] for m in ens.members]
        ).mean(axis=0)
        assert np.sqrt(np.mean((preds - y) ** 2)) < 0.1

    def test_deterministic(self):
        x, y = toy_regression()
        spec = MlpSpec(1, (8,), 1)
        a = ensemble_train(spec, x, y, RngStream(2), n_members=2, n_steps=50)
        b = ensemble_train(spec, x, y, RngStream(2), n_members=2, n_steps=50)
        np.testing.assert_array_equal(a.members, b.members)


class TestMemberSurrogate:
    def _ensemble_surrogate(self, seed=19):
        x, y = toy_regression(n=64, noise=0.02)
        spec = MlpSpec(1, (16,), 1)
        ens = ensemble_train(spec, x, y, RngStream(seed), n_members=3,
                             n_steps=300)
        return MemberSurrogate(name="Ensemble", spec=spec, ensemble=ens,
                               y_mean=0.0, y_std=1.0, has_noise_param=False)

    def test_row_coherence_duplicate_columns(self):
        sur = self._ensemble_surrogate()
        xq = np.array([[0.3], [0.3], [-0.5]])
        s = sur.predict_samples(xq, 40, RngStream(1))
        assert s.shape == (40, 3)
        # same input in one row must come from the same member
        np.testing.assert_array_equal(s[:, 0], s[:, 1])

    def test_single_member_rows_identical(self):
        x, y = toy_regression()
        spec = MlpSpec(1, (8,), 1)
        ens = ensemble_train(spec, x, y, RngStream(3), n_members=2, n_steps=50)
        only = ens.__class__(
            members=ens.members[:1],
            weights=np.ones(1),
            provenance="ensemble",
            diagnostics={},
        )
        sur = MemberSurrogate(name="Ensemble", spec=spec, ensemble=only,
                              y_mean=0.0, y_std=1.0, has_noise_param=False)
        s = sur.predict_samples(x[:4], 16, RngStream(2))
        assert np.ptp(s, axis=0).max() == 0.0

    def test_mean_matches_weighted_member_average(self):
        sur = self._ensemble_surrogate()
        xq = np.linspace(-1, 1, 7)[:, None]
        s = sur.predict_samples(xq, 20_000, RngStream(6))
        direct = np.stack(
            [mlp_forward(sur.spec, m, xq)[:, 0] for m in sur.ensemble.members]
        )
        expect = (direct * sur.ensemble.weights[:, None]).sum(axis=0)
        np.testing.assert_allclose(s.mean(axis=0), expect, atol=0.03)

    def test_hmc_bnn_surrogate_fits_function(self):
        x, y = toy_regression(n=40, noise=0.02)
        spec = MlpSpec(1, (16,), 1)
        prior = PriorSpec()
        fng = make_logpost(spec, prior, x, y)
        theta0 = np.concatenate(
            [0.1 * init_params(spec, RngStream(40).generator()), [np.log(0.1)]]
        )
        ens = hmc_sample(fng, theta0, RngStream(41), n_warmup=300, n_draws=64,
                         n_leapfrog=16)
        sur = MemberSurrogate(name="MCMC", spec=spec, ensemble=ens,
                              y_mean=0.0, y_std=1.0, has_noise_param=True)
        mean = sur.predict_samples(x, 256, RngStream(1)).mean(axis=0)
        assert np.sqrt(np.mean((mean - y) ** 2)) < 0.15

    def test_include_noise_adds_variance(self):
        x, y = toy_regression(n=40)
        spec = MlpSpec(1, (16,), 1)
        prior = PriorSpec()
        fng = make_logpost(spec, prior, x, y)
        theta0 = np.concatenate(
            [0.1 * init_params(spec, RngStream(40).generator()), [np.log(0.1)]]
        )
        ens = hmc_sample(fng, theta0, RngStream(41), n_warmup=200,
                         n_draws=32, n_leapfrog=16)
        sur = MemberSurrogate(name="MCMC", spec=spec, ensemble=ens,
                              y_mean=0.0, y_std=1.0, has_noise_param=True)
        clean = sur.predict_samples(x[:6], 2048, RngStream(2))
        noisy = sur.predict_samples(x[:6], 2048, RngStream(2),
                                    include_noise=True)
        assert np.all(noisy.var(axis=0) > clean.var(axis=0))


class TestPredictiveSamplesDispatch:
    def test_gp_and_member_share_contract(self):
        from ccsopt.surrogates import fit_surrogate

        x, y = toy_regression(n=24)
        for name in ("GP", "Ensemble", "Dropout"):
            sur = fit_surrogate(name, x, y, RngStream(50), {"budget": "desk"})
            s = predictive_samples(sur, x[:5], 16, RngStream(1))
            assert s.shape == (16, 5)
            assert np.all(np.isfinite(s))
            s2 = predictive_samples(sur, x[:5], 16, RngStream(1))
            np.testing.assert_array_equal(s, s2)


class TestDkl:
    def test_identity_map_matches_plain_gp_shape(self):
        x, y = toy_regression(n=32)
        fmap = FeatureMapSpec(d_in=1, hidden_widths=(), d_embed=1)
        model = fit_dkl(x, y, RngStream(8), feature_spec=fmap, n_steps=80)
        post = posterior_predict(model, x[:6])
        assert post.mean.shape == (6,)
        assert np.all(np.diag(post.cov) >= 0.0)

    def test_training_improves_lml(self):
        x, y = toy_regression(n=40)
        fmap = FeatureMapSpec(d_in=1, hidden_widths=(8,), d_embed=2)
        short = fit_dkl(x, y, RngStream(12), feature_spec=fmap, n_steps=1)
        long = fit_dkl(x, y, RngStream(12), feature_spec=fmap, n_steps=150)
        assert long.fit_info["lml"] >= short.fit_info["lml"] - 1e-9

    def test_posterior_interpolates(self):
        x, y = toy_regression(n=40, noise=0.01)
        fmap = FeatureMapSpec(d_in=1, hidden_widths=(8,), d_embed=2)
        model = fit_dkl(x, y, RngStream(12), feature_spec=fmap, n_steps=200)
        post = posterior_predict(model, x)
        assert np.sqrt(np.mean((post.mean - y) ** 2)) < 0.1

    def test_embedding_dimension(self):
        fmap = FeatureMapSpec(d_in=3, hidden_widths=(8,), d_embed=2)
        params = np.zeros(feature_n_params(fmap))
        z = feature_forward(fmap, params, np.ones((5, 3)))
        assert z.shape == (5, 2)

    def test_deterministic(self):
        x, y = toy_regression(n=24)
        fmap = FeatureMapSpec(d_in=1, hidden_widths=(4,), d_embed=2)
        a = fit_dkl(x, y, RngStream(3), feature_spec=fmap, n_steps=60)
        b = fit_dkl(x, y, RngStream(3), feature_spec=fmap, n_steps=60)
        np.testing.assert_array_equal(a.kernel.lengthscales,
                                      b.kernel.lengthscales)
        post_a = posterior_predict(a, x[:4])
        post_b = posterior_predict(b, x[:4])
        np.testing.assert_array_equal(post_a.mean, post_b.mean)
