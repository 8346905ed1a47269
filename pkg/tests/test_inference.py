import math

import numpy as np
import pytest

from gaussmix import (
    AssignMode,
    FitConfig,
    GmmModel,
    SeedMode,
    assign,
    assign_batch,
    generate,
    learn,
    norm_hist,
    raw_hist,
)
from oracles import gauss_pdf, match_components


def _model(rng, n_gaus=3, n_dims=2):
    hefts = rng.random(n_gaus) + 0.2
    hefts /= hefts.sum()
    return GmmModel(rng.normal(0, 4, (n_gaus, n_dims)),
                    rng.uniform(0.5, 2.0, (n_gaus, n_dims)), hefts)


class TestAssign:
    def test_exact_mean_wins(self):
        rng = np.random.default_rng(0)
        m = _model(rng, n_gaus=4)
        assert assign(m.means[2], m, AssignMode.EUCL) == 2

    def test_equidistant_tie_breaks_low(self):
        m = GmmModel(np.array([[0.0], [1.0]]), np.ones((2, 1)), [0.5, 0.5])
        assert assign(np.array([0.5]), m, AssignMode.EUCL) == 0
        assert assign(np.array([0.5]), m, AssignMode.PROB) == 0

    def test_prob_mode_prefers_heavy_colocated_component(self):
        m = GmmModel(np.zeros((2, 2)), np.ones((2, 2)), [0.9, 0.1])
        x = np.array([0.3, -0.4])
        assert assign(x, m, AssignMode.PROB) == 0
        # exhaustive check against weighted linear-domain densities
        scores = [w * gauss_pdf(x, mu, dc) for w, mu, dc in zip(m.hefts, m.means, m.dcovs)]
        assert int(np.argmax(scores)) == 0

    def test_prob_matches_weighted_density_argmax(self):
        rng = np.random.default_rng(1)
        for _ in range(50):
            m = _model(rng)
            x = rng.normal(0, 4, 2)
            expected = int(np.argmax([w * gauss_pdf(x, mu, dc)
                                      for w, mu, dc in zip(m.hefts, m.means, m.dcovs)]))
            assert assign(x, m, AssignMode.PROB) == expected

    def test_prob_invariant_under_posterior_normalisation(self):
        # argmax of the weighted log densities equals argmax of the posteriors
        from gaussmix import responsibilities
        rng = np.random.default_rng(2)
        for _ in range(20):
            m = _model(rng)
            x = rng.normal(0, 3, 2)
            assert assign(x, m, AssignMode.PROB) == int(np.argmax(responsibilities(x, m)))

    def test_batch_equals_scalar(self):
        rng = np.random.default_rng(3)
        m = _model(rng)
        X = rng.normal(0, 4, (200, 2))
        for mode in AssignMode:
            batch = assign_batch(X, m, mode)
            np.testing.assert_array_equal(batch, [assign(x, m, mode) for x in X])

    def test_batch_thread_invariant(self):
        rng = np.random.default_rng(4)
        m = _model(rng)
        X = rng.normal(0, 4, (5000, 2))
        np.testing.assert_array_equal(assign_batch(X, m, AssignMode.PROB, n_threads=1),
                                      assign_batch(X, m, AssignMode.PROB, n_threads=4))

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            assign(np.zeros(3), GmmModel.reset(2, 2))


class TestHistograms:
    def test_model_means_one_count_each(self):
        rng = np.random.default_rng(5)
        m = _model(rng, n_gaus=4)
        counts = raw_hist(m.means, m, AssignMode.EUCL)
        np.testing.assert_array_equal(counts, np.ones(4, dtype=np.int64))

    def test_raw_hist_partitions_dataset(self):
        rng = np.random.default_rng(6)
        m = _model(rng)
        X = rng.normal(0, 5, (777, 2))
        for mode in AssignMode:
            assert raw_hist(X, m, mode).sum() == 777

    def test_norm_hist_sums_to_one(self):
        rng = np.random.default_rng(7)
        m = _model(rng)
        X = rng.normal(0, 5, (500, 2))
        h = norm_hist(X, m)
        assert abs(h.sum() - 1.0) <= 1e-12

    def test_norm_hist_rejects_empty(self):
        with pytest.raises(ValueError):
            norm_hist(np.empty((0, 2)), GmmModel.reset(2, 1))

    def test_two_cluster_proportions(self):
        rng = np.random.default_rng(8)
        base = np.arange(1.0, 6.0)
        means = np.stack([base, base + 2.0])
        truth = GmmModel(means, np.ones_like(means), [2.0 / 3.0, 1.0 / 3.0])
        X = generate(truth, 10000, rng_seed=42)
        h = norm_hist(X, truth, AssignMode.PROB)
        np.testing.assert_allclose(h, [2.0 / 3.0, 1.0 / 3.0], atol=0.02)


class TestGenerate:
    def test_tiny_variance_sticks_to_mean(self):
        m = GmmModel(np.array([[3.0, -1.0]]), np.full((1, 2), 1e-12), [1.0])
        X = generate(m, 100, rng_seed=0)
        assert np.max(np.abs(X - m.means[0])) < 1e-4

    def test_moments_of_univariate_gaussian(self):
        m = GmmModel(np.array([[3.0]]), np.array([[4.0]]), [1.0])
        X = generate(m, 100_000, rng_seed=1)
        se_mean = 2.0 / math.sqrt(100_000)
        assert abs(X.mean() - 3.0) < 3 * se_mean
        assert abs(X.var() - 4.0) / 4.0 < 0.05

    def test_component_frequencies_follow_hefts(self):
        m = GmmModel(np.array([[-100.0], [100.0]]), np.ones((2, 1)), [0.25, 0.75])
        X = generate(m, 100_000, rng_seed=2)
        frac_high = np.mean(X[:, 0] > 0)
        assert abs(frac_high - 0.75) < 0.01

    def test_deterministic_for_fixed_seed(self):
        m = GmmModel.reset(3, 2)
        np.testing.assert_array_equal(generate(m, 50, rng_seed=7), generate(m, 50, rng_seed=7))

    def test_rejects_zero_samples(self):
        with pytest.raises(ValueError):
            generate(GmmModel.reset(1, 1), 0)

    def test_generate_learn_round_trip(self):
        base = np.array([[-6.0, 0.0], [6.0, 2.0]])
        truth = GmmModel(base, np.ones((2, 2)), [0.7, 0.3])
        X = generate(truth, 50_000, rng_seed=3)
        cfg = FitConfig(n_gaus=2, dist_mode="maha", seed_mode=SeedMode.RANDOM_SUBSET,
                        km_iter=10, em_iter=10, rng_seed=4)
        model, _ = learn(X, cfg)
        order = match_components(truth.means, model.means)
        np.testing.assert_allclose(model.hefts[order], truth.hefts, atol=0.02)
        se = 1.0 / math.sqrt(0.3 * 50_000)  # worst-case component standard error
        np.testing.assert_allclose(model.means[order], truth.means, atol=3 * se)
