import numpy as np
import pytest
from scipy import stats

from oracles import finite_difference_grad
from synmix.dp import PrivateSummary
from synmix.maxent import (
    DiscreteDomain,
    QueryModel,
    SamplerConfig,
    med_cell_probs,
    med_query_moments,
    napsu_fit,
    noisy_count_log_density,
    sample_records,
    synth_from_posterior,
)
from synmix.stats_core import RngStream

QM = QueryModel.full_one_hot(DiscreteDomain((2, 2, 2)))


def test_domain_layout():
    dom = DiscreteDomain((2, 3))
    assert dom.n_cells == 6
    np.testing.assert_array_equal(dom.cell_index(dom.cells), np.arange(6))


def test_uniform_at_zero():
    np.testing.assert_allclose(med_cell_probs(QM, np.zeros(QM.dim)), np.full(8, 1 / 8))


def test_softmax_example():
    theta = np.zeros(7)
    theta[0] = np.log(2)
    p = med_cell_probs(QM, theta)
    assert p[0] == pytest.approx(2 / 9)
    np.testing.assert_allclose(p[1:], 1 / 9)


def test_probabilities_positive():
    theta = RngStream(0).generator().normal(0, 20, size=(50, 7))
    p = med_cell_probs(QM, theta)
    assert np.all(p > 0) and np.allclose(p.sum(axis=1), 1)


def test_moments_at_zero():
    mu, sigma = med_query_moments(QM, np.zeros(7))
    np.testing.assert_allclose(mu, 1 / 8)
    np.testing.assert_allclose(np.diag(sigma), 1 / 8 * 7 / 8)
    assert np.linalg.eigvalsh(sigma).min() >= -1e-10
    assert mu.sum() == pytest.approx(1.0)


def test_moments_match_monte_carlo():
    theta = RngStream(1).generator().normal(0, 0.7, 7)
    mu, sigma = med_query_moments(QM, theta)
    cells = sample_records(QM, theta, 100_000, RngStream(2))
    a = QM.queries[cells]
    se = np.sqrt(np.diag(sigma) / a.shape[0])
    assert np.all(np.abs(a.mean(axis=0) - mu) < 3 * se + 1e-12)


def test_gradient_matches_finite_differences():
    gen = RngStream(3).generator()
    noisy = np.array([240.0, 270, 250, 250, 130, 390, 120, 377])
    for _ in range(20):
        theta = gen.normal(0, 0.8, 7)
        f = lambda t: noisy_count_log_density(QM, t, noisy, 2000, 40.0, 10.0)[0]
        fd = finite_difference_grad(f, theta, h=1e-5)
        _, grad = noisy_count_log_density(QM, theta, noisy, 2000, 40.0, 10.0)
        np.testing.assert_allclose(grad, fd, rtol=1e-5, atol=1e-5 * np.abs(fd).max())


def test_records_uniform_goodness_of_fit():
    cells = sample_records(QM, np.zeros(7), 100_000, RngStream(4))
    assert set(np.unique(cells)) <= set(range(8))
    assert stats.chisquare(np.bincount(cells, minlength=8)).pvalue > 0.001


def _fit(noisy, n, sigma2, prior_scale=10.0, seed=5, cfg=SamplerConfig(chains=2, warmup=150, draws=300)):
    return napsu_fit(QM, PrivateSummary(np.asarray(noisy, float), sigma2), n, prior_scale, cfg, RngStream(seed))


def test_fit_recovers_frequencies_with_little_noise():
    cells = sample_records(QM, np.zeros(7), 5000, RngStream(6))
    counts = np.bincount(cells, minlength=8).astype(float)
    post = _fit(counts, 5000, 1e-4)
    np.testing.assert_allclose(post.cell_probs().mean(axis=0), counts / 5000, atol=0.02)
    assert min(post.diagnostics["accept_rate"]) > 0.2


def test_tight_prior_dominates():
    post = _fit(np.array([900.0, 10, 10, 10, 10, 10, 10, 40]), 1000, 25.0, prior_scale=1e-3)
    assert np.abs(post.draws).max() < 0.01


def test_noise_awareness_spread_decreases_with_epsilon():
    from synmix.dp import PrivacyParams, calibrate_sigma, gaussian_mechanism

    cfg = SamplerConfig(chains=1, warmup=100, draws=200)
    spreads = {}
    for eps in (0.1, 1.0, 10.0):
        sigma = calibrate_sigma(PrivacyParams(eps, 1e-6))
        vals = []
        for seed in range(10):
            counts = np.bincount(sample_records(QM, np.zeros(7), 500, RngStream(100 + seed)), minlength=8)
            summary = gaussian_mechanism(counts, sigma, RngStream(200 + seed))
            post = napsu_fit(QM, summary, 500, 10.0, cfg, RngStream(300 + seed))
            vals.append(post.cell_probs().std(axis=0).mean())
        spreads[eps] = np.mean(vals)
    assert spreads[0.1] > spreads[1.0] > spreads[10.0]


def test_synth_uses_distinct_draws():
    post = _fit(np.full(8, 100.0), 800, 4.0)
    col = synth_from_posterior(post, 10, 50, RngStream(7))
    idx = col.meta["draw_indices"]
    assert len(set(idx)) == 10 and col.m == 10 and col.n_star == 50
    with pytest.raises(ValueError):
        synth_from_posterior(post, post.n_draws + 1, 5, RngStream(7))


def test_summary_shape_is_checked():
    with pytest.raises(ValueError):
        napsu_fit(QM, PrivateSummary(np.zeros(5), 1.0), 10)
