"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

All runs use seed 0 (fixed before any result was seen). Runtime limits are
checked on wall-clock time of the run that produces the metric.
"""

import time

import numpy as np
import pytest

from oracles import count_posterior_enumeration, finite_difference_grad
from synmix.conjugate import DataSummary, KnownMeanModel, KnownVarModel, NixModel, posterior
from synmix.dp import PrivacyParams, PrivateSummary, calibrate_sigma, privacy_delta
from synmix.exact import MwgConfig, mwg_sample
from synmix.experiments import ExperimentConfig, run_experiment
from synmix.logreg import LogRegPrior, log_posterior, simulate_toy_data
from synmix.maxent import DiscreteDomain, QueryModel, noisy_count_log_density
from synmix.stats_core import GaussianDist, GridDensity, RngStream, ScaledInvChiSq, default_grid, kl_gaussian, tv_distance_grid

SEED = 0


@pytest.fixture
def report(capsys):
    """Print one status line outside pytest's capture, then assert every check."""

    def emit(number, title, checks, elapsed, limit):
        checks = list(checks) + [(f"runtime {elapsed:.1f}s < {limit:g}s", elapsed < limit)]
        ok = all(passed for _, passed in checks)
        detail = "; ".join(f"{text} [{'ok' if passed else 'NO'}]" for text, passed in checks)
        with capsys.disabled():
            print(f"\n{'PASS' if ok else 'FAIL'}  criterion {number:>2}  {title}: {detail}")
        assert ok, detail

    return emit


def timed(fn, *args, **kwargs):
    start = time.perf_counter()
    out = fn(*args, **kwargs)
    return out, time.perf_counter() - start


def run(name, **params):
    core = {k: params.pop(k) for k in ("m", "n_x", "c", "k", "repetitions") if k in params}
    return timed(run_experiment, ExperimentConfig(name, seed=SEED, params=params, **core), write=False)


def test_criterion_01_congenial_gaussian(report):
    bundle, t = run("gauss-known-known")
    tv = bundle.metrics["tv_mixture_vs_provider"]
    report(1, "congenial known variance", [(f"TV(mixture, provider)={tv:.4f} < 0.05", tv < 0.05)], t, 10)


def test_criterion_02_uncongenial_known_variance(report):
    bundle, t = run("gauss-known-known", analyst_known_var=1.0)
    m = bundle.metrics
    tp, ta = m["tv_mixture_vs_provider"], m["tv_mixture_vs_analyst"]
    checks = [(f"TV(mixture, provider)={tp:.4f} < 0.07", tp < 0.07), (f"TV(mixture, analyst-on-real)={ta:.4f} > 0.3", ta > 0.3)]
    report(2, "analyst variance = provider variance / 4", checks, t, 10)


def test_criterion_03_unknown_then_known_variance(report):
    bundle, t = run("gauss-unknown-known", analyst_known_var=1.0)
    m = bundle.metrics
    tp, ta = m["tv_mixture_vs_provider"], m["tv_mixture_vs_analyst"]
    checks = [(f"TV(mixture, provider)={tp:.4f} < 0.07", tp < 0.07), (f"TV(mixture, analyst-on-real)={ta:.4f} > 0.3", ta > 0.3)]
    report(3, "unknown-variance provider, known-variance analyst", checks, t, 20)


@pytest.fixture(scope="module")
def correction_run():
    return run("gauss-correction", n_x=1000, m=2000, c=1, c_values=[1])


def test_criterion_04_inflation_at_equal_size(report, correction_run):
    bundle, t = correction_run
    row = bundle.metrics["by_c"]["1"]
    ratio = row["inflation_ratio"]
    report(4, "variance inflation at n* = n", [(f"mixture/analytic variance={ratio:.3f} in [2.5, 3.5]", 2.5 <= ratio <= 3.5)], t, 60)


def test_criterion_05_variance_correction(report, correction_run):
    bundle, t = correction_run
    row = bundle.metrics["by_c"]["1"]
    rel = abs(row["corrected_ratio"] - 1)
    checks = [
        (f"corrected variance off by {100 * rel:.1f}% (< 10%)", rel < 0.1),
        (f"TV corrected={row['tv_corrected']:.4f} < TV raw={row['tv_mixture']:.4f}", row["tv_corrected"] < row["tv_mixture"]),
    ]
    report(5, "variance correction", checks, t, 60)


def test_criterion_06_known_mean_mismatch(report):
    bundle, t = run("gauss-known-mean", provider_known_mean=1.0, analyst_known_mean=0.0, n_x=100, m=400, c=20)
    m = bundle.metrics
    checks = [
        (f"raw excess {m['raw_excess']:.4f} vs shift {m['mean_shift']:g}: rel err {m['raw_excess_rel_error']:.3f} < 0.15", m["raw_excess_rel_error"] < 0.15),
        (f"corrected mean rel diff {m['corrected_rel_diff']:.4f} < 0.05", m["corrected_rel_diff"] < 0.05),
    ]
    report(6, "known-mean mismatch and mean correction", checks, t, 20)


def test_criterion_07_convergence_rate(report):
    bundle, t = run("rate-check", m=2000, n_star_values=[100, 1000, 10000])
    slope, se = bundle.metrics["slope"], bundle.metrics["slope_stderr"]
    report(7, "TV rate in synthetic size", [(f"slope={slope:.3f} (se {se:.3f}) in [-0.7, -0.3]", -0.7 <= slope <= -0.3)], t, 300)


def test_criterion_08_finite_m(report):
    bundle, t = run("gauss-sweep", m_values=[10, 400], c_values=[20, 100], repetitions=10)
    tv = {(r["m"], r["c"]): r["tv_mean"] for r in bundle.tables["tv_mean"]}
    small, ref = tv[10, 100.0], tv[400, 20.0]
    report(8, "small m does not converge", [(f"mean TV m=10,c=100: {small:.4f} > m=400,c=20: {ref:.4f}", small > ref)], t, 120)


def test_criterion_09_exact_sampler(report):
    qm = QueryModel.full_one_hot(DiscreteDomain((2, 2, 2)))
    gen = RngStream(SEED).generator()
    counts = np.bincount(gen.integers(0, 8, size=5), minlength=8)
    noisy = counts + gen.standard_normal(8)
    # 250 chains x 800 kept draws (thinned by 5) = 2e5 kept draws
    cfg = MwgConfig(hmc_step=0.3, hmc_leapfrog_steps=20, count_move_repeats=1, total_samples=250_000, chains=250, thin=5, prior_scale=1.0)
    start = time.perf_counter()
    chain = mwg_sample(PrivateSummary(noisy, 1.0), 5, qm, cfg, RngStream(SEED, 9))
    t = time.perf_counter() - start
    states, probs = count_posterior_enumeration(noisy, 5, 1.0, prior_scale=1.0, theta_draws=1_000_000)
    index = {tuple(s): i for i, s in enumerate(states)}
    emp = np.bincount([index[tuple(c)] for c in chain.counts], minlength=len(states)) / chain.n_draws
    tv = 0.5 * np.abs(emp - probs).sum()
    checks = [(f"{chain.n_draws} kept draws", chain.n_draws == 200_000), (f"TV(MWG, enumeration over {len(states)} states)={tv:.4f} < 0.05", tv < 0.05)]
    report(9, "exact sampler on the tiny instance", checks, t, 120)


@pytest.fixture(scope="module")
def toy_runs():
    coverage, t_cov = run("coverage-study", epsilons=[0.5, 1.0], repetitions=20, m=100, c=10, n_x=2000, delta=2.5e-7)
    sweep, t_sweep = run("toy-sweep", m_values=[10, 50, 100], c_values=[2, 5, 10], n_x=2000, epsilon=1.0, delta=2.5e-7)
    return coverage, sweep, t_cov + t_sweep


def test_criterion_10_toy_logistic_regression(report, toy_runs):
    coverage, sweep, t = toy_runs
    checks = []
    for row in coverage.tables["coverage"]:
        if row["method"] == "mixture" and row["level"] == 0.9:
            cov = row["coverage"]
            checks.append((f"eps={row['epsilon']:g} coef{row['coef']} 90% coverage={cov:.2f} in [0.75, 1]", 0.75 <= cov <= 1.0))
    for coef, series in sweep.metrics["diagonal_tv"].items():
        monotone = all(b <= a + 0.02 for a, b in zip(series, series[1:]))
        checks.append((f"{coef} diagonal TV " + " > ".join(f"{v:.3f}" for v in series) + " (+-0.02)", monotone))
    report(10, "DP toy logistic regression", checks, t, 1800)


def test_criterion_11_property_suites(report):
    start = time.perf_counter()
    gen = RngStream(SEED, 11).generator()
    checks = []

    # Pinsker on 100 random Gaussian pairs
    worst = -np.inf
    for _ in range(100):
        p = GaussianDist(gen.uniform(-5, 5), gen.uniform(0.1, 10))
        q = GaussianDist(gen.uniform(-5, 5), gen.uniform(0.1, 10))
        grid = default_grid(p, q)
        tv = tv_distance_grid(GridDensity.from_pdf(p, grid), GridDensity.from_pdf(q, grid))
        worst = max(worst, tv - np.sqrt(kl_gaussian(p, q) / 2) - 2e-3)
    checks.append((f"Pinsker slack max {worst:.2e} <= 0", worst <= 0))

    # metric axioms on a shared grid
    grid = np.linspace(-30, 30, 4096)
    ok = True
    for _ in range(100):
        ds = [GridDensity.from_pdf(GaussianDist(gen.uniform(-5, 5), gen.uniform(0.1, 10)), grid) for _ in range(3)]
        ab, ba = tv_distance_grid(ds[0], ds[1]), tv_distance_grid(ds[1], ds[0])
        ok &= ab >= 0 and ab == ba and tv_distance_grid(ds[0], ds[0]) == 0
        ok &= ab <= tv_distance_grid(ds[0], ds[2]) + tv_distance_grid(ds[2], ds[1]) + 1e-6
    checks.append(("TV metric axioms", bool(ok)))

    # sequential updates
    a, b = gen.normal(1, 2, 11), gen.normal(1, 2, 6)
    both = np.concatenate([a, b])
    kv = KnownVarModel(GaussianDist(0.5, 3.0), 2.0)
    p1 = posterior(kv, DataSummary.from_data(a))
    s_kv = posterior(KnownVarModel(p1, 2.0), DataSummary.from_data(b))
    o_kv = posterior(kv, DataSummary.from_data(both))
    nix = NixModel(0.2, 0.3, 2.0, 1.5)
    p2 = posterior(nix, DataSummary.from_data(a))
    s_nix = posterior(NixModel(p2.mu, p2.kappa, p2.nu, p2.sigma2), DataSummary.from_data(b))
    o_nix = posterior(nix, DataSummary.from_data(both))
    km = KnownMeanModel(ScaledInvChiSq(2.0, 1.5), 0.7)
    p3 = posterior(km, DataSummary.from_data(a, 0.7))
    s_km = posterior(KnownMeanModel(p3, 0.7), DataSummary.from_data(b, 0.7))
    o_km = posterior(km, DataSummary.from_data(both, 0.7))
    seq_ok = (
        np.allclose([s_kv.mean, s_kv.variance], [o_kv.mean, o_kv.variance], rtol=1e-12, atol=1e-12)
        and np.allclose([s_nix.mu, s_nix.kappa, s_nix.nu, s_nix.sigma2], [o_nix.mu, o_nix.kappa, o_nix.nu, o_nix.sigma2], rtol=1e-12, atol=1e-12)
        and np.allclose([s_km.dof, s_km.scale], [o_km.dof, o_km.scale], rtol=1e-12, atol=1e-12)
    )
    checks.append(("sequential-update consistency (3 models)", bool(seq_ok)))

    # gradients vs central differences
    data, prior = simulate_toy_data(300, rng=RngStream(SEED, 12)), LogRegPrior(2)
    err_lr = 0.0
    for _ in range(20):
        beta = gen.normal(0, 1.5, 2)
        fd = finite_difference_grad(lambda x: log_posterior(x, data, prior)[0], beta)
        err_lr = max(err_lr, np.max(np.abs(log_posterior(beta, data, prior)[1] - fd) / np.maximum(np.abs(fd), 1.0)))
    checks.append((f"logreg gradient rel err {err_lr:.1e} < 1e-6", err_lr < 1e-6))
    qm = QueryModel.full_one_hot(DiscreteDomain((2, 2, 2)))
    noisy = np.array([240.0, 270, 250, 250, 130, 390, 120, 377])
    err_me = 0.0
    for _ in range(20):
        theta = gen.normal(0, 0.8, 7)
        f = lambda x: noisy_count_log_density(qm, x, noisy, 2000, 40.0, 10.0)[0]
        fd = finite_difference_grad(f, theta, h=1e-5)
        grad = noisy_count_log_density(qm, theta, noisy, 2000, 40.0, 10.0)[1]
        err_me = max(err_me, np.max(np.abs(grad - fd)) / np.max(np.abs(fd)))
    checks.append((f"max-ent gradient rel err {err_me:.1e} < 1e-5", err_me < 1e-5))

    # calibration round trip on a 100-point grid
    bad = 0
    for eps in (0.1, 0.5, 1.0, 2.0, 8.0):
        for delta in (1e-9, 1e-6, 1e-3, 0.05):
            for sens in (0.5, 1.0, np.sqrt(2), 3.0, 10.0):
                sigma = calibrate_sigma(PrivacyParams(eps, delta, sens))
                got = privacy_delta(eps, sigma, sens)
                bad += not (delta * (1 - 1e-6) <= got <= delta)
    checks.append((f"calibration round trip {100 - bad}/100 within [delta(1-1e-6), delta]", bad == 0))
    report(11, "property suites", checks, time.perf_counter() - start, 60)
