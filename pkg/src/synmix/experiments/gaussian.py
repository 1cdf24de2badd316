"""Non-private Gaussian experiments: mean and variance estimation from synthetic data."""

from __future__ import annotations

import numpy as np

from synmix import conjugate
from synmix.experiments.bundle import ResultBundle, density_rows
from synmix.experiments.config import ExperimentConfig
from synmix.experiments.report import rate_fit
from synmix.experiments.svg import figure
from synmix.mixing import (
    ConjugateAnalyzer,
    conjugate_generator,
    corrected_gaussian,
    generate_collection,
    mean_correction_known_mean,
    mix_posteriors,
    mixture_density,
)
from synmix.stats_core import GaussianDist, GridDensity, RngStream, ScaledInvChiSq, default_grid, tv_distance_grid

COMMON = {
    "seed": 0,
    "n_x": 100,
    "m": 400,
    "c": 20,
    "k": 250,
    "repetitions": 1,
    "true_mean": 1.0,
    "true_var": 4.0,
    "prior_mean": 0.0,
    "prior_var": 100.0,
    "provider_known_var": 4.0,
    "analyst_known_var": 4.0,
    "provider": "known-variance",
    # normal-inverse-chi-squared provider; kappa0 * 100 = true_var keeps the
    # implied prior on the mean at N(0, 100)
    "nix_mu0": 0.0,
    "nix_kappa0": 0.04,
    "nix_nu0": 1.0,
    "nix_sigma2_0": 4.0,
}

DEFAULTS = {
    "gauss-known-known": dict(COMMON),
    "gauss-unknown-known": {**COMMON, "provider": "nix"},
    "gauss-known-mean": {
        **COMMON,
        "provider_known_mean": 1.0,
        "analyst_known_mean": 0.0,
        "prior_nu0": 1.0,
        "prior_sigma2_0": 4.0,
    },
    "gauss-sweep": {**COMMON, "m_values": [10, 100, 400], "c_values": [1, 5, 20]},
    "gauss-correction": {**COMMON, "n_x": 1000, "m": 2000, "c": 1, "c_values": [1]},
    "rate-check": {**COMMON, "m": 2000, "repetitions": 5, "n_star_values": [100, 1000, 10000]},
}


def _n_star(n_x: int, c: float) -> int:
    return max(1, int(round(c * n_x)))


def real_data(cfg: ExperimentConfig, stream: RngStream) -> np.ndarray:
    return stream.generator().normal(cfg.get("true_mean"), np.sqrt(cfg.get("true_var")), size=cfg.n_x)


def provider_model(cfg: ExperimentConfig):
    if cfg.get("provider") == "nix":
        return conjugate.NixModel(cfg.get("nix_mu0"), cfg.get("nix_kappa0"), cfg.get("nix_nu0"), cfg.get("nix_sigma2_0"))
    return conjugate.KnownVarModel(GaussianDist(cfg.get("prior_mean"), cfg.get("prior_var")), cfg.get("provider_known_var"))


def analyst_model(cfg: ExperimentConfig) -> conjugate.KnownVarModel:
    return conjugate.KnownVarModel(
        GaussianDist(cfg.get("analyst_prior_mean", cfg.get("prior_mean")), cfg.get("analyst_prior_var", cfg.get("prior_var"))),
        cfg.get("analyst_known_var"),
    )


def mean_target(model, post):
    """Marginal posterior of the mean that the mixture should recover."""
    return post.mean_marginal() if isinstance(post, conjugate.NixPosterior) else post


def _mean_mixture(cfg, provider, provider_post, analyst, m, n_star, stream):
    gen = conjugate_generator(provider, provider_post)
    collection = generate_collection(gen, m, n_star, stream.child(1))
    return mix_posteriors(collection, ConjugateAnalyzer(analyst), cfg.k, stream.child(2))


def _tv(grid, a, b) -> float:
    return tv_distance_grid(GridDensity(grid, a), GridDensity(grid, b))


def mean_estimation(cfg: ExperimentConfig) -> ResultBundle:
    """Single mixture vs. provider and analyst posteriors on the real data."""
    stream = RngStream(cfg.seed)
    x = real_data(cfg, stream.child(0))
    summary = conjugate.DataSummary.from_data(x)
    provider, analyst = provider_model(cfg), analyst_model(cfg)
    provider_post = conjugate.posterior(provider, summary)
    target = mean_target(provider, provider_post)
    analyst_real = conjugate.posterior(analyst, summary)
    n_star = _n_star(cfg.n_x, cfg.c)
    mix = _mean_mixture(cfg, provider, provider_post, analyst, cfg.m, n_star, stream)

    grid = default_grid(target, analyst_real, (mix.mean(), mix.variance()))
    series = {
        "analyst_real": analyst_real.pdf(grid),
        "provider_real": target.pdf(grid),
        "mixture": mixture_density(mix, grid).values,
    }
    tv = {
        "mixture_vs_provider": _tv(grid, series["mixture"], series["provider_real"]),
        "mixture_vs_analyst": _tv(grid, series["mixture"], series["analyst_real"]),
        "provider_vs_analyst": _tv(grid, series["provider_real"], series["analyst_real"]),
    }
    bundle = ResultBundle()
    bundle.tables["densities"] = density_rows(grid, series)
    bundle.tables["tv"] = [{"pair": k, "tv": v} for k, v in tv.items()]
    bundle.metrics.update(
        {
            **{f"tv_{k}": v for k, v in tv.items()},
            "n_star": n_star,
            "mixture_mean": mix.mean(),
            "mixture_variance": mix.variance(),
            "provider_mean": target.mean,
            "provider_variance": target.variance,
            "analyst_real_mean": analyst_real.mean,
            "analyst_real_variance": analyst_real.variance,
            "real_mean": summary.mean,
        }
    )
    bundle.plots["densities"] = figure(
        [{"series": [(k, grid, v) for k, v in series.items()], "title": f"mean, m={cfg.m}, n*/n={cfg.c:g}", "xlabel": "mu"}]
    )
    return bundle


def known_mean(cfg: ExperimentConfig) -> ResultBundle:
    """Variance estimation with known means, with and without the mean correction."""
    stream = RngStream(cfg.seed)
    x = real_data(cfg, stream.child(0))
    prior = ScaledInvChiSq(cfg.get("prior_nu0"), cfg.get("prior_sigma2_0"))
    mu_provider, mu_analyst = cfg.get("provider_known_mean"), cfg.get("analyst_known_mean")
    provider = conjugate.KnownMeanModel(prior, mu_provider)
    analyst = conjugate.KnownMeanModel(
        ScaledInvChiSq(cfg.get("analyst_prior_nu0", prior.dof), cfg.get("analyst_prior_sigma2_0", prior.scale)), mu_analyst
    )
    summary = conjugate.DataSummary.from_data(x)
    provider_post = conjugate.posterior(provider, summary)
    analyst_real = conjugate.posterior(analyst, summary)
    n_star = _n_star(cfg.n_x, cfg.c)
    collection = generate_collection(conjugate_generator(provider, provider_post), cfg.m, n_star, stream.child(1))
    mix = mix_posteriors(collection, ConjugateAnalyzer(analyst), cfg.k, stream.child(2))

    shift = (mu_provider - mu_analyst) ** 2
    raw = mix.pooled()
    corrected = mean_correction_known_mean(raw, mu_provider, mu_analyst) if shift > 0 else raw
    raw_mean, corrected_mean = float(raw.mean()), float(corrected.mean())
    provider_mean = provider_post.mean

    grid = default_grid(provider_post, analyst_real, (mix.mean(), mix.variance()), (mix.mean() - shift, mix.variance()))
    series = {
        "analyst_real": analyst_real.pdf(grid),
        "provider_real": provider_post.pdf(grid),
        "mixture": mix.pdf(grid),
        "mixture_corrected": mix.pdf(grid + shift),
    }
    bundle = ResultBundle()
    bundle.tables["densities"] = density_rows(grid, series)
    tv = {
        "mixture_vs_provider": _tv(grid, series["mixture"], series["provider_real"]),
        "mixture_vs_analyst": _tv(grid, series["mixture"], series["analyst_real"]),
        "corrected_vs_provider": _tv(grid, series["mixture_corrected"], series["provider_real"]),
    }
    bundle.tables["tv"] = [{"pair": k, "tv": v} for k, v in tv.items()]
    excess = raw_mean - provider_mean
    bundle.metrics.update(
        {
            **{f"tv_{k}": v for k, v in tv.items()},
            "n_star": n_star,
            "mean_shift": shift,
            "raw_mixture_mean": raw_mean,
            "corrected_mixture_mean": corrected_mean,
            "provider_mean": provider_mean,
            "analyst_real_mean": analyst_real.mean,
            "raw_excess": excess,
            "raw_excess_rel_error": abs(excess - shift) / shift if shift > 0 else abs(excess),
            "corrected_rel_diff": abs(corrected_mean - provider_mean) / provider_mean,
            "negative_corrected_draws": int(np.sum(corrected < 0)),
        }
    )
    bundle.plots["densities"] = figure(
        [{"series": [(k, grid, v) for k, v in series.items()], "title": f"variance, m={cfg.m}, n*/n={cfg.c:g}", "xlabel": "sigma^2"}]
    )
    return bundle


def sweep(cfg: ExperimentConfig) -> ResultBundle:
    """TV between mixture and provider posterior over an (m, n*/n) grid."""
    ms, cs = _as_list(cfg.get("m_values")), _as_list(cfg.get("c_values"))
    provider, analyst = provider_model(cfg), analyst_model(cfg)
    rows, panels = [], []
    for r in range(cfg.repetitions):
        stream = RngStream(cfg.seed).child(r)
        x = real_data(cfg, stream.child(0))
        summary = conjugate.DataSummary.from_data(x)
        provider_post = conjugate.posterior(provider, summary)
        target = mean_target(provider, provider_post)
        for i, m in enumerate(ms):
            for j, c in enumerate(cs):
                cell = stream.child(100 + i * len(cs) + j)
                mix = _mean_mixture(cfg, provider, provider_post, analyst, int(m), _n_star(cfg.n_x, c), cell)
                grid = default_grid(target, (mix.mean(), mix.variance()))
                mixture = mix.pdf(grid)
                rows.append({"rep": r, "m": int(m), "c": float(c), "tv": _tv(grid, mixture, target.pdf(grid))})
                if r == 0:
                    panels.append(
                        {
                            "series": [("provider", grid, target.pdf(grid)), ("mixture", grid, mixture)],
                            "title": f"m={m}, n*/n={c:g}",
                        }
                    )
                    rows[-1]["density_panel"] = len(panels) - 1
    bundle = ResultBundle()
    bundle.tables["tv"] = rows
    mean_rows = []
    for m in ms:
        for c in cs:
            vals = [row["tv"] for row in rows if row["m"] == m and row["c"] == c]
            mean_rows.append({"m": int(m), "c": float(c), "tv_mean": float(np.mean(vals)), "tv_sd": float(np.std(vals))})
    bundle.tables["tv_mean"] = mean_rows
    bundle.tables["densities"] = [
        {"panel": p, "series": label, "x": float(gx), "density": float(gy)}
        for p, panel in enumerate(panels)
        for label, xs, ys in panel["series"]
        for gx, gy in zip(xs[::8], ys[::8])
    ]
    bundle.metrics["tv_mean"] = {f"m={r['m']},c={r['c']:g}": r["tv_mean"] for r in mean_rows}
    bundle.plots["densities"] = figure(
        [{**p, "series": [(lab, xs[::8], ys[::8]) for lab, xs, ys in p["series"]]} for p in panels], ncols=len(cs), panel_width=300, panel_height=220
    )
    return bundle


def correction(cfg: ExperimentConfig) -> ResultBundle:
    """Variance inflation at small n* and the Rubin-style variance correction."""
    stream = RngStream(cfg.seed)
    x = real_data(cfg, stream.child(0))
    summary = conjugate.DataSummary.from_data(x)
    provider, analyst = provider_model(cfg), analyst_model(cfg)
    provider_post = conjugate.posterior(provider, summary)
    target = mean_target(provider, provider_post)
    rows, panels = [], []
    for i, c in enumerate(_as_list(cfg.get("c_values", [cfg.c]))):
        mix = _mean_mixture(cfg, provider, provider_post, analyst, cfg.m, _n_star(cfg.n_x, c), stream.child(10 + i))
        approx = corrected_gaussian(mix, c)
        grid = default_grid(target, (mix.mean(), mix.variance()))
        series = {"provider_real": target.pdf(grid), "mixture": mix.pdf(grid), "corrected_gaussian": approx.pdf(grid)}
        rows.append(
            {
                "c": float(c),
                "mixture_variance": mix.variance(),
                "expected_component_variance": mix.expected_component_variance(),
                "target_variance": target.variance,
                "inflation_ratio": mix.variance() / target.variance,
                "corrected_variance": approx.variance,
                "corrected_ratio": approx.variance / target.variance,
                "tv_mixture": _tv(grid, series["mixture"], series["provider_real"]),
                "tv_corrected": _tv(grid, series["corrected_gaussian"], series["provider_real"]),
            }
        )
        panels.append((c, grid, series))
    bundle = ResultBundle()
    bundle.tables["correction"] = rows
    bundle.tables["densities"] = [
        {"c": float(c), **row} for c, grid, series in panels for row in density_rows(grid[::4], {k: v[::4] for k, v in series.items()})
    ]
    bundle.metrics["by_c"] = {f"{r['c']:g}": r for r in rows}
    bundle.plots["densities"] = figure(
        [{"series": [(k, g[::4], v[::4]) for k, v in s.items()], "title": f"n*/n={c:g}, m={cfg.m}"} for c, g, s in panels], ncols=len(panels)
    )
    return bundle


def rate_check(cfg: ExperimentConfig) -> ResultBundle:
    """TV to the provider posterior as the synthetic data size grows."""
    provider, analyst = provider_model(cfg), analyst_model(cfg)
    n_values = [int(v) for v in _as_list(cfg.get("n_star_values"))]
    rows = []
    for r in range(cfg.repetitions):
        stream = RngStream(cfg.seed).child(r)
        x = real_data(cfg, stream.child(0))
        provider_post = conjugate.posterior(provider, conjugate.DataSummary.from_data(x))
        target = mean_target(provider, provider_post)
        for i, n_star in enumerate(n_values):
            mix = _mean_mixture(cfg, provider, provider_post, analyst, cfg.m, n_star, stream.child(10 + i))
            grid = default_grid(target, (mix.mean(), mix.variance()))
            rows.append({"rep": r, "n_star": n_star, "tv": _tv(grid, mix.pdf(grid), target.pdf(grid))})
    means = [float(np.mean([row["tv"] for row in rows if row["n_star"] == n])) for n in n_values]
    fit = rate_fit(n_values, means)
    bundle = ResultBundle()
    bundle.tables["tv"] = rows
    bundle.tables["tv_mean"] = [{"n_star": n, "tv_mean": t} for n, t in zip(n_values, means)]
    bundle.metrics.update({"slope": fit.slope, "slope_stderr": fit.stderr, "intercept": fit.intercept, "tv_mean": dict(zip(map(str, n_values), means))})
    bundle.plots["rate"] = figure(
        [{"series": [("mean TV", n_values, means)], "title": f"TV vs n*, slope {fit.slope:.3f}", "xlabel": "n*", "logx": True, "logy": True}]
    )
    return bundle


def _as_list(value) -> list:
    return list(value) if isinstance(value, (list, tuple)) else [value]


EXPERIMENTS = {
    "gauss-known-known": mean_estimation,
    "gauss-unknown-known": mean_estimation,
    "gauss-known-mean": known_mean,
    "gauss-sweep": sweep,
    "gauss-correction": correction,
    "rate-check": rate_check,
}
