"""DP logistic regression on three binary variables via the max-entropy synthesizer."""

from __future__ import annotations

import math

import numpy as np

from synmix.dp import PrivacyParams, calibrate_sigma, release_counts
from synmix.exact import MwgConfig, mwg_sample, reconstruct_dataset
from synmix.experiments.bundle import ResultBundle, density_rows
from synmix.experiments.config import ExperimentConfig
from synmix.experiments.report import coverage_width_report
from synmix.experiments.svg import figure
from synmix.logreg import TOY_ARITIES, LogRegData, LogRegLaplaceAnalyzer, LogRegPrior, laplace_fit, simulate_toy_records
from synmix.maxent import DiscreteDomain, QueryModel, SamplerConfig, napsu_fit, synth_from_posterior
from synmix.mixing import MixturePosterior, SyntheticCollection, credible_interval, mix_posteriors
from synmix.stats_core import GridDensity, RngStream, default_grid, tv_distance_grid

COMMON = {
    "seed": 0,
    "n_x": 2000,
    "m": 100,
    "c": 10,
    "k": 250,
    "repetitions": 1,
    "coeffs": [1.0, 0.0],
    "epsilon": 1.0,
    "delta": 2.5e-7,
    "sensitivity": math.sqrt(2.0),
    "intercept": False,
    "logreg_prior_var": 10.0,
    "napsu_prior_scale": 10.0,
    "chains": 4,
    "warmup": 200,
    "draws": 500,
    "mwg_hmc_step": 0.05,
    "mwg_hmc_leapfrog_steps": 20,
    "mwg_count_move_repeats": 30,
    "mwg_total_samples": 20000,
    "mwg_chains": 4,
    "mwg_warmup_fraction": 0.2,
    "target_datasets": 400,
    "levels": [0.5, 0.8, 0.9, 0.95],
}

TARGET_ESTIMATOR = "mixture of Laplace fits over data sets drawn from p(counts | noisy release)"

DEFAULTS = {
    "toy-dp-logreg": dict(COMMON),
    "toy-sweep": {**COMMON, "repetitions": 10, "m_values": [10, 50, 100], "c_values": [2, 5, 10]},
    "coverage-study": {**COMMON, "repetitions": 20, "epsilons": [0.5, 1.0]},
}


def query_model() -> QueryModel:
    return QueryModel.full_one_hot(DiscreteDomain(TOY_ARITIES))


def analyzer(cfg: ExperimentConfig) -> LogRegLaplaceAnalyzer:
    dim = len(cfg.get("coeffs")) + (1 if cfg.get("intercept") else 0)
    return LogRegLaplaceAnalyzer(LogRegPrior(dim, cfg.get("logreg_prior_var")), intercept=cfg.get("intercept"))


def true_coefficients(cfg: ExperimentConfig) -> np.ndarray:
    coeffs = np.asarray(cfg.get("coeffs"), dtype=float)
    return np.concatenate([[0.0], coeffs]) if cfg.get("intercept") else coeffs


class ToyRun:
    """One real data set, its noisy release and the fitted synthesizer posterior."""

    def __init__(self, cfg: ExperimentConfig, epsilon: float, stream: RngStream):
        self.cfg = cfg
        self.stream = stream
        self.qm = query_model()
        self.records = simulate_toy_records(cfg.n_x, cfg.get("coeffs"), stream.child(0))
        self.counts = np.bincount(self.qm.domain.cell_index(self.records), minlength=self.qm.n_queries)
        self.params = PrivacyParams(epsilon, cfg.get("delta"), cfg.get("sensitivity"))
        self.summary = release_counts(self.counts, self.params, stream.child(1))
        sampler = SamplerConfig(chains=cfg.get("chains"), warmup=cfg.get("warmup"), draws=cfg.get("draws"))
        self.posterior = napsu_fit(self.qm, self.summary, cfg.n_x, cfg.get("napsu_prior_scale"), sampler, stream.child(2))
        self.analyzer = analyzer(cfg)

    def mixture(self, m: int, c: float, index: int = 0) -> MixturePosterior:
        n_star = max(1, int(round(c * self.cfg.n_x)))
        cell = self.stream.child(10 + index)
        collection = synth_from_posterior(self.posterior, m, n_star, cell.child(0))
        return mix_posteriors(collection, self.analyzer, self.cfg.k, cell.child(1))

    def real_posterior(self):
        return laplace_fit(LogRegData.from_cell_counts(self.counts, self.cfg.get("intercept")), self.analyzer.prior)

    def exact_target(self) -> tuple[MixturePosterior, dict]:
        """Mixture of Laplace posteriors over data sets drawn from p(X | noisy counts)."""
        cfg = self.cfg
        mwg = MwgConfig(
            hmc_step=cfg.get("mwg_hmc_step"),
            hmc_leapfrog_steps=cfg.get("mwg_hmc_leapfrog_steps"),
            count_move_repeats=cfg.get("mwg_count_move_repeats"),
            total_samples=cfg.get("mwg_total_samples"),
            chains=cfg.get("mwg_chains"),
            warmup_fraction=cfg.get("mwg_warmup_fraction"),
            prior_scale=cfg.get("napsu_prior_scale"),
        )
        chain = mwg_sample(self.summary, cfg.n_x, self.qm, mwg, self.stream.child(3))
        count = min(cfg.get("target_datasets"), chain.n_draws)
        picks = (np.arange(count) * chain.n_draws) // count
        datasets = [reconstruct_dataset(chain.counts[i]) for i in picks]
        collection = SyntheticCollection(datasets, "exact-posterior", self.stream.child(3))
        mix = mix_posteriors(collection, self.analyzer, 50, self.stream.child(4))
        return mix, chain.diagnostics


def _marginal_tv(mix: MixturePosterior, target: MixturePosterior, coord: int) -> tuple[float, np.ndarray, np.ndarray, np.ndarray]:
    grid = default_grid((target.mean(coord), target.variance(coord)), (mix.mean(coord), mix.variance(coord)))
    a, b = mix.pdf(grid, coord), target.pdf(grid, coord)
    return tv_distance_grid(GridDensity(grid, a), GridDensity(grid, b)), grid, a, b


def single_run(cfg: ExperimentConfig) -> ResultBundle:
    stream = RngStream(cfg.seed)
    run = ToyRun(cfg, cfg.get("epsilon"), stream)
    mix = run.mixture(cfg.m, cfg.c)
    target, target_diag = run.exact_target()
    real = run.real_posterior()
    truths = true_coefficients(cfg)
    bundle = ResultBundle()
    rows, panels, tvs = [], [], {}
    for j in range(truths.size):
        tv, grid, mixture, exact = _marginal_tv(mix, target, j)
        tvs[f"coef{j}"] = tv
        series = {"mixture": mixture, "exact_posterior": exact, "real_nondp": real.marginal(j).pdf(grid)}
        rows += density_rows(grid[::4], {k: v[::4] for k, v in series.items()}, coef=j)
        panels.append({"series": [(k, grid[::4], v[::4]) for k, v in series.items()], "title": f"coefficient {j} (true {truths[j]:g})"})
    bundle.tables["densities"] = rows
    bundle.tables["tv"] = [{"coef": k, "tv": v} for k, v in tvs.items()]
    bundle.tables["intervals"] = [
        {"level": lev, "coef": j, "lo": lo, "hi": hi, "truth": truths[j]}
        for lev in cfg.get("levels")
        for j, (lo, hi) in enumerate(credible_interval(mix, lev, coord=j) for j in range(truths.size))
    ]
    bundle.metrics.update(
        {
            "tv_mixture_vs_exact": tvs,
            "sigma_dp": run.summary.sigma,
            "napsu": run.posterior.diagnostics,
            "exact_sampler": target_diag,
            "target_estimator": TARGET_ESTIMATOR,
        }
    )
    bundle.plots["densities"] = figure(panels, ncols=len(panels))
    return bundle


def sweep(cfg: ExperimentConfig) -> ResultBundle:
    stream = RngStream(cfg.seed)
    run = ToyRun(cfg, cfg.get("epsilon"), stream)
    target, target_diag = run.exact_target()
    ms, cs = [int(v) for v in _as_list(cfg.get("m_values"))], [float(v) for v in _as_list(cfg.get("c_values"))]
    dim = true_coefficients(cfg).size
    reps = cfg.repetitions
    raw, rows = [], []
    for i, m in enumerate(ms):
        for j, c in enumerate(cs):
            cell = i * len(cs) + j
            tvs = np.empty((reps, dim))
            for r in range(reps):
                # independent synthetic draws from the same posterior, averaged per cell
                mix = run.mixture(m, c, index=cell * reps + r)
                tvs[r] = [_marginal_tv(mix, target, coord)[0] for coord in range(dim)]
                raw += [{"m": m, "c": c, "rep": r, "coef": coord, "tv": tvs[r, coord]} for coord in range(dim)]
            rows += [
                {"m": m, "c": c, "coef": coord, "tv": float(tvs[:, coord].mean()), "tv_sd": float(tvs[:, coord].std())}
                for coord in range(dim)
            ]
    diagonal = []
    for coord in range(dim):
        series = [next(r["tv"] for r in rows if r["m"] == m and r["c"] == c and r["coef"] == coord) for m, c in zip(ms, cs)]
        diagonal.append(series)
    bundle = ResultBundle()
    bundle.tables["tv"] = rows
    bundle.tables["tv_by_rep"] = raw
    bundle.metrics.update(
        {
            "diagonal_tv": {f"coef{k}": v for k, v in enumerate(diagonal)},
            "diagonal": [[m, c] for m, c in zip(ms, cs)],
            "sigma_dp": run.summary.sigma,
            "exact_sampler": target_diag,
            "target_estimator": TARGET_ESTIMATOR,
        }
    )
    panels = []
    for coord in range(dim):
        panels.append(
            {
                "series": [(f"m={m}", cs, [r["tv"] for r in rows if r["m"] == m and r["coef"] == coord]) for m in ms],
                "title": f"TV, coefficient {coord}",
                "xlabel": "n*/n",
            }
        )
    bundle.plots["tv"] = figure(panels, ncols=dim)
    return bundle


def _coverage_rep(cfg: ExperimentConfig, epsilon: float, stream: RngStream) -> dict:
    run = ToyRun(cfg, epsilon, stream)
    mix = run.mixture(cfg.m, cfg.c)
    real = run.real_posterior()
    dim = true_coefficients(cfg).size
    draws = real.sample(20000, stream.child(5))
    intervals, real_intervals = {}, {}
    for lev in cfg.get("levels"):
        intervals[lev] = [credible_interval(mix, lev, coord=j) for j in range(dim)]
        real_intervals[lev] = [credible_interval(draws[:, j], lev) for j in range(dim)]
    return {"mixture": intervals, "real": real_intervals, "accept": float(np.mean(run.posterior.diagnostics["accept_rate"]))}


def coverage_study(cfg: ExperimentConfig) -> ResultBundle:
    truths = true_coefficients(cfg)
    levels = list(cfg.get("levels"))
    bundle = ResultBundle()
    report_rows, interval_rows = [], []
    for e, eps in enumerate(_as_list(cfg.get("epsilons", [cfg.get("epsilon")]))):
        reps = [_coverage_rep(cfg, float(eps), RngStream(cfg.seed).child(1000 * e + r)) for r in range(cfg.repetitions)]
        for method in ("mixture", "real"):
            for row in coverage_width_report([rep[method] for rep in reps], truths, levels):
                report_rows.append({"epsilon": float(eps), "method": method, **row})
        for r, rep in enumerate(reps):
            for lev in levels:
                for j, (lo, hi) in enumerate(rep["mixture"][lev]):
                    interval_rows.append({"epsilon": float(eps), "rep": r, "level": lev, "coef": j, "lo": lo, "hi": hi})
    bundle.tables["coverage"] = report_rows
    bundle.tables["intervals"] = interval_rows
    bundle.metrics["coverage"] = {
        f"eps={r['epsilon']:g},level={r['level']:g},coef={r['coef']}": r["coverage"] for r in report_rows if r["method"] == "mixture"
    }
    bundle.metrics["sigma_dp"] = {
        f"{float(eps):g}": calibrate_sigma(PrivacyParams(float(eps), cfg.get("delta"), cfg.get("sensitivity")))
        for eps in _as_list(cfg.get("epsilons", [cfg.get("epsilon")]))
    }
    panels = []
    for j in range(truths.size):
        series = []
        for eps in sorted({r["epsilon"] for r in report_rows}):
            sel = [r for r in report_rows if r["epsilon"] == eps and r["coef"] == j and r["method"] == "mixture"]
            series.append((f"eps={eps:g}", [r["level"] for r in sel], [r["coverage"] for r in sel]))
        series.append(("nominal", levels, levels))
        panels.append({"series": series, "title": f"coverage, coefficient {j}", "xlabel": "level"})
    bundle.plots["coverage"] = figure(panels, ncols=truths.size)
    return bundle


def _as_list(value) -> list:
    return list(value) if isinstance(value, (list, tuple)) else [value]


EXPERIMENTS = {
    "toy-dp-logreg": single_run,
    "toy-sweep": sweep,
    "coverage-study": coverage_study,
}
