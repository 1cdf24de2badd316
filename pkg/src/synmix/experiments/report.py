"""Summaries computed from experiment outputs."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class RateFit:
    slope: float
    stderr: float
    intercept: float


def rate_fit(ns, tvs) -> RateFit:
    """Least-squares slope of log TV against log n."""
    ns = np.asarray(ns, dtype=float)
    tvs = np.asarray(tvs, dtype=float)
    if ns.size != tvs.size or np.unique(ns).size < 3:
        raise ValueError("rate_fit needs TV values at three or more distinct n")
    if np.any(tvs <= 0) or np.any(ns <= 0):
        raise ValueError("rate_fit needs positive n and TV values")
    x, y = np.log(ns), np.log(tvs)
    xc = x - x.mean()
    slope = float(xc @ (y - y.mean()) / (xc @ xc))
    intercept = float(y.mean() - slope * x.mean())
    resid = y - intercept - slope * x
    dof = x.size - 2
    stderr = float(np.sqrt(resid @ resid / dof / (xc @ xc))) if dof > 0 else float("nan")
    return RateFit(slope, stderr, intercept)


def coverage_width_report(intervals, truths, levels) -> list[dict]:
    """Empirical coverage and mean width per coefficient and level.

    ``intervals[r][level]`` is a sequence of ``(lo, hi)`` per coefficient for
    repetition ``r``; ``truths`` holds the true coefficient values.
    """
    if len(intervals) < 1:
        raise ValueError("at least one repetition is required")
    truths = np.asarray(truths, dtype=float)
    rows = []
    for level in levels:
        bounds = np.array([[iv for iv in rep[level]] for rep in intervals], dtype=float)
        lo, hi = bounds[..., 0], bounds[..., 1]
        covered = (lo <= truths) & (truths <= hi)
        width = hi - lo
        for j in range(truths.size):
            rows.append(
                {
                    "level": level,
                    "coef": j,
                    "truth": float(truths[j]),
                    "coverage": float(covered[:, j].mean()),
                    "width": float(width[:, j].mean()),
                    "repetitions": int(bounds.shape[0]),
                }
            )
    return rows
