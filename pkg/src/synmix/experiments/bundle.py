"""Result bundles: CSV tables, a JSON summary and SVG plots."""

from __future__ import annotations

import csv
import io
import json
import platform
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

import synmix


def format_cell(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return str(value)


def to_jsonable(value):
    if isinstance(value, dict):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return to_jsonable(value.tolist())
    if isinstance(value, (np.bool_,)):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if np.isfinite(value) else str(value)
    return value


def table_to_csv(rows: list[dict]) -> str:
    if not rows:
        return ""
    columns = list(rows[0])
    for row in rows[1:]:
        columns += [c for c in row if c not in columns]
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([format_cell(row.get(c, "")) for c in columns])
    return buf.getvalue()


def density_rows(grid, series: dict[str, np.ndarray], **extra) -> list[dict]:
    names = list(series)
    return [{**extra, "x": float(x), **{n: float(series[n][i]) for n in names}} for i, x in enumerate(grid)]


@dataclass
class ResultBundle:
    tables: dict[str, list[dict]] = field(default_factory=dict)
    summary: dict = field(default_factory=dict)
    plots: dict[str, str] = field(default_factory=dict)

    @property
    def metrics(self) -> dict:
        return self.summary.setdefault("metrics", {})

    def write(self, outdir) -> Path:
        outdir = Path(outdir)
        outdir.mkdir(parents=True, exist_ok=True)
        for name, rows in self.tables.items():
            (outdir / f"{name}.csv").write_text(table_to_csv(rows))
        for name, svg in self.plots.items():
            (outdir / f"{name}.svg").write_text(svg)
        summary = dict(self.summary)
        summary.setdefault("versions", versions())
        summary["files"] = sorted([f"{n}.csv" for n in self.tables] + [f"{n}.svg" for n in self.plots])
        (outdir / "summary.json").write_text(json.dumps(to_jsonable(summary), indent=2, sort_keys=True) + "\n")
        return outdir


def versions() -> dict:
    import scipy

    return {"synmix": synmix.__version__, "numpy": np.__version__, "scipy": scipy.__version__, "python": platform.python_version()}
