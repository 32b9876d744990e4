"""Stable on-disk formats: CSV writers and run manifests.

Floats are serialized with 17 significant digits so they round-trip
exactly; nothing time- or host-dependent is ever written, which keeps
rerun outputs byte-identical.
"""

from __future__ import annotations

import os
from enum import Enum

import numpy as np

from . import __version__
from .noise import GENERATOR_ID

ESTIMATE_COLUMNS = (
    "a",
    "lambda_true",
    "method",
    "boundary_mode",
    "n",
    "b",
    "q",
    "realization",
    "lambda_hat",
    "abs_error",
    "status",
)

SUMMARY_COLUMNS = (
    "a",
    "method",
    "count",
    "mean",
    "q1",
    "median",
    "q3",
    "whisker_lo",
    "whisker_hi",
    "n_outliers",
    "mean_abs_error",
)

DENSITY_COLUMNS = ("bin_index", "left_edge", "midpoint", "height")

SERIES_COLUMNS = ("t", "value")

SWEEP_COLUMNS = (
    "a",
    "y0",
    "final_value",
    "n",
    "variance",
    "tipped",
    "tip_index",
    "minimum",
    "maximum",
    "ref_x_minus",
    "ref_x_plus",
)

DEMO_COLUMNS = ("a", "realization", "variance", "method", "lambda_hat", "status", "tipped", "tip_index")

ULAM_ROW_COLUMNS = ("a", "method", "lambda_hat", "status")

RMSE_COLUMNS = ("b", "q", "method", "rmse", "n_used", "n_skipped")

BOUNDARY_COLUMNS = ("lambda_target", "method", "a", "realization", "offset", "gap", "status")

SLOPE_COLUMNS = ("lambda_target", "method", "mean_slope", "n_used", "n_skipped")


def fmt(value) -> str:
    """Serialize one cell; floats get 17 significant digits."""
    if value is None:
        return ""
    if isinstance(value, Enum):
        return str(value.value)
    if isinstance(value, bool) or isinstance(value, np.bool_):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (tuple, list)):
        return ",".join(fmt(v) for v in value)
    return str(value)


def write_csv(path, columns, rows) -> None:
    _ensure_parent(path)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(columns) + "\n")
        for row in rows:
            fh.write(",".join(fmt(v) for v in row) + "\n")


def write_manifest(path, config, extra=None) -> None:
    """Flat key=value manifest: config echo, seed, generator, code version."""
    entries = {
        "command": config.command,
        "package": "tailwarn",
        "code_version": __version__,
        "generator": GENERATOR_ID,
        "master_seed": config.get("seed", 0),
    }
    for key, value in config.values.items():
        entries[f"config.{key}"] = value
    for key, value in (extra or {}).items():
        entries[key] = value
    _ensure_parent(path)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for key in sorted(entries):
            fh.write(f"{key}={fmt(entries[key])}\n")


def _ensure_parent(path):
    parent = os.path.dirname(os.path.abspath(path))
    os.makedirs(parent, exist_ok=True)


def series_rows(series):
    return ((t, v) for t, v in enumerate(series.values))


def estimate_rows(result):
    """Rows in the estimates schema from a GridStudyResult."""
    spec = result.spec
    for r in result.rows:
        yield (
            r.a,
            r.lambda_true,
            r.method,
            r.boundary_mode,
            spec.n,
            spec.b,
            spec.q,
            r.realization,
            r.lambda_hat,
            r.abs_error,
            r.status,
        )


def summary_rows(result):
    for s in result.summaries:
        yield (
            s.a,
            s.method,
            s.count,
            s.mean,
            s.q1,
            s.median,
            s.q3,
            s.whisker_lo,
            s.whisker_hi,
            s.n_outliers,
            s.mean_abs_error,
        )


def density_rows(edges, heights):
    mids = 0.5 * (np.asarray(edges[:-1]) + np.asarray(edges[1:]))
    for i, (left, mid, h) in enumerate(zip(edges[:-1], mids, heights)):
        yield (i, left, mid, h)


def sweep_rows(result):
    for rec in result.records:
        yield (
            rec.a,
            rec.y0,
            rec.final_value,
            rec.n,
            rec.variance,
            rec.tipped,
            rec.tip_index if rec.tip_index is not None else "",
            rec.minimum,
            rec.maximum,
            rec.reference.x_minus if rec.reference else "",
            rec.reference.x_plus if rec.reference else "",
        )


def demo_rows(result):
    for r in result.rows:
        yield (r.a, r.realization, r.variance, r.method, r.lambda_hat, r.status, r.tipped, r.tip_index)


def ulam_estimate_rows(result):
    for r in result.ulam_rows:
        yield (r.a, r.method, r.lambda_hat, r.status)


def rmse_rows(table):
    for r in table.rows:
        yield (r.b, r.q, r.method, r.rmse, r.n_used, r.n_skipped)


def boundary_rows(result):
    for r in result.rows:
        yield (r.lambda_target, r.method, r.a, r.realization, r.offset, r.gap, r.status)


def slope_rows(result):
    for s in result.slopes:
        yield (s.lambda_target, s.method, s.mean_slope, s.n_used, s.n_skipped)
