"""Command-line front end: parse a config, dispatch the run, write files."""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import io
from .config import SCHEMAS, parse_config
from .density import Boundary, build_histogram, ulam_density
from .dynamics import MapModel, minimal_invariant_interval, solve_fold
from .errors import ConfigError, TailwarnError
from .estimator import (
    FIT_BASES,
    Method,
    default_intervals,
    estimate_from_histogram,
    interval_method,
)
from .experiments import (
    BoundaryStudySpec,
    GridStudySpec,
    RmseSweepSpec,
    VarianceDemoSpec,
    run_boundary_study,
    run_grid_study,
    run_rmse_sweep,
    run_variance_demo,
)
from .noise import RngStream, for_model
from .simulate import continuation_sweep, generate


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="tailwarn",
        description="Bifurcation-proximity early-warning estimation for bounded-noise maps",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for command, schema in SCHEMAS.items():
        p = sub.add_parser(command)
        p.add_argument("--spec", dest="spec", default=None, help="key=value config file")
        for key, spec in schema.items():
            p.add_argument(
                f"--{key.replace('_', '-')}",
                dest=f"key_{key}",
                default=None,
                help=spec.help or key,
            )
    return parser


def _series_for_estimate(config):
    if config["series"]:
        values = np.loadtxt(config["series"], delimiter=",", skiprows=1, usecols=-1, dtype=float)
        return np.atleast_1d(values)
    model = MapModel(config["family"], config["a"], config["epsilon"])
    noise = for_model(model, config["noise"])
    rng = RngStream(config["seed"], config["stream"])
    return generate(model, noise, config["y0"], config["n"], rng, burn_in=config["burn_in"]).values


def _run_simulate(config):
    model = MapModel(config["family"], config["a"], config["epsilon"])
    noise = for_model(model, config["noise"])
    rng = RngStream(config["seed"], config["stream"])
    series = generate(model, noise, config["y0"], config["n"], rng, burn_in=config["burn_in"])
    out = config["out"]
    io.write_csv(out + ".csv", io.SERIES_COLUMNS, io.series_rows(series))
    io.write_manifest(out + ".manifest", config)
    return [out + ".csv", out + ".manifest"]


def _run_estimate(config):
    values = _series_for_estimate(config)
    boundary = Boundary.estimated()
    if config["boundary"] == "true":
        if config["x_minus"] is None:
            raise ConfigError("x_minus", "required when boundary=true")
        boundary = Boundary.true(config["x_minus"], config["x_plus"])
    hist = build_histogram(values, config["b"], boundary, config["point"])
    rows = []
    for method in config["methods"]:
        lam_hat, status = float("nan"), "ok"
        try:
            if method is Method.INTERVAL:
                i1, i2 = default_intervals(values, hist.x_hat_minus, hist.delta, config["min_visits"])
                lam_hat = interval_method(values, i1, i2).lambda_hat
            else:
                lam_hat = estimate_from_histogram(
                    hist, config["q"], config["h_min_frac"], FIT_BASES[method]
                ).lambda_hat
        except TailwarnError as exc:
            status = exc.code
        rows.append(
            (
                float("nan") if config["series"] else config.get("a"),
                float("nan"),
                method,
                hist.boundary_kind,
                len(values),
                config["b"],
                config["q"],
                0,
                lam_hat,
                float("nan"),
                status,
            )
        )
    out = config["out"]
    io.write_csv(out + ".csv", io.ESTIMATE_COLUMNS, rows)
    io.write_manifest(out + ".manifest", config)
    return [out + ".csv", out + ".manifest"]


def _run_sweep(config):
    rng = RngStream(config["seed"], config["stream"])
    result = continuation_sweep(
        config["family"],
        config["epsilon"],
        config["noise"],
        config["a_grid"],
        config["n"],
        config["y0"],
        config["burn_in"],
        rng,
        keep=config["keep"],
        hist_bins=config["b"],
        settle=config["settle"],
    )
    out = config["out"]
    io.write_csv(out + ".csv", io.SWEEP_COLUMNS, io.sweep_rows(result))
    io.write_manifest(out + ".manifest", config)
    return [out + ".csv", out + ".manifest"]


def _run_ulam(config):
    model = MapModel(config["family"], config["a"], config["epsilon"])
    noise = for_model(model, config["noise"])
    interval = minimal_invariant_interval(model, config["seed_point"])
    dens = ulam_density(model, noise, interval, config["bins"], config["tol"])
    out = config["out"]
    io.write_csv(out + ".csv", io.DENSITY_COLUMNS, io.density_rows(dens.edges, dens.heights))
    io.write_manifest(
        out + ".manifest",
        config,
        extra={
            "interval.x_minus": interval.x_minus,
            "interval.x_plus": interval.x_plus,
            "residual": dens.residual,
            "iterations": dens.iterations,
        },
    )
    return [out + ".csv", out + ".manifest"]


def _run_fold(config):
    fold = solve_fold(config["family"], config["epsilon"], config["side"])
    print(f"x_star={io.fmt(fold.x_star)} a_star={io.fmt(fold.a_star)}")
    return []


def _run_grid_study(config):
    spec = GridStudySpec(
        family=config["family"],
        noise_kind=config["noise"],
        epsilon=config["epsilon"],
        a_grid=config["a_grid"],
        n=config["n"],
        b=config["b"],
        q=config["q"],
        h_min_frac=config["h_min_frac"],
        boundary=config["boundary"],
        methods=config["methods"],
        realizations=config["realizations"],
        master_seed=config["seed"],
        protocol=config["protocol"],
        y0=config["y0"],
        burn_in_first=config["burn_in"],
        point=config["point"],
        interval_min_visits=config["min_visits"],
        jobs=config["jobs"],
    )
    result = run_grid_study(spec)
    out = config["out"]
    io.write_csv(out + ".csv", io.ESTIMATE_COLUMNS, io.estimate_rows(result))
    io.write_csv(out + "_summary.csv", io.SUMMARY_COLUMNS, io.summary_rows(result))
    io.write_manifest(out + ".manifest", config)
    return [out + ".csv", out + "_summary.csv", out + ".manifest"]


def _run_variance_demo(config):
    spec = VarianceDemoSpec(
        a_grid=config["a_grid"],
        family=config["family"],
        noise_kind=config["noise"],
        epsilon=config["epsilon"],
        n=config["n"],
        realizations=config["realizations"],
        y0_first=config["y0"],
        burn_in_first=config["burn_in"],
        b=config["b"],
        q=config["q"],
        h_min_frac=config["h_min_frac"],
        boundary=config["boundary"],
        methods=config["methods"],
        margin_frac=config["margin_frac"],
        settle=config["settle"],
        master_seed=config["seed"],
        include_ulam=config["include_ulam"],
        ulam_bins=config["ulam_bins"],
        ulam_q=config["ulam_q"],
        ulam_tol=config["ulam_tol"],
        ulam_h_min_frac=config["ulam_h_min_frac"],
    )
    result = run_variance_demo(spec)
    out = config["out"]
    files = [out + ".csv", out + ".manifest"]
    io.write_csv(out + ".csv", io.DEMO_COLUMNS, io.demo_rows(result))
    if spec.include_ulam:
        io.write_csv(out + "_ulam.csv", io.ULAM_ROW_COLUMNS, io.ulam_estimate_rows(result))
        files.insert(1, out + "_ulam.csv")
    io.write_manifest(
        out + ".manifest",
        config,
        extra={"first_tip_a": result.first_tip_a},
    )
    return files


def _run_rmse_sweep(config):
    spec = RmseSweepSpec(
        a_grid=config["a_grid"],
        b_values=config["b_values"],
        q_values=config["q_values"],
        family=config["family"],
        noise_kind=config["noise"],
        epsilon=config["epsilon"],
        n=config["n"],
        realizations=config["realizations"],
        methods=config["methods"],
        boundary=config["boundary"],
        h_min_frac=config["h_min_frac"],
        y0=config["y0"],
        burn_in_first=config["burn_in"],
        master_seed=config["seed"],
    )
    table = run_rmse_sweep(spec)
    out = config["out"]
    io.write_csv(out + ".csv", io.RMSE_COLUMNS, io.rmse_rows(table))
    io.write_manifest(out + ".manifest", config)
    return [out + ".csv", out + ".manifest"]


def _run_boundary_study(config):
    spec = BoundaryStudySpec(
        family=config["family"],
        noise_kind=config["noise"],
        epsilon=config["epsilon"],
        lambda_targets=config["lambda_targets"],
        methods=config["methods"],
        n=config["n"],
        b=config["b"],
        q=config["q"],
        h_min_frac=config["h_min_frac"],
        realizations=config["realizations"],
        n_offsets=config["n_offsets"],
        offset_lo_frac=config["offset_lo_frac"],
        offset_hi_frac=config["offset_hi_frac"],
        master_seed=config["seed"],
    )
    result = run_boundary_study(spec)
    out = config["out"]
    io.write_csv(out + ".csv", io.BOUNDARY_COLUMNS, io.boundary_rows(result))
    io.write_csv(out + "_slopes.csv", io.SLOPE_COLUMNS, io.slope_rows(result))
    io.write_manifest(out + ".manifest", config)
    return [out + ".csv", out + "_slopes.csv", out + ".manifest"]


_RUNNERS = {
    "simulate": _run_simulate,
    "estimate": _run_estimate,
    "sweep": _run_sweep,
    "ulam": _run_ulam,
    "fold": _run_fold,
    "grid-study": _run_grid_study,
    "variance-demo": _run_variance_demo,
    "rmse-sweep": _run_rmse_sweep,
    "boundary-study": _run_boundary_study,
}


def run(config) -> list:
    """Dispatch a validated config; returns the list of files written."""
    return _RUNNERS[config.command](config)


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    overrides = {
        name[4:]: value
        for name, value in vars(args).items()
        if name.startswith("key_") and value is not None
    }
    try:
        config = parse_config(args.command, args.spec, overrides)
    except ConfigError as exc:
        print(json.dumps({"error": exc.code, "key": exc.key, "message": str(exc)}), file=sys.stderr)
        return 2
    try:
        files = run(config)
    except TailwarnError as exc:
        print(json.dumps({"error": exc.code, "message": str(exc)}), file=sys.stderr)
        return 1
    for path in files:
        print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
