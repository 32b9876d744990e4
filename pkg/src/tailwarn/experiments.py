"""Study harness: estimator-vs-truth grids, the variance counterexample,
hyperparameter RMSE sweeps, and the boundary-error study.

Every study derives its per-cell random streams from (master_seed, cell
index), so results do not depend on worker scheduling and a rerun with
the same seed reproduces every row exactly.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .density import Boundary, build_histogram, histogram_from_ulam, ulam_density
from .dynamics import (
    Family,
    MapModel,
    lambda_true,
    minimal_invariant_interval,
)
from .errors import NoIntervalError, TailwarnError
from .estimator import (
    FIT_BASES,
    Method,
    default_intervals,
    estimate_from_histogram,
    interval_method,
)
from .noise import NoiseKind, RngStream, for_model
from .simulate import (
    generate_ensemble,
    track_reference_intervals,
)


def _interval_or_none(family, a, epsilon, seed_point):
    try:
        return minimal_invariant_interval(MapModel(family, float(a), epsilon), seed_point)
    except NoIntervalError:
        return None


def _branch_seed(spec):
    if spec.y0 != "auto":
        return float(spec.y0)
    return 0.0 if spec.family is Family.LINEAR else 3.0


def _cell_y0(spec, interval):
    if spec.y0 != "auto":
        return float(spec.y0)
    if spec.family is Family.LINEAR:
        return 0.0
    if interval is None:
        return None
    return 0.5 * (interval.x_minus + interval.x_plus)


@dataclass(frozen=True)
class GridStudySpec:
    family: Family
    noise_kind: NoiseKind
    epsilon: float
    a_grid: tuple
    n: int = 100_000
    b: int = 200
    q: float = 0.3
    h_min_frac: float = 0.01
    boundary: str = "estimated"  # "true" | "estimated"
    methods: tuple = (Method.LEADING,)
    realizations: int = 100
    master_seed: int = 0
    protocol: str = "independent"  # "independent" | "continuation"
    y0: object = "auto"
    burn_in_first: int = 0
    point: str = "mid"
    interval_min_visits: int = 100
    jobs: int = 1


@dataclass(frozen=True)
class GridRow:
    a: float
    lambda_true: float
    method: Method
    boundary_mode: str
    realization: int
    lambda_hat: float
    abs_error: float
    status: str


@dataclass(frozen=True)
class CellSummary:
    a: float
    method: Method
    count: int
    mean: float
    q1: float
    median: float
    q3: float
    whisker_lo: float
    whisker_hi: float
    n_outliers: int
    mean_abs_error: float


@dataclass(frozen=True)
class GridStudyResult:
    spec: GridStudySpec
    rows: tuple
    summaries: tuple


def _boundary_for(spec, interval):
    if spec.boundary == "true":
        if interval is None:
            return None
        return Boundary.true(interval.x_minus, interval.x_plus)
    return Boundary.estimated()


def _estimate_rows(spec, a, lam_true, interval, Y, realization_offset=0):
    """Rows for one parameter cell from an (n, m) ensemble block."""
    boundary_mode = "TrueBoundary" if spec.boundary == "true" else "EstimatedFromData"
    rows = []
    m = Y.shape[1]
    boundary = _boundary_for(spec, interval)
    for r in range(m):
        realization = realization_offset + r
        if boundary is None:
            for method in spec.methods:
                rows.append(
                    GridRow(a, lam_true, method, boundary_mode, realization, np.nan, np.nan, "no_interval")
                )
            continue
        values = Y[:, r]
        hist = None
        hist_err = None
        try:
            hist = build_histogram(values, spec.b, boundary, spec.point)
        except TailwarnError as exc:
            hist_err = exc.code
        for method in spec.methods:
            lam_hat, err, status = np.nan, np.nan, "ok"
            if hist is None:
                status = hist_err
            elif method in FIT_BASES:
                try:
                    est = estimate_from_histogram(
                        hist, spec.q, spec.h_min_frac, FIT_BASES[method]
                    )
                    lam_hat = est.lambda_hat
                except TailwarnError as exc:
                    status = exc.code
            else:
                try:
                    i1, i2 = default_intervals(
                        values, hist.x_hat_minus, hist.delta, spec.interval_min_visits
                    )
                    lam_hat = interval_method(values, i1, i2).lambda_hat
                except TailwarnError as exc:
                    status = exc.code
            if status == "ok" and np.isfinite(lam_true):
                # the interval method is compared through its magnitude
                point_value = abs(lam_hat) if method is Method.INTERVAL else lam_hat
                err = abs(lam_true - point_value)
            rows.append(
                GridRow(a, lam_true, method, boundary_mode, realization, lam_hat, err, status)
            )
    return rows


def _summaries(spec, rows):
    out = []
    for a in spec.a_grid:
        for method in spec.methods:
            lam_hats = np.array(
                [r.lambda_hat for r in rows if r.a == a and r.method is method and r.status == "ok"]
            )
            errs = np.array(
                [
                    r.abs_error
                    for r in rows
                    if r.a == a and r.method is method and r.status == "ok" and np.isfinite(r.abs_error)
                ]
            )
            if lam_hats.size == 0:
                out.append(
                    CellSummary(a, method, 0, *([np.nan] * 6), 0, np.nan)
                )
                continue
            q1, med, q3 = np.quantile(lam_hats, [0.25, 0.5, 0.75])
            iqr = q3 - q1
            inside = lam_hats[(lam_hats >= q1 - 1.5 * iqr) & (lam_hats <= q3 + 1.5 * iqr)]
            out.append(
                CellSummary(
                    a=a,
                    method=method,
                    count=int(lam_hats.size),
                    mean=float(lam_hats.mean()),
                    q1=float(q1),
                    median=float(med),
                    q3=float(q3),
                    whisker_lo=float(inside.min()),
                    whisker_hi=float(inside.max()),
                    n_outliers=int(lam_hats.size - inside.size),
                    mean_abs_error=float(errs.mean()) if errs.size else np.nan,
                )
            )
    return tuple(out)


def _independent_cell(spec: GridStudySpec, a_idx: int):
    a = float(spec.a_grid[a_idx])
    model = MapModel(spec.family, a, spec.epsilon)
    noise = for_model(model, spec.noise_kind)
    interval = _interval_or_none(spec.family, a, spec.epsilon, _branch_seed(spec))
    lam_true = lambda_true(model, interval) if interval is not None else np.nan
    y0 = _cell_y0(spec, interval)
    if y0 is None:
        boundary_mode = "TrueBoundary" if spec.boundary == "true" else "EstimatedFromData"
        return [
            GridRow(a, lam_true, method, boundary_mode, r, np.nan, np.nan, "no_interval")
            for r in range(spec.realizations)
            for method in spec.methods
        ]
    streams = [
        RngStream(spec.master_seed, a_idx * spec.realizations + r)
        for r in range(spec.realizations)
    ]
    Y = generate_ensemble(model, noise, y0, spec.n, streams, burn_in=spec.burn_in_first)
    return _estimate_rows(spec, a, lam_true, interval, Y)


def run_grid_study(spec: GridStudySpec) -> GridStudyResult:
    """Estimate lambda on a parameter grid, many realizations per cell.

    The independent protocol draws a fresh seeded series per cell; the
    continuation protocol chains each realization across the grid,
    seeding every run with the final iterate of the previous one.
    Failures are recorded per cell without aborting the grid.
    """
    if spec.protocol == "independent":
        if spec.jobs > 1:
            with ProcessPoolExecutor(max_workers=spec.jobs) as pool:
                chunks = list(pool.map(_independent_cell, [spec] * len(spec.a_grid), range(len(spec.a_grid))))
        else:
            chunks = [_independent_cell(spec, i) for i in range(len(spec.a_grid))]
        rows = tuple(row for chunk in chunks for row in chunk)
        return GridStudyResult(spec, rows, _summaries(spec, rows))

    if spec.protocol != "continuation":
        raise ValueError(f"unknown protocol {spec.protocol!r}")
    streams = [RngStream(spec.master_seed, r) for r in range(spec.realizations)]
    y = np.full(spec.realizations, float(spec.y0 if spec.y0 != "auto" else 3.0))
    rows = []
    for idx, a in enumerate(spec.a_grid):
        a = float(a)
        model = MapModel(spec.family, a, spec.epsilon)
        noise = for_model(model, spec.noise_kind)
        interval = _interval_or_none(spec.family, a, spec.epsilon, _branch_seed(spec))
        lam_true = lambda_true(model, interval) if interval is not None else np.nan
        Y = generate_ensemble(
            model, noise, y, spec.n, streams, burn_in=spec.burn_in_first if idx == 0 else 0
        )
        y = Y[-1].copy()
        rows.extend(_estimate_rows(spec, a, lam_true, interval, Y))
    rows = tuple(rows)
    return GridStudyResult(spec, rows, _summaries(spec, rows))


@dataclass(frozen=True)
class VarianceDemoSpec:
    a_grid: tuple
    family: Family = Family.MODIFIED_TANH
    noise_kind: NoiseKind = NoiseKind.UNIFORM
    epsilon: float = 0.8
    n: int = 1_000_000
    realizations: int = 10
    y0_first: float = 3.0
    burn_in_first: int = 0
    b: int = 200
    q: float = 0.1
    h_min_frac: float = 0.01
    boundary: str = "true"
    methods: tuple = (Method.LEADING, Method.HIGHER)
    margin_frac: float = 0.05
    settle: int = 100
    master_seed: int = 0
    include_ulam: bool = False
    ulam_bins: int = 2**13
    ulam_q: float = 1e-4
    ulam_tol: float = 1e-10
    # operator densities have no sampling zeros, so the height filter
    # only needs to drop exactly-zero bins
    ulam_h_min_frac: float = 0.0


@dataclass(frozen=True)
class DemoRow:
    a: float
    realization: int
    variance: float
    method: Method
    lambda_hat: float
    status: str
    tipped: bool
    tip_index: int


@dataclass(frozen=True)
class UlamRow:
    a: float
    method: Method
    lambda_hat: float
    status: str


@dataclass(frozen=True)
class VarianceDemoResult:
    spec: VarianceDemoSpec
    rows: tuple
    first_tip_a: tuple
    references: tuple
    ulam_rows: tuple


def run_variance_demo(spec: VarianceDemoSpec) -> VarianceDemoResult:
    """Continuation sweep recording variance, lambda estimates, and tipping.

    The attractor interval is tracked across the grid and frozen at the
    topological bifurcation; tipping means leaving that (remnant)
    interval by more than margin_frac of its width.  Estimates use the
    tracked left boundary when boundary="true".
    """
    a_grid = np.asarray(spec.a_grid, dtype=float)
    refs = track_reference_intervals(spec.family, spec.epsilon, a_grid, spec.y0_first)
    streams = [RngStream(spec.master_seed, r) for r in range(spec.realizations)]
    y = np.full(spec.realizations, spec.y0_first)
    rows = []
    tipped_before = np.zeros(spec.realizations, dtype=bool)
    first_tip = np.full(spec.realizations, np.nan)
    for idx, a in enumerate(a_grid):
        model = MapModel(spec.family, float(a), spec.epsilon)
        noise = for_model(model, spec.noise_kind)
        Y = generate_ensemble(
            model, noise, y, spec.n, streams, burn_in=spec.burn_in_first if idx == 0 else 0
        )
        y = Y[-1].copy()
        ref = refs[idx]
        margin = spec.margin_frac * ref.width
        skip = min(spec.settle, spec.n - 1) if idx > 0 else 0
        outside = (Y[skip:] < ref.x_minus - margin) | (Y[skip:] > ref.x_plus + margin)
        hit = outside.any(axis=0)
        tips = np.where(hit, outside.argmax(axis=0) + skip, -1)
        newly = hit & ~tipped_before
        first_tip[newly] = a
        tipped_before |= hit
        boundary = (
            Boundary.true(ref.x_minus, ref.x_plus) if spec.boundary == "true" else Boundary.estimated()
        )
        for r in range(spec.realizations):
            variance = float(Y[:, r].var(ddof=1))
            hist = None
            hist_err = None
            try:
                hist = build_histogram(Y[:, r], spec.b, boundary)
            except TailwarnError as exc:
                hist_err = exc.code
            for method in spec.methods:
                lam_hat, status = np.nan, "ok"
                if hist is None:
                    status = hist_err
                else:
                    try:
                        est = estimate_from_histogram(
                            hist, spec.q, spec.h_min_frac, FIT_BASES[method]
                        )
                        lam_hat = est.lambda_hat
                    except TailwarnError as exc:
                        status = exc.code
                rows.append(
                    DemoRow(float(a), r, variance, method, lam_hat, status, bool(hit[r]), int(tips[r]))
                )
    ulam_rows = tuple(_demo_ulam_rows(spec, a_grid)) if spec.include_ulam else ()
    return VarianceDemoResult(
        spec=spec,
        rows=tuple(rows),
        first_tip_a=tuple(float(v) if np.isfinite(v) else None for v in first_tip),
        references=tuple(refs),
        ulam_rows=ulam_rows,
    )


def _demo_ulam_rows(spec, a_grid):
    """Deterministic per-parameter estimates from the binned transfer operator."""
    rows = []
    for a in a_grid:
        model = MapModel(spec.family, float(a), spec.epsilon)
        noise = for_model(model, spec.noise_kind)
        interval = _interval_or_none(spec.family, a, spec.epsilon, spec.y0_first)
        if interval is None:
            for method in spec.methods:
                rows.append(UlamRow(float(a), method, np.nan, "no_interval"))
            continue
        dens = ulam_density(model, noise, interval, spec.ulam_bins, spec.ulam_tol)
        hist = histogram_from_ulam(dens)
        for method in spec.methods:
            try:
                est = estimate_from_histogram(hist, spec.ulam_q, spec.ulam_h_min_frac, FIT_BASES[method])
                rows.append(UlamRow(float(a), method, est.lambda_hat, "ok"))
            except TailwarnError as exc:
                rows.append(UlamRow(float(a), method, np.nan, exc.code))
    return rows


@dataclass(frozen=True)
class RmseSweepSpec:
    a_grid: tuple
    b_values: tuple
    q_values: tuple
    family: Family = Family.TANH_SHIFT
    noise_kind: NoiseKind = NoiseKind.UNIFORM
    epsilon: float = 0.1
    n: int = 100_000
    realizations: int = 10
    methods: tuple = (Method.LEADING, Method.HIGHER)
    boundary: str = "estimated"
    h_min_frac: float = 0.01
    protocol: str = "continuation"
    y0: object = "auto"
    burn_in_first: int = 100
    master_seed: int = 0


@dataclass(frozen=True)
class RmseRow:
    b: int
    q: float
    method: Method
    rmse: float
    n_used: int
    n_skipped: int


@dataclass(frozen=True)
class RmseTable:
    spec: RmseSweepSpec
    rows: tuple


def run_rmse_sweep(spec: RmseSweepSpec) -> RmseTable:
    """Root mean square estimation error over the (b, q) hyperparameter box.

    The time series do not depend on the hyperparameters, so each
    realization chain is simulated once and re-histogrammed for every b;
    failed fits are excluded with their count reported.
    """
    a_grid = np.asarray(spec.a_grid, dtype=float)
    lam_true = {}
    for a in a_grid:
        iv = _interval_or_none(spec.family, float(a), spec.epsilon, 3.0 if spec.y0 == "auto" else float(spec.y0))
        lam_true[float(a)] = (
            lambda_true(MapModel(spec.family, float(a), spec.epsilon), iv) if iv else np.nan
        )
    combos = [(int(b), float(q), m) for b in spec.b_values for q in spec.q_values for m in spec.methods]
    sums = {c: 0.0 for c in combos}
    used = {c: 0 for c in combos}
    skipped = {c: 0 for c in combos}

    streams = [RngStream(spec.master_seed, r) for r in range(spec.realizations)]
    y = np.full(spec.realizations, float(spec.y0 if spec.y0 != "auto" else 3.0))
    boundary = Boundary.estimated()
    for idx, a in enumerate(a_grid):
        a = float(a)
        model = MapModel(spec.family, a, spec.epsilon)
        noise = for_model(model, spec.noise_kind)
        Y = generate_ensemble(
            model, noise, y, spec.n, streams, burn_in=spec.burn_in_first if idx == 0 else 0
        )
        y = Y[-1].copy()
        truth = lam_true[a]
        if spec.boundary == "true":
            iv = _interval_or_none(spec.family, a, spec.epsilon, 3.0 if spec.y0 == "auto" else float(spec.y0))
            boundary = Boundary.true(iv.x_minus, iv.x_plus) if iv else None
        for r in range(spec.realizations):
            hists = {}
            for b in spec.b_values:
                if boundary is None:
                    hists[b] = None
                    continue
                try:
                    hists[b] = build_histogram(Y[:, r], int(b), boundary)
                except TailwarnError:
                    hists[b] = None
            for combo in combos:
                b, q, method = combo
                hist = hists[b]
                if hist is None or not np.isfinite(truth):
                    skipped[combo] += 1
                    continue
                try:
                    est = estimate_from_histogram(hist, q, spec.h_min_frac, FIT_BASES[method])
                    sums[combo] += (est.lambda_hat - truth) ** 2
                    used[combo] += 1
                except TailwarnError:
                    skipped[combo] += 1
    rows = tuple(
        RmseRow(
            b=c[0],
            q=c[1],
            method=c[2],
            rmse=float(np.sqrt(sums[c] / used[c])) if used[c] else np.nan,
            n_used=used[c],
            n_skipped=skipped[c],
        )
        for c in combos
    )
    return RmseTable(spec, rows)


@dataclass(frozen=True)
class BoundaryStudySpec:
    family: Family = Family.LINEAR
    noise_kind: NoiseKind = NoiseKind.UNIFORM
    epsilon: float = 0.1
    lambda_targets: tuple = (0.24, 0.42, 0.65, 0.8)
    methods: tuple = (Method.LEADING,)
    n: int = 100_000
    b: int = 200
    q: float = 0.3
    h_min_frac: float = 0.01
    realizations: int = 100
    n_offsets: int = 20
    offset_lo_frac: float = 0.01  # of the bin width
    offset_hi_frac: float = 1.0
    master_seed: int = 0


@dataclass(frozen=True)
class BoundaryRow:
    lambda_target: float
    method: Method
    a: float
    realization: int
    offset: float
    gap: float
    status: str


@dataclass(frozen=True)
class BoundarySlope:
    lambda_target: float
    method: Method
    mean_slope: float
    n_used: int
    n_skipped: int


@dataclass(frozen=True)
class BoundaryStudyResult:
    spec: BoundaryStudySpec
    rows: tuple
    slopes: tuple


def parameter_for_lambda(family: Family, epsilon: float, lam: float, seed_point: float = 3.0) -> float:
    """Map parameter whose boundary derivative equals lam (bisection).

    The derivative at the left boundary increases toward one at the
    fold, so it is bracketed between a far-below parameter and the fold
    location.
    """
    if family is Family.LINEAR:
        return float(lam)
    if not 0.0 < lam < 1.0:
        raise ValueError("lambda target must lie in (0, 1)")
    from .dynamics import Side, solve_fold

    def boundary_derivative(a):
        model = MapModel(family, a, epsilon)
        return lambda_true(model, minimal_invariant_interval(model, seed_point))

    lo = -5.0
    hi = solve_fold(family, epsilon, Side.LOWER).a_star - 1e-7
    if not boundary_derivative(lo) < lam < boundary_derivative(hi):
        raise ValueError(f"lambda target {lam} not reachable on this branch")
    for _ in range(100):
        mid = 0.5 * (lo + hi)
        if boundary_derivative(mid) < lam:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def run_boundary_study(spec: BoundaryStudySpec) -> BoundaryStudyResult:
    """Sensitivity of the estimate to errors in the boundary location.

    For every target lambda and realization the same histogram is
    refitted with the boundary displaced by log-spaced offsets; the
    gap lambda_hat(true) - lambda_hat(offset) against the offset is
    summarized by a per-realization log-log slope.
    """
    rows = []
    slopes = []
    for t_idx, lam in enumerate(spec.lambda_targets):
        a = parameter_for_lambda(spec.family, spec.epsilon, float(lam))
        model = MapModel(spec.family, a, spec.epsilon)
        noise = for_model(model, spec.noise_kind)
        seed_point = 0.0 if spec.family is Family.LINEAR else 3.0
        interval = minimal_invariant_interval(model, seed_point)
        y0 = 0.0 if spec.family is Family.LINEAR else 0.5 * (interval.x_minus + interval.x_plus)
        streams = [
            RngStream(spec.master_seed, t_idx * spec.realizations + r)
            for r in range(spec.realizations)
        ]
        Y = generate_ensemble(model, noise, y0, spec.n, streams)
        for method in spec.methods:
            basis = FIT_BASES[method]
            per_real = []
            skipped = 0
            for r in range(spec.realizations):
                try:
                    hist = build_histogram(
                        Y[:, r], spec.b, Boundary.true(interval.x_minus, interval.x_plus)
                    )
                    base = estimate_from_histogram(hist, spec.q, spec.h_min_frac, basis).lambda_hat
                except TailwarnError as exc:
                    skipped += 1
                    rows.append(BoundaryRow(float(lam), method, a, r, np.nan, np.nan, exc.code))
                    continue
                offsets = np.geomspace(
                    spec.offset_lo_frac * hist.delta, spec.offset_hi_frac * hist.delta, spec.n_offsets
                )
                gaps = np.full(spec.n_offsets, np.nan)
                ok = True
                for k, off in enumerate(offsets):
                    status = "ok"
                    try:
                        shifted = estimate_from_histogram(
                            hist, spec.q, spec.h_min_frac, basis, x_hat_minus=interval.x_minus + off
                        ).lambda_hat
                        gaps[k] = base - shifted
                    except TailwarnError as exc:
                        status = exc.code
                        ok = False
                    rows.append(BoundaryRow(float(lam), method, a, r, float(off), float(gaps[k]), status))
                if ok and np.all(gaps > 0):
                    per_real.append(np.polyfit(np.log(offsets), np.log(gaps), 1)[0])
                else:
                    skipped += 1
            slopes.append(
                BoundarySlope(
                    lambda_target=float(lam),
                    method=method,
                    mean_slope=float(np.mean(per_real)) if per_real else np.nan,
                    n_used=len(per_real),
                    n_skipped=skipped,
                )
            )
    return BoundaryStudyResult(spec, tuple(rows), tuple(slopes))
