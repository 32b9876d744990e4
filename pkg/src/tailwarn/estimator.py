"""Bifurcation-proximity estimators fitted to the stationary-density tail.

Two least-squares bases for log density against l = log(x - x_hat_minus):

* leading order:  a2*l^2 + a1*l
* higher order:   a2*(l^2 - 2*l*log(-l)) + a1*l

Both have no intercept, and both invert to lambda_hat = exp(1/(2*a2))
with the constraint a2 < 0.  A baseline estimator tracks the one-step
images of visits to two disjoint intervals near the boundary instead.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .density import (
    Boundary,
    BoundaryKind,
    TailHistogram,
    TailSelection,
    build_histogram,
    select_tail,
)
from .errors import (
    CollinearBasisError,
    DegenerateFitError,
    EmptyIntervalError,
    EmptyTailError,
    NonNegativeA2Error,
    PositiveLogError,
)


class Basis(str, Enum):
    LEADING = "leading-order"
    HIGHER = "higher-order"


class Method(str, Enum):
    LEADING = "leading-order"
    HIGHER = "higher-order"
    INTERVAL = "interval"


FIT_BASES = {Method.LEADING: Basis.LEADING, Method.HIGHER: Basis.HIGHER}


@dataclass(frozen=True)
class FitCoefficients:
    a1: float
    a2: float
    basis: Basis
    sse: float
    points_used: int


@dataclass(frozen=True)
class EstimatorConfig:
    b: int = 200
    q: float = 0.3
    h_min_frac: float = 0.01
    boundary: Boundary = Boundary.estimated()
    basis: Basis = Basis.LEADING
    point: str = "mid"


@dataclass(frozen=True)
class LambdaEstimate:
    lambda_hat: float
    method: Method
    coefficients: FitCoefficients | None
    boundary_kind: BoundaryKind
    x_hat_minus: float | None
    n: int
    b: int | None
    q: float | None
    h_min: float | None
    histogram: TailHistogram | None = None
    selection: TailSelection | None = None
    intervals: tuple | None = None


def basis_columns(l: np.ndarray, basis: Basis):
    """The two regressors (v1, v2) for a vector of log distances."""
    if basis is Basis.HIGHER:
        if np.any(l >= 0.0):
            raise PositiveLogError("higher-order basis needs log distances below 0")
        return l, l * l - 2.0 * l * np.log(-l)
    return l, l * l


def fit_tail(points, basis: Basis) -> FitCoefficients:
    """Least-squares fit of (a1, a2) with a2 < 0 via the 2x2 normal equations.

    The a2 < 0 constraint is open, so the constrained optimum either is
    the unconstrained one or does not exist; an unconstrained a2 >= 0 is
    reported as a degenerate fit rather than clamped (a clamped a2 would
    fake lambda_hat -> 0, a spurious all-clear).
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise ValueError("points must be pairs of (log distance, log height)")
    if pts.shape[0] < 2:
        raise EmptyTailError("need at least two points to fit")
    l = pts[:, 0]
    y = pts[:, 1]
    v1, v2 = basis_columns(l, basis)
    s11 = float(v1 @ v1)
    s12 = float(v1 @ v2)
    s22 = float(v2 @ v2)
    b1 = float(v1 @ y)
    b2 = float(v2 @ y)
    det = s11 * s22 - s12 * s12
    if not det > 1e-14 * s11 * s22:
        raise CollinearBasisError("normal equations are singular")
    a1 = (b1 * s22 - b2 * s12) / det
    a2 = (s11 * b2 - s12 * b1) / det
    if a2 >= 0.0:
        raise DegenerateFitError(f"unconstrained minimizer has a2 = {a2:.6g} >= 0")
    resid = y - a1 * v1 - a2 * v2
    return FitCoefficients(
        a1=float(a1),
        a2=float(a2),
        basis=basis,
        sse=float(resid @ resid),
        points_used=int(pts.shape[0]),
    )


def lambda_from_a2(a2: float) -> float:
    """Invert the fitted quadratic coefficient: exp(1 / (2*a2))."""
    if a2 >= 0.0:
        raise NonNegativeA2Error(f"a2 must be negative, got {a2}")
    return float(np.exp(1.0 / (2.0 * a2)))


def estimate_from_histogram(
    hist: TailHistogram,
    q: float = 0.3,
    h_min_frac: float = 0.01,
    basis: Basis = Basis.LEADING,
    x_hat_minus: float | None = None,
) -> LambdaEstimate:
    """Tail-select a histogram and fit lambda_hat from it.

    `x_hat_minus` overrides the histogram's boundary, which is how the
    sensitivity of the estimate to boundary errors is probed.
    """
    sel = select_tail(hist, q, h_min_frac)
    x_minus = hist.x_hat_minus if x_hat_minus is None else float(x_hat_minus)
    dist = hist.points[sel.kept_indices] - x_minus
    keep = dist > 0.0
    if basis is Basis.HIGHER:
        keep &= dist < 1.0
        if not keep.any():
            raise PositiveLogError("no tail point lies within unit distance of the boundary")
    if keep.sum() < 2:
        raise EmptyTailError("fewer than two usable tail points")
    l = np.log(dist[keep])
    log_h = np.log(hist.heights[sel.kept_indices][keep])
    coeffs = fit_tail(np.column_stack([l, log_h]), basis)
    return LambdaEstimate(
        lambda_hat=lambda_from_a2(coeffs.a2),
        method=Method(basis.value),
        coefficients=coeffs,
        boundary_kind=hist.boundary_kind,
        x_hat_minus=x_minus,
        n=hist.n,
        b=hist.bins,
        q=q,
        h_min=sel.h_min,
        histogram=hist,
        selection=sel,
    )


def estimate_lambda(series, config: EstimatorConfig = EstimatorConfig()) -> LambdaEstimate:
    """Full pipeline: histogram, tail selection, basis fit, lambda_hat."""
    hist = build_histogram(series, config.b, config.boundary, config.point)
    return estimate_from_histogram(hist, config.q, config.h_min_frac, config.basis)


def default_intervals(values, x_hat_minus: float, delta: float, min_visits: int = 100):
    """Place the two tracking intervals near the boundary.

    I1 and I2 are the first and third quarters of [x_hat_minus,
    x_hat_minus + 4*k*delta] with k the smallest integer giving each
    interval at least `min_visits` visits that have a successor.
    """
    vals = np.sort(np.asarray(getattr(values, "values", values), dtype=float)[:-1])
    top = vals[-1] if vals.size else x_hat_minus

    def visits(lo, hi):
        return np.searchsorted(vals, hi, side="right") - np.searchsorted(vals, lo, side="left")

    k = 1
    while True:
        i1 = (x_hat_minus, x_hat_minus + k * delta)
        i2 = (x_hat_minus + 2 * k * delta, x_hat_minus + 3 * k * delta)
        if visits(*i1) >= min_visits and visits(*i2) >= min_visits:
            return i1, i2
        if i2[0] > top:
            raise EmptyIntervalError(
                f"no interval placement reaches {min_visits} visits"
            )
        k += 1


def interval_method(series, interval_1, interval_2) -> LambdaEstimate:
    """Baseline estimator from mean one-step images of two tracked intervals.

    Reported raw as printed by its defining formula, which is negative
    for increasing maps with interval_1 left of interval_2; comparisons
    elsewhere use the magnitude.
    """
    a1, b1 = map(float, interval_1)
    a2, b2 = map(float, interval_2)
    if not b1 < a2:
        raise ValueError("intervals must be disjoint with interval_1 on the left")
    values = np.asarray(getattr(series, "values", series), dtype=float)
    prev = values[:-1]
    nxt = values[1:]
    m1 = (prev >= a1) & (prev <= b1)
    m2 = (prev >= a2) & (prev <= b2)
    if not m1.any() or not m2.any():
        raise EmptyIntervalError("an interval is never visited")
    lam = (nxt[m1].mean() - nxt[m2].mean()) / (b2 - a1)
    return LambdaEstimate(
        lambda_hat=float(lam),
        method=Method.INTERVAL,
        coefficients=None,
        boundary_kind=BoundaryKind.ESTIMATED,
        x_hat_minus=None,
        n=int(values.size),
        b=None,
        q=None,
        h_min=None,
        intervals=((a1, b1), (a2, b2)),
    )
