"""Histograms, tail selection, and stationary densities on a bin grid.

The normalized histogram is the workhorse density estimate: equal-width
bins spanning the observed range, heights in density units so the total
mass is one.  When the support boundary is unknown it is estimated by
prepending an empty phantom bin: x_hat_minus = x_1 - dz.

A row-stochastic transition matrix on the invariant interval provides an
independent, simulation-free approximation of the stationary density;
its stationary vector is found by power iteration.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .dynamics import InvariantInterval, MapModel, eval_map
from .errors import (
    DegenerateRangeError,
    EmptyTailError,
    EmptyWindowError,
    NoConvergenceError,
)
from .noise import NoiseModel, cdf


class BoundaryKind(str, Enum):
    TRUE = "TrueBoundary"
    ESTIMATED = "EstimatedFromData"


@dataclass(frozen=True)
class Boundary:
    """Either the caller-supplied true boundary or data-driven estimates."""

    kind: BoundaryKind
    x_minus: float | None = None
    x_plus: float | None = None

    @staticmethod
    def true(x_minus: float, x_plus: float | None = None) -> "Boundary":
        return Boundary(BoundaryKind.TRUE, x_minus, x_plus)

    @staticmethod
    def estimated() -> "Boundary":
        return Boundary(BoundaryKind.ESTIMATED)


@dataclass(frozen=True)
class TailHistogram:
    """Equal-width normalized histogram with boundary estimates."""

    edges: np.ndarray
    counts: np.ndarray | None
    heights: np.ndarray
    points: np.ndarray
    delta: float
    n: int
    boundary_kind: BoundaryKind
    x_hat_minus: float
    x_hat_plus: float
    point_rule: str = "mid"

    @property
    def bins(self) -> int:
        return len(self.heights)


@dataclass(frozen=True)
class TailSelection:
    """Bins retained for tail fitting (indices are 0-based)."""

    b_l: int
    kept_indices: np.ndarray
    q: float
    h_min: float


def build_histogram(series, b: int, boundary: Boundary | None = None, point: str = "mid") -> TailHistogram:
    """Normalized b-bin histogram over the observed range of a series.

    Bins are half-open on the right except the last, so every point lands
    in exactly one bin.  `point` selects which abscissa represents a bin
    in downstream fits: "mid" (default), "left" or "right" edge.
    """
    if boundary is None:
        boundary = Boundary.estimated()
    values = np.asarray(getattr(series, "values", series), dtype=float)
    if b < 2:
        raise ValueError("need at least two bins")
    vmin = float(values.min())
    vmax = float(values.max())
    if vmax == vmin:
        raise DegenerateRangeError("all values are identical")
    if values.size < b:
        raise ValueError("series shorter than the number of bins")
    counts, edges = np.histogram(values, bins=b)
    delta = (vmax - vmin) / b
    if point == "mid":
        points = 0.5 * (edges[:-1] + edges[1:])
    elif point == "left":
        points = edges[:-1].copy()
    elif point == "right":
        points = edges[1:].copy()
    else:
        raise ValueError(f"unknown point rule {point!r}")
    heights = counts / (delta * values.size)
    if boundary.kind is BoundaryKind.TRUE:
        if boundary.x_minus is None:
            raise ValueError("true boundary requires x_minus")
        x_hat_minus = float(boundary.x_minus)
        x_hat_plus = (
            float(boundary.x_plus)
            if boundary.x_plus is not None
            else float(points[-1] + delta)
        )
    else:
        x_hat_minus = float(points[0] - delta)
        x_hat_plus = float(points[-1] + delta)
    return TailHistogram(
        edges=edges,
        counts=counts,
        heights=heights,
        points=points,
        delta=delta,
        n=int(values.size),
        boundary_kind=boundary.kind,
        x_hat_minus=x_hat_minus,
        x_hat_plus=x_hat_plus,
        point_rule=point,
    )


def select_tail(hist: TailHistogram, q: float, h_min_frac: float = 0.01, h_min: float | None = None) -> TailSelection:
    """Left-tail bins holding less than a q fraction of the mass, height-filtered.

    b_l is the largest bin count whose cumulative probability mass stays
    below q; of those bins only the ones with height above h_min (by
    default max height / 100) are kept for fitting.
    """
    if not 0.0 < q < 1.0:
        raise ValueError("q must lie in (0, 1)")
    mass = hist.heights * hist.delta
    cum = np.cumsum(mass)
    below = np.nonzero(cum < q)[0]
    if below.size == 0:
        raise EmptyTailError("the first bin already reaches the q mass")
    b_l = int(below[-1]) + 1
    if h_min is None:
        h_min = float(hist.heights.max()) * h_min_frac
    kept = np.nonzero(hist.heights[:b_l] > h_min)[0]
    if kept.size == 0:
        raise EmptyTailError("no tail bin clears the height threshold")
    return TailSelection(b_l=b_l, kept_indices=kept, q=q, h_min=float(h_min))


@dataclass(frozen=True)
class UlamDensity:
    """Stationary density of the binned transfer operator."""

    interval: InvariantInterval
    edges: np.ndarray
    midpoints: np.ndarray
    stationary: np.ndarray
    heights: np.ndarray
    residual: float
    iterations: int


def transition_matrix(model: MapModel, noise: NoiseModel, interval: InvariantInterval, bins: int) -> np.ndarray:
    """Row-stochastic bin-to-bin transition probabilities on the interval.

    Row i holds the noise-CDF mass of each destination bin around the
    image of the source bin midpoint; mass falling outside the interval
    (a collocation artifact) is clipped and the row renormalized.
    """
    if bins < 2:
        raise ValueError("need at least two bins")
    edges = np.linspace(interval.x_minus, interval.x_plus, bins + 1)
    mids = 0.5 * (edges[:-1] + edges[1:])
    P = np.empty((bins, bins), dtype=float)
    block = max(1, int(2**22 // (bins + 1)))
    for start in range(0, bins, block):
        stop = min(start + block, bins)
        f_img = np.asarray(eval_map(model, mids[start:stop]), dtype=float)
        c = cdf(noise, edges[None, :] - f_img[:, None])
        P[start:stop] = np.diff(c, axis=1)
    np.clip(P, 0.0, None, out=P)
    P /= P.sum(axis=1, keepdims=True)
    return P


def ulam_density(
    model: MapModel,
    noise: NoiseModel,
    interval: InvariantInterval,
    bins: int,
    tol: float = 1e-10,
    max_iter: int = 100_000,
) -> UlamDensity:
    """Stationary density on `bins` cells of the interval, by power iteration."""
    P = transition_matrix(model, noise, interval, bins)
    edges = np.linspace(interval.x_minus, interval.x_plus, bins + 1)
    mids = 0.5 * (edges[:-1] + edges[1:])
    delta = interval.width / bins
    pi = np.full(bins, 1.0 / bins)
    residual = np.inf
    for it in range(1, max_iter + 1):
        nxt = pi @ P
        nxt /= nxt.sum()
        residual = float(np.abs(nxt - pi).sum())
        pi = nxt
        if residual <= tol:
            return UlamDensity(
                interval=interval,
                edges=edges,
                midpoints=mids,
                stationary=pi,
                heights=pi / delta,
                residual=residual,
                iterations=it,
            )
    raise NoConvergenceError(
        f"power iteration residual {residual:.3e} above {tol:.1e} after {max_iter} steps"
    )


def histogram_from_ulam(ulam: UlamDensity) -> TailHistogram:
    """Adapt a stationary density to the histogram interface (true boundary)."""
    delta = float(ulam.edges[1] - ulam.edges[0])
    return TailHistogram(
        edges=ulam.edges,
        counts=None,
        heights=ulam.heights,
        points=ulam.midpoints,
        delta=delta,
        n=0,
        boundary_kind=BoundaryKind.TRUE,
        x_hat_minus=ulam.interval.x_minus,
        x_hat_plus=ulam.interval.x_plus,
        point_rule="mid",
    )


def default_tail_window(ulam: UlamDensity, span_frac: float = 0.02, floor: float = 1e-12):
    """Bin indices near the left boundary suited to the asymptotics check.

    Keeps bins within span_frac of the interval width from x_minus whose
    height clears floor times the peak (excludes numerically-zero bins).
    """
    dist = ulam.midpoints - ulam.interval.x_minus
    keep = (dist <= span_frac * ulam.interval.width) & (
        ulam.heights > floor * ulam.heights.max()
    )
    return np.nonzero(keep)[0]


def tail_asymptotics_check(ulam: UlamDensity, lambda_value: float, window) -> float:
    """Ratio of the fitted leading tail coefficient to its theoretical value.

    Regresses log density on squared log distance over the window bins;
    the theoretical coefficient is 1 / (2 log lambda).  A diagnostic for
    how strongly the leading-order tail law holds, not an estimator.
    """
    idx = np.asarray(window, dtype=int)
    if idx.size:
        idx = idx[ulam.heights[idx] > 0.0]
    if idx.size < 2:
        raise EmptyWindowError("need at least two positive-height bins")
    dist = ulam.midpoints[idx] - ulam.interval.x_minus
    x = np.log(dist) ** 2
    y = np.log(ulam.heights[idx])
    slope = np.polyfit(x, y, 1)[0]
    theory = 1.0 / (2.0 * np.log(lambda_value))
    return float(slope / theory)
