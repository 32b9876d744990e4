"""Trajectory generation, continuation sweeps, variance, and tipping detection."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .density import build_histogram
from .dynamics import (
    Family,
    InvariantInterval,
    MapModel,
    eval_map,
    minimal_invariant_interval,
    scalar_map,
)
from .errors import NoIntervalError, NonFiniteError, TooShortError
from .noise import NoiseKind, NoiseModel, RngStream, for_model, sample_array


@dataclass(frozen=True)
class TimeSeries:
    """An ordered run of iterates with full provenance."""

    values: np.ndarray
    model: MapModel
    noise: NoiseModel | None
    y0: float
    master_seed: int | None
    stream_index: int | None
    burn_in: int = 0

    def __len__(self):
        return len(self.values)


def generate(
    model: MapModel,
    noise: NoiseModel | None,
    y0: float,
    n: int,
    rng: RngStream | None = None,
    burn_in: int = 0,
    noise_values=None,
) -> TimeSeries:
    """Iterate y_{t+1} = f(y_t) + xi_t and record n values.

    values[0] is y0 advanced by `burn_in` discarded iterates.  Passing an
    explicit `noise_values` sequence replaces the random stream, which
    keeps unit-test oracles free of RNG state.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    draws = burn_in + n - 1
    if noise_values is not None:
        xi = np.asarray(noise_values, dtype=float)
        if len(xi) < draws:
            raise ValueError(f"need {draws} noise values, got {len(xi)}")
    else:
        if noise is None or rng is None:
            raise ValueError("either a noise model with rng or noise_values is required")
        xi = sample_array(noise, draws, rng)
    f = scalar_map(model)
    y = float(y0)
    for t in range(burn_in):
        y = f(y) + xi[t]
    out = np.empty(n, dtype=float)
    out[0] = y
    for t in range(1, n):
        y = f(y) + xi[burn_in + t - 1]
        out[t] = y
    if not np.isfinite(out).all():
        raise NonFiniteError("trajectory left the finite range")
    return TimeSeries(
        values=out,
        model=model,
        noise=noise,
        y0=float(y0),
        master_seed=None if rng is None else rng.master_seed,
        stream_index=None if rng is None else rng.stream_index,
        burn_in=burn_in,
    )


def generate_ensemble(
    model: MapModel,
    noise: NoiseModel,
    y0s,
    n: int,
    streams,
    burn_in: int = 0,
) -> np.ndarray:
    """Simulate one trajectory per stream, vectorized over realizations.

    Returns an (n, m) array whose column j is the series driven by
    streams[j].  Column j reproduces a scalar `generate` run with the
    same stream up to floating-point library differences.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    m = len(streams)
    draws = burn_in + n - 1
    xi = np.empty((max(draws, 1), m), dtype=float)
    for j, stream in enumerate(streams):
        xi[:draws, j] = sample_array(noise, draws, stream)
    y = np.broadcast_to(np.asarray(y0s, dtype=float), (m,)).copy()
    for t in range(burn_in):
        y = eval_map(model, y) + xi[t]
    out = np.empty((n, m), dtype=float)
    out[0] = y
    for t in range(1, n):
        y = eval_map(model, y) + xi[burn_in + t - 1]
        out[t] = y
    if not np.isfinite(out).all():
        raise NonFiniteError("an ensemble trajectory left the finite range")
    return out


def sample_variance(series) -> float:
    """Unbiased sample variance (divisor n - 1)."""
    values = np.asarray(getattr(series, "values", series), dtype=float)
    if values.size < 2:
        raise TooShortError("variance needs at least two points")
    return float(np.var(values, ddof=1))


def default_tipping_margin(interval: InvariantInterval) -> float:
    return 0.05 * interval.width


def detect_tipping(series, interval: InvariantInterval, margin: float | None = None):
    """Index of the first value outside the margin-expanded interval, or None."""
    if margin is None:
        margin = default_tipping_margin(interval)
    values = np.asarray(getattr(series, "values", series), dtype=float)
    outside = (values < interval.x_minus - margin) | (values > interval.x_plus + margin)
    if not outside.any():
        return None
    return int(np.argmax(outside))


def reflect(series: TimeSeries) -> TimeSeries:
    """Mirror a series about 0 so the right tail becomes a left tail."""
    return TimeSeries(
        values=-series.values,
        model=series.model,
        noise=series.noise,
        y0=-series.y0,
        master_seed=series.master_seed,
        stream_index=series.stream_index,
        burn_in=series.burn_in,
    )


@dataclass(frozen=True)
class SweepRecord:
    a: float
    y0: float
    final_value: float
    n: int
    variance: float
    tipped: bool
    tip_index: int | None
    minimum: float
    maximum: float
    reference: InvariantInterval | None = None
    histogram: object | None = None
    values: np.ndarray | None = None


@dataclass(frozen=True)
class SweepResult:
    family: Family
    epsilon: float
    noise_kind: NoiseKind
    records: tuple
    reference_interval: InvariantInterval
    margin: float
    master_seed: int | None
    stream_index: int | None


def track_reference_intervals(
    family: Family,
    epsilon: float,
    a_grid,
    y0_first: float,
    jump_frac: float = 0.5,
):
    """Minimal invariant interval per parameter, frozen at the bifurcation.

    While the interval exists and moves continuously it is re-solved at
    each parameter (seeded from the previous midpoint).  A disappearance
    or a boundary jump beyond jump_frac of the width marks the
    topological bifurcation; from then on the last interval is kept as
    the remnant that tipping is judged against.
    """
    a_grid = np.asarray(a_grid, dtype=float)
    reference = minimal_invariant_interval(
        MapModel(family, float(a_grid[0]), epsilon), y0_first
    )
    refs = [reference]
    frozen = False
    for a in a_grid[1:]:
        if not frozen:
            try:
                seed = 0.5 * (reference.x_minus + reference.x_plus)
                cand = minimal_invariant_interval(MapModel(family, float(a), epsilon), seed)
                jump = max(
                    abs(cand.x_minus - reference.x_minus),
                    abs(cand.x_plus - reference.x_plus),
                )
                if jump > jump_frac * reference.width:
                    frozen = True
                else:
                    reference = cand
            except NoIntervalError:
                frozen = True
        refs.append(reference)
    return refs


def continuation_sweep(
    family: Family,
    epsilon: float,
    noise_kind: NoiseKind,
    a_grid,
    n_per_a: int,
    y0_first: float,
    burn_in_first: int,
    rng: RngStream,
    keep: str = "histogram",
    hist_bins: int = 200,
    margin: float | None = None,
    settle: int = 100,
) -> SweepResult:
    """Chain runs over an increasing parameter grid.

    The final iterate of each run seeds the next parameter; only the very
    first run discards `burn_in_first` iterates.  Tipping at each
    parameter is judged against the tracked attractor interval, which
    freezes into the pre-bifurcation remnant once the interval jumps or
    disappears.  The first `settle` iterates of chained records are not
    eligible as tipping points: they only re-equilibrate to the shifted
    attractor, while a genuine escape persists.  With keep="histogram"
    each record stores a normalized histogram and summary statistics
    instead of the raw series.
    """
    a_grid = np.asarray(a_grid, dtype=float)
    if len(a_grid) == 0:
        raise ValueError("a_grid is empty")
    if np.any(np.diff(a_grid) <= 0):
        raise ValueError("a_grid must be strictly increasing")
    if keep not in ("histogram", "series", "both", "none"):
        raise ValueError(f"unknown keep mode {keep!r}")

    references = track_reference_intervals(family, epsilon, a_grid, y0_first)

    records = []
    y0 = float(y0_first)
    for idx, a in enumerate(a_grid):
        model = MapModel(family, float(a), epsilon)
        noise = for_model(model, noise_kind)
        series = generate(
            model,
            noise,
            y0,
            n_per_a,
            rng,
            burn_in=burn_in_first if idx == 0 else 0,
        )
        reference = references[idx]
        skip = min(settle, n_per_a - 1) if idx > 0 else 0
        tip = detect_tipping(series.values[skip:], reference, margin)
        if tip is not None:
            tip += skip
        hist = None
        if keep in ("histogram", "both"):
            hist = build_histogram(series, hist_bins)
        records.append(
            SweepRecord(
                a=float(a),
                y0=float(series.values[0]),
                final_value=float(series.values[-1]),
                n=n_per_a,
                variance=sample_variance(series),
                tipped=tip is not None,
                tip_index=tip,
                minimum=float(series.values.min()),
                maximum=float(series.values.max()),
                reference=reference,
                histogram=hist,
                values=series.values if keep in ("series", "both") else None,
            )
        )
        y0 = float(series.values[-1])
    return SweepResult(
        family=family,
        epsilon=epsilon,
        noise_kind=noise_kind,
        records=tuple(records),
        reference_interval=references[0],
        margin=margin if margin is not None else default_tipping_margin(references[0]),
        master_seed=rng.master_seed,
        stream_index=rng.stream_index,
    )
