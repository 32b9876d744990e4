"""Early-warning indicator for topological bifurcations of bounded-noise maps.

The package simulates one-dimensional random difference equations with
additive bounded noise, approximates the stationary density of their
attractors, and estimates the extremal-map derivative at the attractor
boundary from the density tail.  That derivative approaches one at a
topological bifurcation, so its estimate is an early-warning signal that
works even where the sample variance does not.
"""

__version__ = "0.1.0"

from .density import (
    Boundary,
    BoundaryKind,
    TailHistogram,
    TailSelection,
    UlamDensity,
    build_histogram,
    histogram_from_ulam,
    select_tail,
    tail_asymptotics_check,
    ulam_density,
)
from .dynamics import (
    Family,
    FixedPointResult,
    FoldResult,
    InvariantInterval,
    MapModel,
    Side,
    derivative,
    eval_extremal,
    eval_map,
    fixed_point,
    hitting_time,
    inverse,
    lambda_true,
    minimal_invariant_interval,
    noise_amplitude,
    solve_fold,
)
from .estimator import (
    Basis,
    EstimatorConfig,
    FitCoefficients,
    LambdaEstimate,
    Method,
    default_intervals,
    estimate_from_histogram,
    estimate_lambda,
    fit_tail,
    interval_method,
    lambda_from_a2,
)
from .noise import GENERATOR_ID, NoiseKind, NoiseModel, RngStream, for_model, sample, sample_array
from .simulate import (
    SweepRecord,
    SweepResult,
    TimeSeries,
    continuation_sweep,
    detect_tipping,
    generate,
    generate_ensemble,
    reflect,
    sample_variance,
    track_reference_intervals,
)
