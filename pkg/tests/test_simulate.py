import math

import numpy as np
import pytest

from tailwarn import (
    Family,
    MapModel,
    NoiseKind,
    RngStream,
    continuation_sweep,
    detect_tipping,
    for_model,
    generate,
    generate_ensemble,
    minimal_invariant_interval,
    reflect,
    sample_variance,
)
from tailwarn.errors import TooShortError

LIN = MapModel(Family.LINEAR, 0.5, 0.1)
LIN_NOISE = for_model(LIN, NoiseKind.UNIFORM)


def bisect(g, lo, hi, iters=200):
    g_lo = g(lo)
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if g_lo * g(mid) <= 0:
            hi = mid
        else:
            lo, g_lo = mid, g(mid)
    return 0.5 * (lo + hi)


def test_generate_injected_zero_noise():
    s = generate(LIN, None, 1.0, 3, noise_values=[0.0, 0.0])
    assert np.array_equal(s.values, [1.0, 0.5, 0.25])


def test_generate_confined_to_invariant_interval():
    s = generate(LIN, LIN_NOISE, 0.0, 10**6, RngStream(11, 0))
    assert s.values.min() >= -0.1 - 1e-9
    assert s.values.max() <= 0.1 + 1e-9


def test_generate_confined_nonlinear_family():
    model = MapModel(Family.TANH_SHIFT, 0.0, 0.1)
    iv = minimal_invariant_interval(model, 3.0)
    y0 = 0.5 * (iv.x_minus + iv.x_plus)
    s = generate(model, for_model(model, NoiseKind.UNIFORM), y0, 10**5, RngStream(11, 1))
    assert s.values.min() >= iv.x_minus - 1e-9
    assert s.values.max() <= iv.x_plus + 1e-9


def test_generate_extremes_approach_boundaries():
    model = MapModel(Family.TANH_SHIFT, 0.0, 0.1)
    # independent bisection oracles for both boundaries
    lo = bisect(lambda x: 3.0 * math.tanh(x / 2.0) - 0.1 - x, 2.0, 4.0)
    hi = bisect(lambda x: 3.0 * math.tanh(x / 2.0) + 0.1 - x, 2.0, 4.0)
    s = generate(model, for_model(model, NoiseKind.UNIFORM), 3.0, 10**5, RngStream(12, 0), burn_in=100)
    assert abs(s.values.min() - lo) < 0.02
    assert abs(s.values.max() - hi) < 0.02


def test_generate_burn_in_discards_iterates():
    xi = [0.01, -0.02, 0.005, 0.0, -0.03, 0.02]
    direct = generate(LIN, None, 0.08, 5, noise_values=xi, burn_in=2)
    y = 0.08
    for t in range(2):
        y = 0.5 * y + xi[t]
    assert direct.values[0] == y
    assert len(direct) == 5
    assert direct.burn_in == 2


def test_generate_reproducible():
    a = generate(LIN, LIN_NOISE, 0.0, 1000, RngStream(13, 2))
    b = generate(LIN, LIN_NOISE, 0.0, 1000, RngStream(13, 2))
    assert np.array_equal(a.values, b.values)
    assert a.master_seed == 13 and a.stream_index == 2


def test_generate_needs_enough_noise_values():
    with pytest.raises(ValueError):
        generate(LIN, None, 0.0, 5, noise_values=[0.0, 0.0])


def test_ensemble_columns_match_scalar_runs():
    streams = [RngStream(14, j) for j in range(4)]
    mat = generate_ensemble(LIN, LIN_NOISE, 0.05, 500, streams, burn_in=7)
    for j in range(4):
        s = generate(LIN, LIN_NOISE, 0.05, 500, RngStream(14, j), burn_in=7)
        np.testing.assert_allclose(mat[:, j], s.values, rtol=0, atol=1e-12)


def test_sample_variance():
    assert sample_variance(np.array([1.0, 2.0, 3.0])) == pytest.approx(1.0)
    assert sample_variance(np.zeros(10)) == 0.0
    with pytest.raises(TooShortError):
        sample_variance(np.array([1.0]))


def test_variance_of_near_passthrough_map():
    # a tiny contraction makes the series essentially i.i.d. uniform noise
    model = MapModel(Family.LINEAR, 1e-9, 0.1)
    noise = for_model(model, NoiseKind.UNIFORM)
    s = generate(model, noise, 0.0, 10**6, RngStream(15, 0))
    assert sample_variance(s) == pytest.approx(noise.epsilon**2 / 3.0, rel=0.02)


def test_detect_tipping():
    iv = minimal_invariant_interval(LIN, 0.0)
    inside = np.linspace(-0.09, 0.09, 50)
    assert detect_tipping(inside, iv, margin=0.01) is None
    planted = inside.copy()
    planted[17] = iv.x_minus - 0.02
    assert detect_tipping(planted, iv, margin=0.01) == 17


def test_reflect_mirrors_values():
    s = generate(LIN, LIN_NOISE, 0.0, 100, RngStream(16, 0))
    r = reflect(s)
    assert np.array_equal(r.values, -s.values)
    assert r.y0 == -s.y0


def test_sweep_chains_initial_conditions():
    sweep = continuation_sweep(
        Family.TANH_SHIFT,
        0.1,
        NoiseKind.UNIFORM,
        np.linspace(-0.5, -0.3, 5),
        2000,
        3.0,
        100,
        RngStream(17, 0),
        keep="series",
    )
    recs = sweep.records
    assert len(recs) == 5
    for prev, nxt in zip(recs[:-1], recs[1:]):
        assert nxt.values[0] == prev.final_value  # exact chaining
        assert nxt.y0 == prev.final_value
    assert not any(r.tipped for r in recs)


def test_sweep_single_element_equals_generate():
    sweep = continuation_sweep(
        Family.TANH_SHIFT,
        0.1,
        NoiseKind.UNIFORM,
        [0.0],
        1500,
        3.0,
        50,
        RngStream(18, 0),
        keep="series",
    )
    model = MapModel(Family.TANH_SHIFT, 0.0, 0.1)
    s = generate(model, for_model(model, NoiseKind.UNIFORM), 3.0, 1500, RngStream(18, 0), burn_in=50)
    assert np.array_equal(sweep.records[0].values, s.values)


def test_sweep_requires_increasing_grid():
    with pytest.raises(ValueError):
        continuation_sweep(
            Family.TANH_SHIFT, 0.1, NoiseKind.UNIFORM, [0.1, 0.1], 100, 3.0, 0, RngStream(19, 0)
        )


def test_sweep_histogram_mode_bounds_memory():
    sweep = continuation_sweep(
        Family.TANH_SHIFT,
        0.1,
        NoiseKind.UNIFORM,
        [-0.2, -0.1],
        2000,
        3.0,
        0,
        RngStream(20, 0),
    )
    for rec in sweep.records:
        assert rec.values is None
        assert rec.histogram is not None
        mass = rec.histogram.heights * rec.histogram.delta
        assert mass.sum() == pytest.approx(1.0, abs=1e-12)


def test_stationarity_of_halves():
    s = generate(LIN, LIN_NOISE, 0.0, 10**6, RngStream(21, 0))
    half = len(s) // 2
    first, second = s.values[:half], s.values[half:]
    se = s.values.std(ddof=1) / math.sqrt(half)
    assert abs(first.mean() - second.mean()) < 5 * se
