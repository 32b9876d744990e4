import math

import numpy as np
import pytest

from tailwarn import (
    Family,
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
from tailwarn.errors import DivergedError, NoIntervalError, NoSignChangeError

X_STAR_TANH = math.log(2.0 + math.sqrt(3.0))
A_STAR_TANH_LOWER = math.sqrt(3.0) - X_STAR_TANH - 0.1


def bisect(g, lo, hi, iters=200):
    """Independent bracketing oracle used to cross-check the Newton solver."""
    g_lo = g(lo)
    assert g_lo * g(hi) <= 0
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if g_lo * g(mid) <= 0:
            hi = mid
        else:
            lo, g_lo = mid, g(mid)
    return 0.5 * (lo + hi)


MESH_MODELS = [
    MapModel(Family.LINEAR, 0.3, 0.1),
    MapModel(Family.LINEAR, 0.7, 0.1),
    MapModel(Family.TANH_SHIFT, -0.4, 0.1),
    MapModel(Family.TANH_SHIFT, 0.2, 0.1),
    MapModel(Family.MODIFIED_TANH, 0.0, 0.8),
    MapModel(Family.MODIFIED_TANH, 0.3, 0.8),
]

MESH_SEEDS = {Family.LINEAR: 0.0, Family.TANH_SHIFT: 3.0, Family.MODIFIED_TANH: 3.0}


def working_mesh(model, points=1000):
    try:
        iv = minimal_invariant_interval(model, MESH_SEEDS[model.family])
        lo, hi = iv.x_minus - 1.0, iv.x_plus + 1.0
    except NoIntervalError:
        lo, hi = -2.0, 2.0
    return np.linspace(lo, hi, points)


def test_eval_map_examples():
    assert eval_map(MapModel(Family.LINEAR, 0.5, 0.1), 2.0) == 1.0
    assert eval_map(MapModel(Family.TANH_SHIFT, 0.0, 0.1), 0.0) == 0.0
    # oracle: standard-library tanh
    got = eval_map(MapModel(Family.TANH_SHIFT, 0.4, 0.1), 2.0)
    assert got == pytest.approx(3.0 * math.tanh(1.0) - 0.4, abs=1e-15)


def test_modified_tanh_defined_below_cube_root_kink():
    # real signed cube root keeps the family defined for a < -0.0011
    model = MapModel(Family.MODIFIED_TANH, -0.5, 0.8)
    assert math.isfinite(float(eval_map(model, 1.0)))


def test_extremal_examples():
    lin = MapModel(Family.LINEAR, 0.5, 0.1)
    assert eval_extremal(lin, Side.LOWER, 0.0) == pytest.approx(-0.05, abs=1e-15)
    assert eval_extremal(lin, Side.LOWER, -0.1) == pytest.approx(-0.1, abs=1e-15)
    tanh = MapModel(Family.TANH_SHIFT, 0.0, 0.1)
    assert eval_extremal(tanh, Side.UPPER, 0.0) == pytest.approx(0.1, abs=1e-15)


def test_noise_amplitude_scaling():
    assert noise_amplitude(MapModel(Family.LINEAR, 0.5, 0.1)) == pytest.approx(0.05)
    assert noise_amplitude(MapModel(Family.TANH_SHIFT, 0.5, 0.1)) == 0.1


def test_derivative_examples():
    assert derivative(MapModel(Family.LINEAR, 0.7, 0.1), 123.4) == 0.7
    assert derivative(MapModel(Family.TANH_SHIFT, 0.9, 0.1), 0.0) == pytest.approx(1.5)
    # (3/2)(1 - tanh^2(x/2)) = 1 at tanh(x/2) = 1/sqrt(3)
    d = derivative(MapModel(Family.TANH_SHIFT, 0.9, 0.1), X_STAR_TANH)
    assert d == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("model", MESH_MODELS)
def test_derivative_matches_finite_differences(model):
    xs = working_mesh(model, 200)
    h = 1e-5
    fd = (eval_map(model, xs + h) - eval_map(model, xs - h)) / (2.0 * h)
    an = derivative(model, xs)
    mask = np.abs(an) > 1e-3  # away from derivative zeros
    rel = np.abs(fd[mask] - an[mask]) / np.abs(an[mask])
    assert rel.max() <= 1e-6


@pytest.mark.parametrize("model", MESH_MODELS)
def test_strictly_increasing_on_mesh(model):
    xs = working_mesh(model, 1000)
    ys = eval_map(model, xs)
    assert np.all(np.diff(ys) > 0)


@pytest.mark.parametrize("model", MESH_MODELS)
def test_inverse_consistency(model):
    xs = working_mesh(model, 1000)
    back = inverse(model, eval_map(model, xs))
    assert np.abs(back - xs).max() <= 1e-10


def test_fixed_point_linear_exact():
    res = fixed_point(MapModel(Family.LINEAR, 0.5, 0.1), Side.LOWER, (-1.0, 0.0))
    assert res.x == pytest.approx(-0.1, abs=1e-13)
    assert res.residual <= 1e-12 * (1 + abs(res.x))
    assert res.stable


def test_fixed_point_tanh_vs_bisection_oracle():
    model = MapModel(Family.TANH_SHIFT, 0.0, 0.1)
    oracle = bisect(lambda x: 3.0 * math.tanh(x / 2.0) - 0.1 - x, 2.0, 4.0)
    res = fixed_point(model, Side.LOWER, (2.0, 4.0))
    assert res.x == pytest.approx(oracle, abs=1e-11)
    assert res.residual <= 1e-12 * (1 + abs(res.x))
    assert res.stable


def test_fixed_point_upper_branch_past_fold():
    # upper extremal map keeps a stable fixed point right of the fold at a=0.4
    model = MapModel(Family.TANH_SHIFT, 0.4, 0.1)
    oracle = bisect(lambda x: 3.0 * math.tanh(x / 2.0) - 0.3 - x, X_STAR_TANH, 4.0)
    res = fixed_point(model, Side.UPPER, (X_STAR_TANH, 4.0))
    assert res.x == pytest.approx(oracle, abs=1e-11)
    assert res.residual <= 1e-12 * (1 + abs(res.x))
    assert res.stable


def test_fixed_point_no_sign_change():
    with pytest.raises(NoSignChangeError):
        fixed_point(MapModel(Family.LINEAR, 0.5, 0.1), Side.LOWER, (1.0, 2.0))


def test_interval_linear_is_noise_support():
    iv = minimal_invariant_interval(MapModel(Family.LINEAR, 0.5, 0.1), 0.0)
    assert iv.x_minus == pytest.approx(-0.1, abs=1e-12)
    assert iv.x_plus == pytest.approx(0.1, abs=1e-12)


def test_interval_tanh_matches_oracles():
    model = MapModel(Family.TANH_SHIFT, 0.0, 0.1)
    iv = minimal_invariant_interval(model, 3.0)
    lo = bisect(lambda x: 3.0 * math.tanh(x / 2.0) - 0.1 - x, 2.0, 4.0)
    hi = bisect(lambda x: 3.0 * math.tanh(x / 2.0) + 0.1 - x, 2.0, 4.0)
    assert iv.x_minus == pytest.approx(lo, abs=1e-11)
    assert iv.x_plus == pytest.approx(hi, abs=1e-11)
    f = lambda x: 3.0 * math.tanh(x / 2.0)
    assert abs(f(iv.x_minus) - 0.1 - iv.x_minus) <= 1e-12 * (1 + abs(iv.x_minus))
    assert abs(f(iv.x_plus) + 0.1 - iv.x_plus) <= 1e-12 * (1 + abs(iv.x_plus))


def test_interval_gone_past_fold():
    with pytest.raises(NoIntervalError):
        minimal_invariant_interval(MapModel(Family.TANH_SHIFT, 0.32, 0.1), 3.0)


def test_modified_tanh_enlarged_interval_after_fold():
    # just past the fold the interval explodes but stays minimal (flickering)
    iv = minimal_invariant_interval(MapModel(Family.MODIFIED_TANH, 0.2, 0.8), 3.0)
    pre = minimal_invariant_interval(MapModel(Family.MODIFIED_TANH, 0.0, 0.8), 3.0)
    assert iv.x_minus < pre.x_minus - 1.0
    assert iv.width > pre.width


def test_modified_tanh_mismatched_branches_rejected():
    # at a=0.3 the upper extremal map regrows a blocking fixed point below,
    # so the seed's branch no longer bounds a minimal invariant interval
    with pytest.raises(NoIntervalError):
        minimal_invariant_interval(MapModel(Family.MODIFIED_TANH, 0.3, 0.8), 3.0)
    low = minimal_invariant_interval(MapModel(Family.MODIFIED_TANH, 0.3, 0.8), -3.0)
    assert low.x_plus < 0.0


def test_lambda_true_linear():
    model = MapModel(Family.LINEAR, 0.684, 0.1)
    iv = minimal_invariant_interval(model, 0.0)
    assert lambda_true(model, iv) == pytest.approx(0.684, abs=1e-12)


def test_lambda_true_at_fold_is_one():
    model = MapModel(Family.TANH_SHIFT, A_STAR_TANH_LOWER, 0.1)
    iv = InvariantInterval(X_STAR_TANH, X_STAR_TANH + 1.0)
    assert lambda_true(model, iv, Side.LOWER) == pytest.approx(1.0, abs=1e-12)


def test_lambda_true_tanh_loose_band():
    model = MapModel(Family.TANH_SHIFT, -0.5, 0.1)
    iv = minimal_invariant_interval(model, 3.0)
    lam = lambda_true(model, iv)
    x_oracle = bisect(lambda x: 3.0 * math.tanh(x / 2.0) + 0.5 - 0.1 - x, 2.0, 5.0)
    assert lam == pytest.approx(1.5 * (1 - math.tanh(x_oracle / 2.0) ** 2), abs=1e-9)
    assert 0.18 <= lam <= 0.26


def test_fold_tanh_closed_form():
    fold = solve_fold(Family.TANH_SHIFT, 0.1, Side.LOWER)
    assert fold.x_star == pytest.approx(X_STAR_TANH, abs=1e-12)
    assert fold.a_star == pytest.approx(A_STAR_TANH_LOWER, abs=1e-12)
    model = MapModel(Family.TANH_SHIFT, fold.a_star, 0.1)
    assert abs(eval_map(model, fold.x_star) - 0.1 - fold.x_star) <= 1e-10
    assert abs(derivative(model, fold.x_star) - 1.0) <= 1e-10


def test_fold_modified_tanh():
    fold = solve_fold(Family.MODIFIED_TANH, 0.8, Side.LOWER)
    assert 0.170 <= fold.a_star <= 0.180
    model = MapModel(Family.MODIFIED_TANH, fold.a_star, 0.8)
    assert abs(eval_map(model, fold.x_star) - 0.8 - fold.x_star) <= 1e-10
    assert abs(derivative(model, fold.x_star) - 1.0) <= 1e-10


def test_fold_linear_rejected():
    with pytest.raises(ValueError):
        solve_fold(Family.LINEAR, 0.1, Side.LOWER)


def test_hitting_time_examples():
    model = MapModel(Family.LINEAR, 0.5, 0.1)
    assert hitting_time(model, 0.0, -0.09) == 4
    # closed-form geometric decay: n = ceil(log(ratio)/log(lambda))
    assert hitting_time(model, 0.0, -0.099) == 7
    assert hitting_time(model, 0.0, -0.0999) == 10
    # one application suffices when x sits just below the first image
    first = eval_extremal(model, Side.LOWER, 0.0)
    assert hitting_time(model, 0.0, first + 1e-9) == 1


def test_hitting_time_matches_closed_form():
    rng = np.random.default_rng(42)
    for _ in range(200):
        lam = rng.uniform(0.05, 0.95)
        model = MapModel(Family.LINEAR, lam, 0.1)
        x_minus = -0.1
        x0 = rng.uniform(x_minus + 1e-4, x_minus + 0.4)
        x = rng.uniform(x_minus + 1e-9, x0 - 1e-9)
        ratio = (x - x_minus) / (x0 - x_minus)
        t = math.log(ratio) / math.log(lam)
        if abs(t - round(t)) < 1e-6:
            continue  # skip float ties between the two counting conventions
        assert hitting_time(model, x0, x) == max(0, math.floor(t) + 1)


def test_hitting_time_preconditions():
    model = MapModel(Family.LINEAR, 0.5, 0.1)
    with pytest.raises(ValueError):
        hitting_time(model, 0.0, 0.0)
    with pytest.raises(DivergedError):
        # lower extremal map moves up from x0=1 at a=-0.5
        hitting_time(MapModel(Family.TANH_SHIFT, -0.5, 0.1), 1.0, 0.5)


def test_model_validation():
    with pytest.raises(ValueError):
        MapModel(Family.LINEAR, 1.5, 0.1)
    with pytest.raises(ValueError):
        MapModel(Family.TANH_SHIFT, 0.0, -1.0)
