"""Map families, extremal maps, fixed points, folds, and hitting times.

Three one-parameter families of increasing maps are supported:

* ``linear``: f(x) = a*x with 0 < a < 1.  The noise amplitude of this
  family is rescaled to (1 - a)*epsilon so the invariant interval is
  [-epsilon, epsilon] for every a.
* ``tanh-shift``: f(x) = 3*tanh(x/2) - a.
* ``modified-tanh``: f(x) = 3*tanh((e^a x + g(a))/2) + h(a) + 1/2 with
  g(a) = -0.72*(a + 0.8)^3 + 0.36 and h(a) = -0.2*(a + 0.0011)^(1/3) + 0.021,
  where the cube root is the real signed one so the map is defined for
  all a.

The extremal maps f(x) -/+ amplitude bound one noisy step from below and
above; their stable fixed points bound minimal invariant intervals, and
the derivative of the lower extremal map at the left boundary is the
bifurcation-proximity indicator estimated elsewhere in this package.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import (
    DivergedError,
    NoConvergenceError,
    NoIntervalError,
    NoSignChangeError,
)


class Family(str, Enum):
    LINEAR = "linear"
    TANH_SHIFT = "tanh-shift"
    MODIFIED_TANH = "modified-tanh"


class Side(str, Enum):
    LOWER = "lower"
    UPPER = "upper"


@dataclass(frozen=True)
class MapModel:
    """A parameterized map together with its noise amplitude epsilon."""

    family: Family
    a: float
    epsilon: float

    def __post_init__(self):
        object.__setattr__(self, "family", Family(self.family))
        if not self.epsilon > 0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")
        if self.family is Family.LINEAR and not 0.0 < self.a < 1.0:
            raise ValueError(f"linear family needs 0 < a < 1, got {self.a}")


@dataclass(frozen=True)
class FixedPointResult:
    x: float
    residual: float
    iterations: int
    stable: bool


@dataclass(frozen=True)
class InvariantInterval:
    x_minus: float
    x_plus: float

    def __post_init__(self):
        if not self.x_minus < self.x_plus:
            raise ValueError("x_minus must be below x_plus")

    @property
    def width(self):
        return self.x_plus - self.x_minus


@dataclass(frozen=True)
class FoldResult:
    x_star: float
    a_star: float


# modified-tanh auxiliaries

def _mt_g(a):
    return -0.72 * (a + 0.8) ** 3 + 0.36


def _mt_h(a):
    return -0.2 * math.copysign(abs(a + 0.0011) ** (1.0 / 3.0), a + 0.0011) + 0.021


def eval_map(model: MapModel, x):
    """Evaluate f_a(x); accepts scalars or arrays."""
    if model.family is Family.LINEAR:
        return model.a * x
    if model.family is Family.TANH_SHIFT:
        return 3.0 * np.tanh(np.asarray(x, dtype=float) / 2.0) - model.a
    u = np.exp(model.a) * np.asarray(x, dtype=float) + _mt_g(model.a)
    return 3.0 * np.tanh(u / 2.0) + _mt_h(model.a) + 0.5


def derivative(model: MapModel, x):
    """Closed-form f_a'(x); accepts scalars or arrays."""
    if model.family is Family.LINEAR:
        return model.a * np.ones_like(np.asarray(x, dtype=float)) if np.ndim(x) else model.a
    if model.family is Family.TANH_SHIFT:
        t = np.tanh(np.asarray(x, dtype=float) / 2.0)
        return 1.5 * (1.0 - t * t)
    ea = np.exp(model.a)
    u = ea * np.asarray(x, dtype=float) + _mt_g(model.a)
    t = np.tanh(u / 2.0)
    return 1.5 * (1.0 - t * t) * ea


def inverse(model: MapModel, y):
    """Inverse map f_a^{-1}(y) on the range of f_a."""
    if model.family is Family.LINEAR:
        return np.asarray(y, dtype=float) / model.a if np.ndim(y) else y / model.a
    if model.family is Family.TANH_SHIFT:
        return 2.0 * np.arctanh((np.asarray(y, dtype=float) + model.a) / 3.0)
    u = 2.0 * np.arctanh((np.asarray(y, dtype=float) - _mt_h(model.a) - 0.5) / 3.0)
    return (u - _mt_g(model.a)) * np.exp(-model.a)


def noise_amplitude(model: MapModel) -> float:
    """Half-width of the additive noise support for this model."""
    if model.family is Family.LINEAR:
        return (1.0 - model.a) * model.epsilon
    return model.epsilon


def eval_extremal(model: MapModel, side: Side, x):
    """One step under extremal noise: f(x) - amp (lower) or f(x) + amp (upper)."""
    side = Side(side)
    amp = noise_amplitude(model)
    if side is Side.LOWER:
        return eval_map(model, x) - amp
    return eval_map(model, x) + amp


def scalar_map(model: MapModel):
    """Return a fast float->float closure for f_a (sequential loops)."""
    if model.family is Family.LINEAR:
        a = model.a
        return lambda x: a * x
    if model.family is Family.TANH_SHIFT:
        a = model.a
        return lambda x: 3.0 * math.tanh(x / 2.0) - a
    ea = math.exp(model.a)
    g = _mt_g(model.a)
    c = _mt_h(model.a) + 0.5
    return lambda x: 3.0 * math.tanh((ea * x + g) / 2.0) + c


def scalar_extremal(model: MapModel, side: Side):
    """Float->float closure for the chosen extremal map."""
    side = Side(side)
    f = scalar_map(model)
    amp = noise_amplitude(model)
    if side is Side.LOWER:
        return lambda x: f(x) - amp
    return lambda x: f(x) + amp


def fixed_point(model: MapModel, side: Side, bracket, tol=1e-12, max_iter=200) -> FixedPointResult:
    """Solve f_side(x) = x inside a sign-changing bracket.

    Newton steps with the analytic derivative, falling back to bisection
    whenever a step leaves the current bracket or the derivative of the
    residual degenerates (near a tangency).
    """
    side = Side(side)
    f = scalar_extremal(model, side)
    lo, hi = sorted(map(float, bracket))
    g_lo = f(lo) - lo
    g_hi = f(hi) - hi
    if g_lo == 0.0:
        return FixedPointResult(lo, 0.0, 0, abs(derivative(model, lo)) < 1.0)
    if g_hi == 0.0:
        return FixedPointResult(hi, 0.0, 0, abs(derivative(model, hi)) < 1.0)
    if g_lo * g_hi > 0.0:
        raise NoSignChangeError(
            f"f_{side.value}(x) - x has the same sign at both ends of {bracket!r}"
        )

    x = 0.5 * (lo + hi)
    for it in range(1, max_iter + 1):
        g = f(x) - x
        if abs(g) <= tol * (1.0 + abs(x)):
            return FixedPointResult(x, abs(g), it, abs(derivative(model, x)) < 1.0)
        if g * g_lo < 0.0:
            hi = x
        else:
            lo = x
            g_lo = g
        dg = derivative(model, x) - 1.0
        if dg != 0.0:
            step = g / dg
            x_new = x - step
        else:
            x_new = lo  # forces bisection below
        if not lo < x_new < hi:
            x_new = 0.5 * (lo + hi)
        x = x_new
    raise NoConvergenceError(f"fixed point not found in {max_iter} iterations")


def _attract(model: MapModel, side: Side, y0, cap=10**6, tol=1e-13):
    """Iterate the extremal map from y0 until the step stalls; return the limit.

    Raises NoIntervalError when iterates blow up or fail to settle, which
    happens past a fold where no stable fixed point remains on the branch.
    """
    f = scalar_extremal(model, side)
    y = float(y0)
    for _ in range(cap):
        y_next = f(y)
        if not math.isfinite(y_next) or abs(y_next) > 1e12:
            raise NoIntervalError(
                f"{side.value} extremal iterates diverge from seed {y0!r}"
            )
        if abs(y_next - y) <= tol * (1.0 + abs(y_next)):
            y = y_next
            break
        y = y_next
    else:
        raise NoIntervalError(f"{side.value} extremal iteration did not settle")
    # Newton polish to full precision
    for _ in range(60):
        g = f(y) - y
        if abs(g) <= 1e-15 * (1.0 + abs(y)):
            break
        dg = derivative(model, y) - 1.0
        if dg == 0.0:
            break
        y -= g / dg
    resid = abs(f(y) - y)
    if resid > 1e-12 * (1.0 + abs(y)):
        raise NoIntervalError(f"{side.value} extremal limit is not a fixed point")
    if not abs(derivative(model, y)) < 1.0:
        raise NoIntervalError(f"{side.value} extremal limit is unstable")
    return y


def minimal_invariant_interval(model: MapModel, seed_point: float) -> InvariantInterval:
    """Minimal invariant interval of the attractor reached from seed_point.

    The lower/upper boundaries are the stable fixed points the extremal
    maps converge to from the seed.  Minimality is enforced by the cross
    conditions: the upper extremal map must carry x_minus to x_plus and
    the lower one must carry x_plus back to x_minus.  When either check
    fails the two limits belong to different branches and no minimal
    invariant interval contains the seed's attractor (post-bifurcation).
    """
    x_minus = _attract(model, Side.LOWER, seed_point)
    x_plus = _attract(model, Side.UPPER, seed_point)
    if not x_minus < x_plus:
        raise NoIntervalError("extremal limits are not ordered")
    up = _attract(model, Side.UPPER, x_minus)
    down = _attract(model, Side.LOWER, x_plus)
    if abs(up - x_plus) > 1e-8 * (1.0 + abs(x_plus)) or abs(down - x_minus) > 1e-8 * (
        1.0 + abs(x_minus)
    ):
        raise NoIntervalError(
            "extremal fixed points lie on different branches; no minimal "
            "invariant interval contains the seed"
        )
    return InvariantInterval(x_minus, x_plus)


def lambda_true(model: MapModel, interval: InvariantInterval, side: Side = Side.LOWER) -> float:
    """Extremal-map derivative at the chosen boundary of the interval."""
    x = interval.x_minus if Side(side) is Side.LOWER else interval.x_plus
    return float(derivative(model, x))


def _tangency_x(family: Family, epsilon: float, a: float) -> float:
    """Positive-branch point where f_a'(x) = 1 (closed form via arctanh)."""
    if family is Family.TANH_SHIFT:
        t = math.sqrt(1.0 - 2.0 / 3.0)
        return 2.0 * math.atanh(t)
    ea = math.exp(a)
    arg = 1.0 - 2.0 / (3.0 * ea)
    if arg <= 0.0:
        raise ValueError("derivative never reaches 1 at this parameter")
    u = 2.0 * math.atanh(math.sqrt(arg))
    return (u - _mt_g(a)) / ea


def solve_fold(
    family: Family,
    epsilon: float,
    side: Side,
    a_scan=(-0.39, 1.2),
    scan_step=0.01,
) -> FoldResult:
    """Locate the fold of the chosen extremal map: f_a(x) -/+ eps = x, f_a'(x) = 1.

    The tangency condition is solved in closed form for x given a (the
    positive branch where the stable/unstable pair annihilates), reducing
    the system to a scalar root-find in a.
    """
    family = Family(family)
    if family is Family.LINEAR:
        raise ValueError("the linear family has no fold")
    sgn = -1.0 if Side(side) is Side.LOWER else 1.0

    def resid(a):
        x = _tangency_x(family, epsilon, a)
        model = MapModel(family, a, epsilon)
        return float(eval_map(model, x)) + sgn * epsilon - x

    if family is Family.TANH_SHIFT:
        # a enters additively: a = f_0(x*) -/+ eps - x* at the tangency point
        x_star = _tangency_x(family, epsilon, 0.0)
        f0 = 3.0 * math.tanh(x_star / 2.0)
        a_star = f0 + sgn * epsilon - x_star
        return FoldResult(x_star, a_star)

    lo, hi = a_scan
    a_prev, r_prev = None, None
    a_lo = a_hi = None
    steps = int(round((hi - lo) / scan_step))
    for k in range(steps + 1):
        a = lo + k * scan_step
        try:
            r = resid(a)
        except ValueError:
            continue
        if a_prev is not None and r_prev * r <= 0.0:
            a_lo, a_hi = a_prev, a
            break
        a_prev, r_prev = a, r
    if a_lo is None:
        raise NoConvergenceError("no fold bracketed in the scanned parameter range")
    r_lo = resid(a_lo)
    for _ in range(200):
        mid = 0.5 * (a_lo + a_hi)
        r_mid = resid(mid)
        if r_lo * r_mid <= 0.0:
            a_hi = mid
        else:
            a_lo, r_lo = mid, r_mid
        if a_hi - a_lo <= 1e-15 * (1.0 + abs(a_lo)):
            break
    a_star = 0.5 * (a_lo + a_hi)
    x_star = _tangency_x(family, epsilon, a_star)
    model = MapModel(family, a_star, epsilon)
    if abs(float(eval_map(model, x_star)) + sgn * epsilon - x_star) > 1e-10 or abs(
        float(derivative(model, x_star)) - 1.0
    ) > 1e-10:
        raise NoConvergenceError("fold residuals did not reach tolerance")
    return FoldResult(x_star, a_star)


def hitting_time(model: MapModel, x0: float, x: float, cap=10**6) -> int:
    """First n >= 0 with f_lower^n(x0) < x, by direct iteration."""
    if not x < x0:
        raise ValueError("need x < x0")
    f = scalar_extremal(model, Side.LOWER)
    upper = x0 + 1e-12 * (1.0 + abs(x0))
    y = float(x0)
    n = 0
    while y >= x:
        y = f(y)
        n += 1
        if y > upper:
            raise DivergedError("iterates moved above the starting point")
        if n > cap:
            raise DivergedError(f"no crossing within {cap} iterations")
    return n
