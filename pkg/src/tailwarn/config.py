"""Run configuration: flat key=value files, typed schemas, flag overrides.

Each command has a fixed key schema; unknown keys, unparsable values,
and out-of-range values are rejected with the offending key named.
Grid-valued keys accept either "lo:hi:count" (count uniformly spaced
samples, endpoints included) or an explicit comma list.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dynamics import Family, Side
from .errors import RangeViolationError, TypeMismatchError, UnknownKeyError
from .estimator import Method
from .noise import NoiseKind

_REQUIRED = object()


@dataclass(frozen=True)
class Key:
    parse: object
    default: object = _REQUIRED
    check: object = None
    help: str = ""


def _int(s):
    return int(str(s).strip())


def _float(s):
    return float(str(s).strip())


def _bool(s):
    v = str(s).strip().lower()
    if v in ("true", "1", "yes"):
        return True
    if v in ("false", "0", "no"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _str(s):
    return str(s).strip()


def _choice(*options):
    def parse(s):
        v = str(s).strip()
        if v not in options:
            raise ValueError(f"expected one of {options}, got {v!r}")
        return v

    return parse


def _grid(s):
    text = str(s).strip()
    if ":" in text:
        lo, hi, count = text.split(":")
        count = int(count)
        if count < 1:
            raise ValueError("grid count must be positive")
        return tuple(float(v) for v in np.linspace(float(lo), float(hi), count))
    return tuple(float(v) for v in text.split(","))


def _floats(s):
    return tuple(float(v) for v in str(s).split(","))


def _ints(s):
    return tuple(int(v) for v in str(s).split(","))


def _methods(s):
    return tuple(Method(v.strip()) for v in str(s).split(","))


def _family(s):
    return Family(str(s).strip())


def _noise(s):
    return NoiseKind(str(s).strip())


def _side(s):
    return Side(str(s).strip())


def _auto_or_float(s):
    v = str(s).strip()
    return "auto" if v == "auto" else float(v)


def _positive(v):
    return v > 0


def _non_negative(v):
    return v >= 0


def _unit_open(v):
    return 0.0 < v < 1.0


def _at_least(n):
    return lambda v: v >= n


def _increasing(v):
    return len(v) > 0 and all(b > a for a, b in zip(v[:-1], v[1:]))


_COMMON = {
    "seed": Key(_int, 0, help="master seed for stream derivation"),
    "out": Key(_str, "out", help="output path stem"),
}

_SIM_KEYS = {
    "family": Key(_family, Family.LINEAR),
    "a": Key(_float, 0.5),
    "epsilon": Key(_float, 0.1, _positive),
    "noise": Key(_noise, NoiseKind.UNIFORM),
    "n": Key(_int, 100_000, _at_least(1)),
    "y0": Key(_float, 0.0),
    "burn_in": Key(_int, 0, _non_negative),
    "stream": Key(_int, 0, _non_negative),
}

_EST_KEYS = {
    "b": Key(_int, 200, _at_least(2)),
    "q": Key(_float, 0.3, _unit_open),
    "h_min_frac": Key(_float, 0.01, _positive),
    "boundary": Key(_choice("estimated", "true"), "estimated"),
    "point": Key(_choice("mid", "left", "right"), "mid"),
    "min_visits": Key(_int, 100, _at_least(1)),
}

SCHEMAS = {
    "simulate": {**_COMMON, **_SIM_KEYS},
    "estimate": {
        **_COMMON,
        **_SIM_KEYS,
        **_EST_KEYS,
        "series": Key(_str, ""),
        "x_minus": Key(_float, None),
        "x_plus": Key(_float, None),
        "methods": Key(_methods, (Method.LEADING,)),
    },
    "sweep": {
        **_COMMON,
        "family": Key(_family, Family.TANH_SHIFT),
        "epsilon": Key(_float, 0.1, _positive),
        "noise": Key(_noise, NoiseKind.UNIFORM),
        "a_grid": Key(_grid, check=_increasing),
        "n": Key(_int, 100_000, _at_least(1)),
        "y0": Key(_float, 3.0),
        "burn_in": Key(_int, 100, _non_negative),
        "b": Key(_int, 200, _at_least(2)),
        "margin_frac": Key(_float, 0.05, _positive),
        "settle": Key(_int, 100, _non_negative),
        "stream": Key(_int, 0, _non_negative),
        "keep": Key(_choice("histogram", "series", "both", "none"), "histogram"),
    },
    "ulam": {
        **_COMMON,
        "family": Key(_family, Family.LINEAR),
        "a": Key(_float, 0.5),
        "epsilon": Key(_float, 0.1, _positive),
        "noise": Key(_noise, NoiseKind.UNIFORM),
        "bins": Key(_int, 4096, _at_least(2)),
        "tol": Key(_float, 1e-10, _positive),
        "seed_point": Key(_float, 0.0),
    },
    "fold": {
        **_COMMON,
        "family": Key(_family, Family.TANH_SHIFT),
        "epsilon": Key(_float, 0.1, _positive),
        "side": Key(_side, Side.LOWER),
    },
    "grid-study": {
        **_COMMON,
        **_EST_KEYS,
        "family": Key(_family, Family.LINEAR),
        "noise": Key(_noise, NoiseKind.UNIFORM),
        "epsilon": Key(_float, 0.1, _positive),
        "a_grid": Key(_grid, check=_increasing),
        "n": Key(_int, 100_000, _at_least(1)),
        "methods": Key(_methods, (Method.LEADING,)),
        "realizations": Key(_int, 100, _at_least(1)),
        "protocol": Key(_choice("independent", "continuation"), "independent"),
        "y0": Key(_auto_or_float, "auto"),
        "burn_in": Key(_int, 0, _non_negative),
        "jobs": Key(_int, 1, _at_least(1)),
    },
    "variance-demo": {
        **_COMMON,
        "family": Key(_family, Family.MODIFIED_TANH),
        "noise": Key(_noise, NoiseKind.UNIFORM),
        "epsilon": Key(_float, 0.8, _positive),
        "a_grid": Key(_grid, check=_increasing),
        "n": Key(_int, 1_000_000, _at_least(2)),
        "realizations": Key(_int, 10, _at_least(1)),
        "y0": Key(_float, 3.0),
        "burn_in": Key(_int, 0, _non_negative),
        "b": Key(_int, 200, _at_least(2)),
        "q": Key(_float, 0.1, _unit_open),
        "h_min_frac": Key(_float, 0.01, _positive),
        "boundary": Key(_choice("estimated", "true"), "true"),
        "methods": Key(_methods, (Method.LEADING, Method.HIGHER)),
        "margin_frac": Key(_float, 0.05, _positive),
        "settle": Key(_int, 100, _non_negative),
        "include_ulam": Key(_bool, False),
        "ulam_bins": Key(_int, 2**13, _at_least(2)),
        "ulam_q": Key(_float, 1e-4, _unit_open),
        "ulam_tol": Key(_float, 1e-10, _positive),
        "ulam_h_min_frac": Key(_float, 0.0, _non_negative),
    },
    "rmse-sweep": {
        **_COMMON,
        "family": Key(_family, Family.TANH_SHIFT),
        "noise": Key(_noise, NoiseKind.UNIFORM),
        "epsilon": Key(_float, 0.1, _positive),
        "a_grid": Key(_grid, check=_increasing),
        "n": Key(_int, 100_000, _at_least(1)),
        "realizations": Key(_int, 10, _at_least(1)),
        "b_values": Key(_ints, check=lambda v: len(v) > 0 and all(b >= 2 for b in v)),
        "q_values": Key(_floats, check=lambda v: len(v) > 0 and all(0 < q < 1 for q in v)),
        "methods": Key(_methods, (Method.LEADING, Method.HIGHER)),
        "boundary": Key(_choice("estimated", "true"), "estimated"),
        "h_min_frac": Key(_float, 0.01, _positive),
        "y0": Key(_auto_or_float, "auto"),
        "burn_in": Key(_int, 100, _non_negative),
    },
    "boundary-study": {
        **_COMMON,
        "family": Key(_family, Family.LINEAR),
        "noise": Key(_noise, NoiseKind.UNIFORM),
        "epsilon": Key(_float, 0.1, _positive),
        "lambda_targets": Key(_floats, (0.24, 0.42, 0.65, 0.8), lambda v: all(0 < x < 1 for x in v)),
        "methods": Key(_methods, (Method.LEADING,)),
        "n": Key(_int, 100_000, _at_least(1)),
        "b": Key(_int, 200, _at_least(2)),
        "q": Key(_float, 0.3, _unit_open),
        "h_min_frac": Key(_float, 0.01, _positive),
        "realizations": Key(_int, 100, _at_least(1)),
        "n_offsets": Key(_int, 20, _at_least(2)),
        "offset_lo_frac": Key(_float, 0.01, _positive),
        "offset_hi_frac": Key(_float, 1.0, _positive),
    },
}


@dataclass(frozen=True)
class RunConfig:
    command: str
    values: dict = field(default_factory=dict)

    def __getitem__(self, key):
        return self.values[key]

    def get(self, key, default=None):
        return self.values.get(key, default)


def parse_kv_file(path) -> dict:
    """Read a flat key=value file; '#' starts a comment, blank lines skipped."""
    raw = {}
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, 1):
            text = line.split("#", 1)[0].strip()
            if not text:
                continue
            if "=" not in text:
                raise TypeMismatchError(f"line {line_no}", "expected key=value")
            key, value = text.split("=", 1)
            raw[key.strip()] = value.strip()
    return raw


def parse_config(command: str, path=None, overrides=None) -> RunConfig:
    """Build a validated RunConfig; explicit overrides beat file values."""
    if command not in SCHEMAS:
        raise UnknownKeyError("command", f"unknown command {command!r}")
    schema = SCHEMAS[command]
    raw = {}
    if path is not None:
        for key, value in parse_kv_file(path).items():
            if key not in schema:
                raise UnknownKeyError(key, "not a valid key for this command")
            raw[key] = value
    for key, value in (overrides or {}).items():
        if value is None:
            continue
        if key not in schema:
            raise UnknownKeyError(key, "not a valid key for this command")
        raw[key] = value
    values = {}
    for key, spec in schema.items():
        if key in raw:
            try:
                value = raw[key] if not isinstance(raw[key], str) else spec.parse(raw[key])
            except (ValueError, TypeError) as exc:
                raise TypeMismatchError(key, str(exc)) from exc
        elif spec.default is _REQUIRED:
            raise RangeViolationError(key, "required key is missing")
        else:
            value = spec.default
        if spec.check is not None and value is not None and not spec.check(value):
            raise RangeViolationError(key, f"value {value!r} is out of range")
        values[key] = value
    return RunConfig(command, values)
