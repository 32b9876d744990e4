"""Exception hierarchy shared across the package.

Every error carries a short machine-readable ``code`` used as the
``status`` field in result rows and CSV output.
"""


class TailwarnError(Exception):
    code = "error"


# ---- map / fixed-point solvers ----

class NoSignChangeError(TailwarnError):
    code = "no_sign_change"


class NoConvergenceError(TailwarnError):
    code = "no_convergence"


class NoIntervalError(TailwarnError):
    code = "no_interval"


class DivergedError(TailwarnError):
    code = "diverged"


# ---- simulation ----

class NonFiniteError(TailwarnError):
    code = "non_finite"


class TooShortError(TailwarnError):
    code = "too_short"


# ---- histograms / densities ----

class DegenerateRangeError(TailwarnError):
    code = "degenerate_range"


class EmptyTailError(TailwarnError):
    code = "empty_tail"


class EmptyWindowError(TailwarnError):
    code = "empty_window"


# ---- fitting ----

class DegenerateFitError(TailwarnError):
    code = "degenerate_fit"


class CollinearBasisError(TailwarnError):
    code = "collinear_basis"


class PositiveLogError(TailwarnError):
    code = "positive_log"


class NonNegativeA2Error(TailwarnError):
    code = "non_negative_a2"


class EmptyIntervalError(TailwarnError):
    code = "empty_interval"


# ---- configuration ----

class ConfigError(TailwarnError):
    code = "config_error"

    def __init__(self, key, message):
        super().__init__(f"{key}: {message}")
        self.key = key


class UnknownKeyError(ConfigError):
    code = "unknown_key"


class TypeMismatchError(ConfigError):
    code = "type_mismatch"


class RangeViolationError(ConfigError):
    code = "range_violation"
