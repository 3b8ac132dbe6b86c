"""Exception hierarchy shared by all modules."""


class ExpSteinError(Exception):
    """Base class; ``code`` is a short machine-readable tag."""

    code = "error"


class InvalidParams(ExpSteinError, ValueError):
    code = "invalid-params"


class UnknownFamily(ExpSteinError, ValueError):
    code = "unknown-family"


class DivergentMoment(ExpSteinError, ArithmeticError):
    code = "divergent-moment"


class DivergentIntegral(ExpSteinError, ArithmeticError):
    code = "divergent-integral"


class EmptySample(ExpSteinError, ValueError):
    code = "empty-sample"


class ZeroMean(ExpSteinError, ValueError):
    code = "zero-mean"


class UnsupportedFamily(ExpSteinError, TypeError):
    code = "unsupported-family"


class ZeroTail(ExpSteinError, ValueError):
    code = "zero-tail"


class NotMonotoneOrderable(ExpSteinError, ValueError):
    code = "not-monotone-orderable"


class QuadratureDivergence(ExpSteinError, ArithmeticError):
    code = "quadrature-divergence"


class InsufficientInputs(ExpSteinError, ValueError):
    code = "insufficient-inputs"


class MissingThresholds(ExpSteinError, ValueError):
    code = "missing-thresholds"


class EmptyInput(ExpSteinError, ValueError):
    code = "empty-input"


class ReducibleChain(ExpSteinError, ValueError):
    code = "reducible-chain"


class NoConvergence(ExpSteinError, ArithmeticError):
    code = "no-convergence"


class ExtinctionOnly(ExpSteinError, ValueError):
    code = "extinction-only"


class PopulationOverflow(ExpSteinError, OverflowError):
    code = "population-overflow"


class TruncationOverflow(ExpSteinError, OverflowError):
    code = "truncation-overflow"


class ConfigError(ExpSteinError, ValueError):
    code = "config-parse-error"
