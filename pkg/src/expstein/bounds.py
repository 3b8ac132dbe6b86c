"""Explicit error bounds for exponential approximation.

Each function turns a handful of supplied statistics into ``BoundReport``
records.  A report keeps the named terms it was built from, and
``recompute(report)`` re-applies the registered formula to those terms, so
every value can be audited after serialisation.
"""
from __future__ import annotations

import inspect
import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import EmptyInput, InsufficientInputs, InvalidParams, MissingThresholds
from .metrics import DK, DW

EQUILIBRIUM = "equilibrium-coupling"
STEIN_COUPLING = "stein-coupling"
RANDOM_SUM = "random-sum"
RANDOM_SUM_NBUE = "random-sum-nbue"
LOCAL_DEPENDENCE = "local-dependence"
HITTING_TIME = "hitting-time"
PATTERN = "pattern"
NBUE = "nbue"
BOUND_IDS = (EQUILIBRIUM, STEIN_COUPLING, RANDOM_SUM, RANDOM_SUM_NBUE, LOCAL_DEPENDENCE,
             HITTING_TIME, PATTERN, NBUE)

W, WE = "W", "W^e"
R2_BINS = 64


@dataclass(frozen=True)
class BoundReport:
    bound_id: str
    formula: str  # key into FORMULAS
    target: str  # "W" or "W^e"
    metric: str
    value: float
    terms: dict
    inputs: dict = field(default_factory=dict)

    def as_dict(self):
        return asdict(self)


# formula key -> (metric, raw formula over the terms map)
FORMULAS: dict[str, tuple[str, Callable[[dict], float]]] = {}


def _formula(key, metric):
    def deco(fn):
        FORMULAS[key] = (metric, fn)
        return fn
    return deco


def _finish(metric, raw):
    raw = float(raw)
    return min(1.0, raw) if metric == DK else raw


def recompute(report: BoundReport) -> float:
    metric, fn = FORMULAS[report.formula]
    return _finish(metric, fn(report.terms))


def _report(bound_id, key, target, terms, inputs):
    metric, fn = FORMULAS[key]
    terms = {k: float(v) for k, v in terms.items()}
    return BoundReport(bound_id, key, target, metric, _finish(metric, fn(terms)), terms, dict(inputs))


def _nonneg(**kw):
    for k, v in kw.items():
        if v is not None and not (v >= 0):
            raise InvalidParams(f"{k} must be >= 0, got {v}")


# ---------------------------------------------------------------------------
# equilibrium coupling


@_formula("eq-dK-W", DK)
def _eq_dk_w(t):
    return 12.0 * t["beta"] + 2.0 * t["p_exceed"]


@_formula("eq-dK-We", DK)
def _eq_dk_we(t):
    return t["beta"] + t["p_exceed"]


@_formula("eq-dW-W", DW)
def _eq_dw_w(t):
    return 2.0 * t["e_abs_diff"]


@_formula("eq-dK-We-mean", DK)
def _eq_dk_we_mean(t):
    return t["e_abs_diff"]


@_formula("eq-dW-We", DW)
def _eq_dw_we(t):
    return t["e_abs_diff"]


def equilibrium_bounds(e_abs_diff: float | None = None, beta: float | None = None,
                       p_exceed: float | None = None) -> list[BoundReport]:
    """Bounds from a coupling of ``W`` (mean one) with its equilibrium law ``W^e``.

    ``e_abs_diff = E|W^e - W|``; ``p_exceed = P[|W^e - W| > beta]``.
    """
    _nonneg(e_abs_diff=e_abs_diff, beta=beta, p_exceed=p_exceed)
    have_tail = beta is not None and p_exceed is not None
    if e_abs_diff is None and not have_tail:
        raise InsufficientInputs("need e_abs_diff, or both beta and p_exceed")
    inputs = {"e_abs_diff": e_abs_diff, "beta": beta, "p_exceed": p_exceed}
    out = []
    if have_tail:
        t = {"beta": beta, "p_exceed": p_exceed}
        out.append(_report(EQUILIBRIUM, "eq-dK-W", W, t, inputs))
        out.append(_report(EQUILIBRIUM, "eq-dK-We", WE, t, inputs))
    if e_abs_diff is not None:
        t = {"e_abs_diff": e_abs_diff}
        out.append(_report(EQUILIBRIUM, "eq-dW-W", W, t, inputs))
        out.append(_report(EQUILIBRIUM, "eq-dK-We-mean", WE, t, inputs))
        out.append(_report(EQUILIBRIUM, "eq-dW-We", WE, t, inputs))
    return out


# ---------------------------------------------------------------------------
# Stein couplings (W, W', W'', G)


@dataclass(frozen=True)
class RTerms:
    r1: float = 0.0
    r2: float = 0.0
    r3: float = 0.0
    r3p: float = 0.0
    r4: float = 0.0
    r4p: float = 0.0
    r5: float = 0.0
    r5p: float = 0.0
    alpha: float | None = None
    beta: float | None = None
    beta_p: float | None = None
    stderr: dict = field(default_factory=dict)
    n: int | None = None

    def __post_init__(self):
        for k in ("r1", "r2", "r3", "r3p", "r4", "r4p", "r5", "r5p", "alpha", "beta", "beta_p"):
            v = getattr(self, k)
            if v is not None and not v >= 0:
                raise InvalidParams(f"{k} must be >= 0, got {v}")

    @property
    def has_thresholds(self):
        return None not in (self.alpha, self.beta, self.beta_p)


@_formula("sc-dW", DW)
def _sc_dw(t):
    return t["r1"] + t["r2"] + 2 * t["r3"] + 2 * t["r3p"] + 2 * t["r4"] + 2 * t["r4p"]


@_formula("sc-dK", DK)
def _sc_dk(t):
    a, b, bp = t["alpha"], t["beta"], t["beta_p"]
    return (2 * t["r1"] + 2 * t["r2"] + 2 * t["r5"] + 2 * t["r5p"]
            + 22 * (a * b + 1) * bp + 12 * a * b * b)


def stein_coupling_bounds(r: RTerms, metrics: Sequence[str] | None = None) -> list[BoundReport]:
    """Wasserstein and Kolmogorov bounds from estimated coupling error terms.

    With ``metrics=None`` the Kolmogorov bound is included only when the
    thresholds ``alpha, beta, beta_p`` are present.
    """
    want = list(metrics) if metrics is not None else ([DW, DK] if r.has_thresholds else [DW])
    inputs = {k: v for k, v in asdict(r).items() if k not in ("stderr",)}
    out = []
    for m in want:
        if m == DW:
            keys = ("r1", "r2", "r3", "r3p", "r4", "r4p")
            out.append(_report(STEIN_COUPLING, "sc-dW", W, {k: getattr(r, k) for k in keys}, inputs))
        elif m == DK:
            if not r.has_thresholds:
                raise MissingThresholds("the Kolmogorov bound needs alpha, beta and beta_p")
            keys = ("r1", "r2", "r5", "r5p", "alpha", "beta", "beta_p")
            out.append(_report(STEIN_COUPLING, "sc-dK", W, {k: getattr(r, k) for k in keys}, inputs))
        else:
            raise InvalidParams(f"unknown metric {m!r}")
    return out


def _conditional_means(key: np.ndarray, vals: np.ndarray, bins: int) -> np.ndarray:
    """Per-sample estimate of ``E(vals | key)``: exact groups when ``key`` has few values, else equal-count bins."""
    uniq, inv = np.unique(key, return_inverse=True)
    if uniq.size <= bins:
        sums = np.bincount(inv, weights=vals)
        counts = np.bincount(inv)
        return (sums / counts)[inv]
    order = np.argsort(key, kind="stable")
    out = np.empty_like(vals)
    for idx in np.array_split(order, bins):
        out[idx] = np.mean(vals[idx])
    return out


def _mean_se(x):
    x = np.asarray(x, dtype=float)
    se = float(np.std(x, ddof=1) / math.sqrt(x.size)) if x.size > 1 else float("nan")
    return float(math.fsum(x) / x.size), se


def estimate_r_terms(tuples, alpha: float | None = None, beta: float | None = None,
                     beta_p: float | None = None, r1: float = 0.0, bins: int = R2_BINS) -> RTerms:
    """Monte Carlo estimates of the coupling error terms.

    ``tuples`` is an ``(n, 4)`` array-like of ``(w, w', w'', g)`` rows.  With
    ``D = w' - w`` and ``D' = w'' - w`` the estimates are sample means of the
    defining expressions; ``E(GD | W'')`` is estimated by grouping on ``w''``.
    """
    arr = np.asarray(tuples, dtype=float)
    if arr.size == 0:
        raise EmptyInput("no coupling tuples")
    if arr.ndim != 2 or arr.shape[1] != 4:
        raise InvalidParams("tuples must have shape (n, 4): w, w', w'', g")
    w, w1, w2, g = arr.T
    d, dp = w1 - w, w2 - w
    gd = g * d
    cond = _conditional_means(w2, gd, bins)
    est = {
        "r2": np.abs(cond - 1.0),
        "r3": np.abs(gd * (np.abs(d) > 1)),
        "r3p": np.abs((gd - 1.0) * (np.abs(dp) > 1)),
        "r4": np.abs(g * np.minimum(d * d, 1.0)),
        "r4p": np.abs((gd - 1.0) * np.minimum(np.abs(dp), 1.0)),
    }
    have = None not in (alpha, beta, beta_p)
    if have:
        out1 = (np.abs(g) > alpha) | (np.abs(d) > beta)
        est["r5"] = np.abs(gd * out1)
        est["r5p"] = np.abs((1.0 - gd) * (out1 | (np.abs(dp) > beta_p)))
    vals, se = {}, {}
    for k, v in est.items():
        vals[k], se[k] = _mean_se(v)
    return RTerms(r1=float(r1), alpha=alpha, beta=beta, beta_p=beta_p, stderr=se, n=int(w.size), **vals)


# ---------------------------------------------------------------------------
# random sums


@_formula("rs-dW", DW)
def _rs_dw(t):
    return 2.0 / t["mu"] * (t["e_x_gap"] + t["sup_mu_i"] * t["e_nm_gap"])


@_formula("rs-dK", DK)
def _rs_dk(t):
    return 12.0 / t["mu"] * (t["quantile_gap"] + t["CK"])


def random_sum_bounds(mu: float, sup_mu_i: float, e_x_gap: float, e_nm_gap: float,
                      quantile_gap: float | None = None, C: float | None = None,
                      K: float | None = None) -> list[BoundReport]:
    """Bounds for ``W = mu^-1 sum_{i <= N} X_i``.

    ``e_x_gap = E|X_M - X_M^e|``, ``e_nm_gap = E|N - M|``, ``quantile_gap =
    sup_i ||F_{X_i}^-1 - F_{X_i^e}^-1||``; ``C`` bounds the summands and ``K``
    bounds ``|N - M|``.  With ``K = 0`` no summand bound is needed.
    """
    if not mu > 0:
        raise InvalidParams("mu must be > 0")
    _nonneg(sup_mu_i=sup_mu_i, e_x_gap=e_x_gap, e_nm_gap=e_nm_gap, quantile_gap=quantile_gap, C=C, K=K)
    inputs = dict(mu=mu, sup_mu_i=sup_mu_i, e_x_gap=e_x_gap, e_nm_gap=e_nm_gap,
                  quantile_gap=quantile_gap, C=C, K=K)
    out = [_report(RANDOM_SUM, "rs-dW", W, dict(mu=mu, sup_mu_i=sup_mu_i, e_x_gap=e_x_gap,
                                                 e_nm_gap=e_nm_gap), inputs)]
    if quantile_gap is not None:
        if K is None:
            raise InsufficientInputs("the Kolmogorov bound needs K (and C unless K = 0)")
        if K == 0:
            ck = 0.0
        elif C is None or not math.isfinite(C):
            raise InsufficientInputs("K > 0 needs a finite summand bound C")
        else:
            ck = C * K
        out.append(_report(RANDOM_SUM, "rs-dK", W, dict(mu=mu, quantile_gap=quantile_gap, CK=ck), inputs))
    return out


@_formula("rs-nbue-dW", DW)
def _rs_nbue(t):
    mu = t["mu"]
    return 2.0 / mu * t["sup_half_m2_gap"] + 2.0 * abs(t["e_n2"] / (2 * mu * mu) + 1 / (2 * mu) - 1)


def random_sum_nbue_bound(mu: float, sup_half_m2_gap: float, e_n2: float) -> BoundReport:
    """Wasserstein bound when the summands have mean one and all laws are NBUE or NWUE.

    ``sup_half_m2_gap = sup_i |E X_i^2 / 2 - 1|``; ``e_n2 = E N^2``.
    """
    if not mu > 0:
        raise InvalidParams("mu must be > 0")
    _nonneg(sup_half_m2_gap=sup_half_m2_gap, e_n2=e_n2)
    t = dict(mu=mu, sup_half_m2_gap=sup_half_m2_gap, e_n2=e_n2)
    return _report(RANDOM_SUM_NBUE, "rs-nbue-dW", W, t, t)


# ---------------------------------------------------------------------------
# locally dependent sums with an atom at zero


@_formula("ld-dK", DK)
def _ld_dk(t):
    p, mu = t["p"], t["mu"]
    q = 1.0 - p
    c, k1, k2 = t["C"], t["K1"], t["K2"]
    return q * t["s"] / (p * mu) + 22 * c * k2 / mu + 2 * c * c * k1 * (11 * k2 + 6 * k1) / (p * mu * mu)


@_formula("ld-dW", DW)
def _ld_dw(t):
    p, mu = t["p"], t["mu"]
    q = 1.0 - p
    return q * t["s"] / (p * mu) + 4 * q * t["e_forward_prod"] / (p * mu * mu) + 4 * t["e_backward"] / mu


def local_dependence_bounds(p: float, mu: float, s: float, C: float, K1: float, K2: float,
                            dw_terms: dict | None = None) -> list[BoundReport]:
    """Bounds for ``W = S(0, N) / mu`` with ``P[N = 0] = p`` and ``N'' <= N <= N'``.

    ``s`` is the standard deviation of ``E(S(N, N') | X_1..X_{N''})``; ``C``,
    ``K1``, ``K2`` bound ``X_i``, ``N' - N`` and ``N - N''``.  ``dw_terms`` may
    supply ``e_forward_prod = E{S(N,N')(1 + S(N'',N))}`` and
    ``e_backward = E S(N'',N)`` for the Wasserstein bound.
    """
    if not 0 < p < 1:
        raise InvalidParams("p must lie in (0, 1)")
    if not mu > 0:
        raise InvalidParams("mu must be > 0")
    _nonneg(s=s, C=C, K1=K1, K2=K2)
    inputs = dict(p=p, mu=mu, s=s, C=C, K1=K1, K2=K2, dw_terms=dw_terms)
    out = [_report(LOCAL_DEPENDENCE, "ld-dK", W, dict(p=p, mu=mu, s=s, C=C, K1=K1, K2=K2), inputs)]
    if dw_terms is not None:
        try:
            t = dict(p=p, mu=mu, s=s, e_forward_prod=dw_terms["e_forward_prod"],
                     e_backward=dw_terms["e_backward"])
        except KeyError as exc:
            raise InsufficientInputs(f"dw_terms missing {exc.args[0]}") from exc
        out.append(_report(LOCAL_DEPENDENCE, "ld-dW", W, t, inputs))
    return out


# ---------------------------------------------------------------------------
# hitting times of Markov chains


@_formula("ht-renewal-gap", DK)
def _ht_gap(t):
    return 1.5 * t["pi_i"] + t["pi_i"] * t["e_abs_gap"]


@_formula("ht-mismatch-prob", DK)
def _ht_mismatch(t):
    return 2 * t["pi_i"] + t["p_mismatch"]


@_formula("ht-stationary-time", DK)
def _ht_stat(t):
    return t["pi_i"] * (1.5 + t["e_t_i_pi"] + t["rho"] * t["sup_e_t_j_i"])


@_formula("ht-mixing-sum", DK)
def _ht_mix(t):
    return 2 * t["pi_i"] + t["diag_sum"]


HITTING_VARIANTS = {
    "renewal-gap": ("ht-renewal-gap", ("pi_i", "e_abs_gap")),
    "mismatch-prob": ("ht-mismatch-prob", ("pi_i", "p_mismatch")),
    "stationary-time": ("ht-stationary-time", ("pi_i", "e_t_i_pi", "rho", "sup_e_t_j_i")),
    "mixing-sum": ("ht-mixing-sum", ("pi_i", "diag_sum")),
}


def hitting_time_bounds(variant: str, **inputs) -> BoundReport:
    """Kolmogorov bound for ``pi_i T_{pi,i}``, the scaled hitting time of state ``i`` from stationarity.

    Variants and their inputs: ``renewal-gap`` (``pi_i, e_abs_gap``),
    ``mismatch-prob`` (``pi_i, p_mismatch``), ``stationary-time``
    (``pi_i, e_t_i_pi, rho, sup_e_t_j_i``), ``mixing-sum`` (``pi_i, diag_sum``).
    """
    if variant not in HITTING_VARIANTS:
        raise InvalidParams(f"unknown hitting-time variant {variant!r}")
    key, need = HITTING_VARIANTS[variant]
    missing = [k for k in need if inputs.get(k) is None]
    if missing:
        raise InsufficientInputs(f"{variant} needs {', '.join(missing)}")
    t = {k: inputs[k] for k in need}
    _nonneg(**t)
    if t["pi_i"] > 1:
        raise InvalidParams("pi_i must be a probability")
    return _report(HITTING_TIME, key, W, t, {"variant": variant, **t})


# ---------------------------------------------------------------------------
# coin-flip patterns


@_formula("pattern-head-run", DK)
def _pat_run(t):
    return (t["k"] + 2) * t["p"] ** t["k"]


@_formula("pattern-non-overlapping", DK)
def _pat_no(t):
    return t["pi_i"] * (t["k"] + 1)


def pattern_probability(pattern: str, p: float) -> float:
    """Probability of a fixed ``H``/``T`` word when heads has probability ``p``."""
    if not pattern or set(pattern) - {"H", "T"}:
        raise InvalidParams("pattern must be a nonempty word over H/T")
    return p ** pattern.count("H") * (1 - p) ** pattern.count("T")


def pattern_bounds(p: float, k: int, kind: str, pi_i: float | None = None,
                   pattern: str | None = None) -> BoundReport:
    """Kolmogorov bounds for pattern waiting times.

    ``head-run``: ``q p^k T`` with ``T`` the flips before the start of the
    first run of ``k`` heads (heads probability ``p``).  ``non-overlapping``:
    ``pi_i T`` for a pattern of length ``k`` that cannot overlap itself;
    ``pi_i`` is the pattern probability (or derived from ``pattern``).
    """
    if not 0 < p < 1:
        raise InvalidParams("p must lie in (0, 1)")
    if int(k) != k or k < 1:
        raise InvalidParams("k must be a positive integer")
    k = int(k)
    if kind == "head-run":
        t = {"p": p, "k": k}
        return _report(PATTERN, "pattern-head-run", W, t, {"kind": kind, **t})
    if kind == "non-overlapping":
        if pi_i is None:
            if pattern is None:
                raise InsufficientInputs("non-overlapping needs pi_i or the pattern")
            if len(pattern) != k:
                raise InvalidParams("pattern length must equal k")
            pi_i = pattern_probability(pattern, p)
        t = {"pi_i": pi_i, "k": k}
        return _report(PATTERN, "pattern-non-overlapping", W, t,
                       {"kind": kind, "p": p, "pattern": pattern, **t})
    raise InvalidParams(f"unknown pattern kind {kind!r}")


# ---------------------------------------------------------------------------
# NBUE / NWUE laws with mean one


@_formula("nbue-dW-W", DW)
def _nbue_dw(t):
    return 2 * t["rho"]


@_formula("nbue-dK-W", DK)
def _nbue_dk(t):
    return 2.47 * math.sqrt(t["rho"])


@_formula("nbue-dW-We", DW)
def _nbue_dw_e(t):
    return t["rho"]


@_formula("nbue-dK-We", DK)
def _nbue_dk_e(t):
    return t["rho"]


def nbue_bounds(second_moment: float) -> list[BoundReport]:
    """Bounds for a mean-one NBUE or NWUE law from its second moment, with ``rho = |E W^2 / 2 - 1|``."""
    _nonneg(second_moment=second_moment)
    rho = abs(second_moment / 2.0 - 1.0)
    t = {"rho": rho}
    inputs = {"second_moment": second_moment}
    return [_report(NBUE, "nbue-dW-W", W, t, inputs),
            _report(NBUE, "nbue-dK-W", W, t, inputs),
            _report(NBUE, "nbue-dW-We", WE, t, inputs),
            _report(NBUE, "nbue-dK-We", WE, t, inputs)]


# ---------------------------------------------------------------------------


def _call(fn, inputs: dict):
    """Call ``fn(**inputs)``, reporting unknown or missing keywords as invalid params."""
    try:
        inspect.signature(fn).bind(**inputs)
    except TypeError as exc:
        names = ", ".join(inspect.signature(fn).parameters)
        raise InvalidParams(f"{exc}; accepted inputs: {names}") from None
    return fn(**inputs)


def compute(bound_id: str, inputs: dict) -> list[BoundReport]:
    """Dispatch by identifier; ``inputs`` holds the keyword arguments of the matching function."""
    inputs = dict(inputs)
    if bound_id == EQUILIBRIUM:
        return _call(equilibrium_bounds, inputs)
    if bound_id == STEIN_COUPLING:
        metrics = inputs.pop("metrics", None)
        return stein_coupling_bounds(_call(RTerms, inputs), metrics)
    if bound_id == RANDOM_SUM:
        return _call(random_sum_bounds, inputs)
    if bound_id == RANDOM_SUM_NBUE:
        return [_call(random_sum_nbue_bound, inputs)]
    if bound_id == LOCAL_DEPENDENCE:
        return _call(local_dependence_bounds, inputs)
    if bound_id == HITTING_TIME:
        return [_call(hitting_time_bounds, inputs)]
    if bound_id == PATTERN:
        return [_call(pattern_bounds, inputs)]
    if bound_id == NBUE:
        return _call(nbue_bounds, inputs)
    raise InvalidParams(f"unknown bound id {bound_id!r}; choose from {', '.join(BOUND_IDS)}")


def best_tail_bound(diff: np.ndarray, betas: Iterable[float] | None = None) -> tuple[float, float, float]:
    """Grid search of ``12 beta + 2 P[|diff| > beta]`` over ``betas``; returns ``(value, beta, p_exceed)``."""
    diff = np.sort(np.abs(np.asarray(diff, dtype=float)))
    if diff.size == 0:
        raise EmptyInput("no coupling differences")
    if betas is None:
        betas = np.unique(np.concatenate([np.geomspace(1e-4, 1.0, 200), diff[diff <= 1.0][:: max(1, diff.size // 500)]]))
    best = (math.inf, math.nan, math.nan)
    for b in betas:
        pe = 1.0 - np.searchsorted(diff, b, side="right") / diff.size
        v = 12 * b + 2 * pe
        if v < best[0]:
            best = (float(v), float(b), float(pe))
    return best
