"""Stein equation for the standard exponential target.

The characterising operator is ``Af(w) = f'(w) - f(w)``; the bounded solution of
``f' - f = h - E h(Z)`` with ``f(0) = 0`` is

    f(w) = -e^w int_w^inf (h(x) - E h(Z)) e^{-x} dx.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import integrate

from .distributions import Distribution, Exponential
from .errors import InvalidParams, QuadratureDivergence

GENERIC, INDICATOR, SMOOTHED = "generic-quadrature", "indicator-closed-form", "smoothed"
W_POINTS = 1000
T_POINTS = 81
CHECK_TOL = 1e-7


def h_smoothed(a: float, eps: float, x):
    """``eps^-1 int_0^eps I[x + s <= a] ds``; the plain indicator ``I[x <= a]`` when ``eps = 0``."""
    if eps < 0:
        raise InvalidParams("eps must be >= 0")
    x = np.asarray(x, dtype=float)
    if eps == 0:
        out = (x <= a).astype(float)
    else:
        out = np.clip((a - x) / eps, 0.0, 1.0)
    return float(out) if out.ndim == 0 else out


def h_smoothed_mean(a: float, eps: float, dist: Distribution | None = None) -> float:
    """``E h_{a,eps}(X)``; Exp(1) by default.

    Uses ``E h_{a,eps}(X) = eps^-1 int_{a-eps}^a F(y) dy`` and
    ``int_0^x F = x - EX + E(X - x)^+``.
    """
    dist = dist or Exponential(1.0)
    if eps == 0:
        return float(dist.cdf(a))
    m = dist.mean

    def prim(x):
        return 0.0 if x <= 0 else x - m + float(dist.stop_loss(x))

    return (prim(a) - prim(a - eps)) / eps


@dataclass(frozen=True)
class SteinSolution:
    h: Callable
    h_mean_under_exp: float
    eval_f: Callable
    eval_f_prime: Callable
    kind: str
    params: dict = field(default_factory=dict)


def _quad_f(h, h_mean, w, points):
    """``-int_0^inf (h(w + t) - h_mean) e^{-t} dt``."""
    g = lambda t: (h(w + t) - h_mean) * math.exp(-t)
    inner = sorted(p - w for p in points if p > w)
    edges = [0.0] + inner
    total = 0.0
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            for lo, hi in zip(edges[:-1], edges[1:]):
                total += integrate.quad(g, lo, hi, epsabs=1e-11, epsrel=1e-10, limit=200)[0]
            total += integrate.quad(g, edges[-1], np.inf, epsabs=1e-11, epsrel=1e-10, limit=200)[0]
        except (integrate.IntegrationWarning, OverflowError) as exc:
            raise QuadratureDivergence(f"Stein solution integral did not converge at w={w}") from exc
    if not math.isfinite(total):
        raise QuadratureDivergence(f"Stein solution integral diverged at w={w}")
    return -total


def solve_stein(h: Callable[[float], float], h_mean: float | None = None,
                breakpoints: Sequence[float] = ()) -> SteinSolution:
    """Solution of ``f' - f = h - E h(Z)`` by adaptive quadrature.

    ``breakpoints`` lists points where ``h`` is not smooth; they are passed to
    the integrator as interval edges.
    """
    pts = tuple(float(p) for p in breakpoints)
    if h_mean is None:
        h_mean = -_quad_f(h, 0.0, 0.0, pts)
    h_mean = float(h_mean)

    def f(w):
        w = np.asarray(w, dtype=float)
        out = np.array([_quad_f(h, h_mean, float(x), pts) for x in w.ravel()]).reshape(w.shape)
        return float(out) if out.ndim == 0 else out

    def fp(w):
        w = np.asarray(w, dtype=float)
        hv = np.array([h(float(x)) for x in w.ravel()]).reshape(w.shape)
        out = np.asarray(f(w)) + hv - h_mean
        return float(out) if out.ndim == 0 else out

    return SteinSolution(h, h_mean, f, fp, GENERIC)


def f_exact_indicator(a: float, x):
    """Closed-form solution for ``h = I[. <= a]``: ``((e^{x-a} ^ 1) - e^{-a}, e^{x-a} I[x <= a])``."""
    x = np.asarray(x, dtype=float)
    e = np.exp(np.minimum(x - a, 0.0))
    f = e - math.exp(-a)
    fp = np.where(x <= a, np.exp(np.minimum(x - a, 0.0)), 0.0)
    if f.ndim == 0:
        return float(f), float(fp)
    return f, fp


def _indicator_antiderivative(a, y):
    # int_0^y f_{a,0} up to a constant
    return np.exp(np.minimum(y, a) - a) + np.maximum(y - a, 0.0) - math.exp(-a) * y


def smoothed_solution(a: float, eps: float) -> SteinSolution:
    """Closed-form solution for ``h_{a,eps}``.

    Averaging ``f_{a,0}`` over ``[x, x + eps]`` solves the equation up to an
    additive constant; subtracting its value at 0 gives the bounded solution.
    """
    if a <= 0:
        raise InvalidParams("a must be > 0")
    if eps < 0:
        raise InvalidParams("eps must be >= 0")
    h = lambda x: h_smoothed(a, eps, x)
    mean = h_smoothed_mean(a, eps)
    if eps == 0:
        f = lambda w: f_exact_indicator(a, w)[0]
        fp = lambda w: f_exact_indicator(a, w)[1]
        return SteinSolution(h, mean, f, fp, INDICATOR, {"a": a})

    def avg(w):
        w = np.asarray(w, dtype=float)
        return (_indicator_antiderivative(a, w + eps) - _indicator_antiderivative(a, w)) / eps

    shift = float(avg(0.0))

    def f(w):
        out = avg(w) - shift
        return float(out) if np.ndim(out) == 0 else out

    def fp(w):
        w = np.asarray(w, dtype=float)
        out = (f_exact_indicator(a, w + eps)[0] - f_exact_indicator(a, w)[0]) / eps
        return float(out) if np.ndim(out) == 0 else out

    return SteinSolution(h, mean, f, fp, SMOOTHED, {"a": a, "eps": eps})


# ---------------------------------------------------------------------------
# numerical checks of the solution bounds


@dataclass(frozen=True)
class BoundCheck:
    a: float
    eps: float
    bound: str
    max_lhs: float
    rhs: float | str
    slack: float | None
    passed: bool | None  # None: not applicable

    def as_row(self):
        return {"a": self.a, "eps": self.eps, "bound": self.bound, "max_lhs": self.max_lhs,
                "rhs": self.rhs, "slack": self.slack,
                "status": "n/a" if self.passed is None else ("pass" if self.passed else "fail")}


def _interval_overlap(lo, hi, a, b):
    return np.maximum(0.0, np.minimum(hi, b) - np.maximum(lo, a))


def check_solution(a: float, eps: float, tol: float = CHECK_TOL) -> list[BoundCheck]:
    sol = smoothed_solution(a, eps)
    w = np.linspace(0.0, a + 10.0, W_POINTS)
    t = np.linspace(-2.0, 2.0, T_POINTS)
    f, fp = np.asarray(sol.eval_f(w)), np.asarray(sol.eval_f_prime(w))
    ww, tt = np.meshgrid(w, t, indexing="ij")
    wt = ww + tt
    ok = wt >= 0.0
    wt_c = np.where(ok, wt, 0.0)
    df = np.abs(np.asarray(sol.eval_f(wt_c)) - f[:, None])[ok]
    dfp = np.abs(np.asarray(sol.eval_f_prime(wt_c)) - fp[:, None])[ok]
    out = []

    def add(name, lhs, rhs):
        out.append(BoundCheck(a, eps, name, float(lhs), float(rhs), float(rhs - lhs), bool(lhs <= rhs + tol)))

    add("sup|f|<=1", np.max(np.abs(f)), 1.0)
    add("sup|f'|<=1", np.max(np.abs(fp)), 1.0)
    add("|f(w+t)-f(w)|<=1", df.max(), 1.0)
    add("|f'(w+t)-f'(w)|<=1", dfp.max(), 1.0)
    name = "|f'(w+t)-f'(w)|<=(|t|^1)+overlap/eps"
    if eps > 0:
        lo, hi = np.minimum(ww, wt), np.maximum(ww, wt)
        rhs = (np.minimum(np.abs(tt), 1.0) + _interval_overlap(lo, hi, a - eps, a) / eps)[ok]
        excess = dfp - rhs
        i = int(np.argmax(excess))
        out.append(BoundCheck(a, eps, name, float(dfp[i]), float(rhs[i]), float(rhs[i] - dfp[i]),
                              bool(excess[i] <= tol)))
    else:
        out.append(BoundCheck(a, eps, name, float("nan"), "n/a", None, None))
    # bounded-h bounds: ||f|| <= ||h||, ||f'|| <= 2||h||, with ||h|| = 1
    add("sup|f|<=sup|h|", np.max(np.abs(f)), 1.0)
    add("sup|f'|<=2sup|h|", np.max(np.abs(fp)), 2.0)
    return out


def verify_solution_bounds(a_grid: Sequence[float], eps_grid: Sequence[float],
                           tol: float = CHECK_TOL) -> list[BoundCheck]:
    """Check the sup-norm and increment bounds of ``f_{a,eps}`` for every grid pair."""
    if not len(a_grid) or not len(eps_grid):
        raise InvalidParams("a_grid and eps_grid must be nonempty")
    rows = []
    for a in a_grid:
        if a <= 0:
            raise InvalidParams("a must be > 0")
        for eps in eps_grid:
            if eps < 0:
                raise InvalidParams("eps must be >= 0")
            rows.extend(check_solution(float(a), float(eps), tol))
    return rows


def lipschitz_check(sol: SteinSolution, lip: float, w: np.ndarray | None = None,
                    step: float = 1e-4, tol: float = CHECK_TOL) -> dict:
    """Slacks of ``|f(w)| <= (1+w) L``, ``||f'|| <= L`` and ``||f''|| <= 2L`` (central differences)."""
    w = np.linspace(step, 20.0, W_POINTS) if w is None else np.asarray(w, dtype=float)
    f = np.asarray(sol.eval_f(w))
    fp = np.asarray(sol.eval_f_prime(w))
    fpp = (np.asarray(sol.eval_f_prime(w + step)) - np.asarray(sol.eval_f_prime(w - step))) / (2 * step)
    slack = {
        "f": float(np.min((1 + w) * lip - np.abs(f))),
        "f'": float(lip - np.max(np.abs(fp))),
        "f''": float(2 * lip - np.max(np.abs(fpp))),
    }
    return {k: (v, v >= -tol) for k, v in slack.items()}


# ---------------------------------------------------------------------------
# smoothing and concentration


def smoothing_bound(dist: Distribution, eps: float, a_grid: np.ndarray | None = None) -> float:
    """``eps + sup_a |E h_{a,eps}(W) - E h_{a,eps}(Z)|`` over an ``a`` grid (200 points on ``[0, 20]``)."""
    if eps <= 0:
        raise InvalidParams("eps must be > 0")
    a_grid = np.linspace(0.0, 20.0, 200)[1:] if a_grid is None else a_grid
    diff = [abs(h_smoothed_mean(a, eps, dist) - h_smoothed_mean(a, eps)) for a in a_grid]
    return eps + max(diff)


def concentration_bound(a: float, b: float, dk: float) -> float:
    """Upper bound ``(b - a) + 2 dK`` on ``P[a <= V <= b]``."""
    return (b - a) + 2.0 * dk
