"""Nonnegative one-dimensional laws behind a single interface.

Every law exposes ``cdf``, the left limit ``cdf_left``, ``quantile``, an
inverse-CDF ``sample``, and the stop-loss transform ``stop_loss(x) = E(X-x)^+``.
The stop-loss transform is what the metric and transform code integrate
against, so closed forms are provided wherever they exist.

All evaluation methods accept scalars or arrays and return ``numpy`` values.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Mapping, Sequence

import numpy as np
from scipy import integrate, special, stats

from .errors import DivergentMoment, EmptySample, InvalidParams, UnknownFamily

#: Upper tail mass ignored by every quadrature and enumeration.
TAIL_MASS = 1e-12

CONTINUOUS = "continuous"
LATTICE = "lattice"
FINITE = "finite-pmf"


def _arr(x):
    return np.asarray(x, dtype=float)


def _lattice_floor(y):
    """``floor`` that snaps values within rounding error of an integer up to it."""
    return np.floor(y + 1e-9 * np.maximum(1.0, np.abs(y)))


def _lattice_below(y):
    """Largest integer strictly below ``y``, tolerant of rounding error."""
    return np.ceil(y - 1e-9 * np.maximum(1.0, np.abs(y))) - 1


def _out(values, like):
    """Return a Python float for scalar input, an array otherwise."""
    if np.ndim(like) == 0:
        return float(values)
    return values


class Distribution:
    """Base class for a nonnegative law.

    Subclasses implement ``_cdf``, ``_quantile`` and set ``support_kind``;
    closed-form moments and stop-loss transforms are optional overrides.
    """

    family = "abstract"
    support_kind = CONTINUOUS
    step: float | None = None

    # -- core accessors -------------------------------------------------
    def cdf(self, x):
        x = _arr(x)
        return _out(np.where(x < 0, 0.0, self._cdf(np.maximum(x, 0.0))), x)

    def cdf_left(self, x):
        """``P[X < x]``; equals ``cdf`` for continuous laws."""
        return self.cdf(x)

    def sf(self, x):
        x = _arr(x)
        tail = self._sf(np.maximum(x, 0.0))
        return _out(np.where(x < 0, 1.0, tail), x)

    def _sf(self, x):
        return 1.0 - _arr(self._cdf(x))

    def pmf_at(self, x):
        x = _arr(x)
        return _out(_arr(self.cdf(x)) - _arr(self.cdf_left(x)), x)

    def quantile(self, u):
        """Generalised inverse ``inf{x : F(x) >= u}``; ``u = 0`` gives the support minimum."""
        u = _arr(u)
        if np.any((u < 0) | (u > 1)):
            raise InvalidParams("quantile level outside [0, 1]")
        return _out(self._quantile(u), u)

    def sample(self, rng: np.random.Generator, size=None):
        return self.quantile(rng.random(size))

    # -- moments --------------------------------------------------------
    @property
    def mean(self) -> float:
        return _quadrature_moment(self, 1)

    @property
    def second_moment(self) -> float | None:
        """Stored second moment, ``None`` when only quadrature can supply it."""
        return None

    @property
    def third_moment(self) -> float | None:
        return None

    @property
    def lower(self) -> float:
        return float(self.quantile(0.0))

    @property
    def upper(self) -> float:
        """Truncation point ``quantile(1 - 1e-12)`` used by all quadratures."""
        return float(self.quantile(1.0 - TAIL_MASS))

    # -- stop loss ------------------------------------------------------
    def stop_loss(self, x):
        """``E(X - x)^+``."""
        x = _arr(x)
        neg = self.mean - x
        pos = self._stop_loss(np.maximum(x, 0.0))
        return _out(np.where(x < 0, neg, pos), x)

    def stop_loss2(self, x):
        """``E[((X - x)^+)^2] / 2``, the integral of ``stop_loss`` over ``[x, inf)``."""
        x = _arr(x)
        pos = self._stop_loss2(np.maximum(x, 0.0))
        if np.any(x < 0):
            m2 = moments(self)[1]
            neg = 0.5 * (m2 - 2.0 * x * self.mean + x * x)
            pos = np.where(x < 0, neg, pos)
        return _out(pos, x)

    def _stop_loss(self, x):
        return _numeric_stop_loss(self, x)

    def _stop_loss2(self, x):
        top = self.upper
        f = lambda y: float(self.stop_loss(y))
        vals = [integrate.quad(f, xi, max(top, xi), limit=200, points=None)[0] if xi < top else 0.0
                for xi in np.atleast_1d(x)]
        return np.reshape(np.array(vals), np.shape(x))

    # -- structure ------------------------------------------------------
    def atoms(self, upper: float | None = None) -> np.ndarray:
        """Jump points of the CDF up to ``upper`` (empty for continuous laws)."""
        return np.empty(0)

    def breakpoints(self) -> np.ndarray:
        """Points where a continuous CDF has kinks (support ends)."""
        return np.empty(0)

    @property
    def is_step(self) -> bool:
        return self.support_kind != CONTINUOUS

    def describe(self) -> dict:
        return {"family": self.family}

    def __repr__(self):
        d = self.describe()
        args = ", ".join(f"{k}={v!r}" for k, v in d.items() if k != "family")
        return f"{type(self).__name__}({args})"


def _numeric_stop_loss(dist: Distribution, x):
    """Quadrature of the survival function over ``[x, upper]``."""
    top = dist.upper
    out = []
    for xi in np.atleast_1d(x):
        if dist.is_step:
            # E(X - x)^+ = EX - int_0^x P[X > y] dy, and the survival function is a step
            a = dist.atoms(xi)
            edges = np.concatenate([[0.0], a[a < xi], [xi]])
            surv = np.asarray(dist.sf(edges[:-1]), dtype=float)
            out.append(dist.mean - float(np.dot(surv, np.diff(edges))))
        elif xi >= top:
            out.append(0.0)
        else:
            pts = [p for p in dist.breakpoints() if xi < p < top]
            out.append(integrate.quad(lambda y: float(dist.sf(y)), xi, top, points=pts or None,
                                      limit=200, epsabs=1e-13, epsrel=1e-11)[0])
    return np.reshape(np.array(out), np.shape(x))


class Exponential(Distribution):
    family = "exponential"

    def __init__(self, rate: float = 1.0):
        if not rate > 0:
            raise InvalidParams("exponential rate must be > 0")
        self.rate = float(rate)

    def _cdf(self, x):
        return -np.expm1(-self.rate * x)

    def _sf(self, x):
        return np.exp(-self.rate * x)

    def _quantile(self, u):
        with np.errstate(divide="ignore"):
            return -np.log1p(-u) / self.rate

    @property
    def mean(self):
        return 1.0 / self.rate

    @property
    def second_moment(self):
        return 2.0 / self.rate**2

    @property
    def third_moment(self):
        return 6.0 / self.rate**3

    def _stop_loss(self, x):
        return np.exp(-self.rate * x) / self.rate

    def _stop_loss2(self, x):
        return np.exp(-self.rate * x) / self.rate**2

    def describe(self):
        return {"family": self.family, "rate": self.rate}


class Geometric(Distribution):
    """Number of trials (``start=1``) or failures (``start=0``) until the first success."""

    support_kind = LATTICE
    step = 1.0

    def __init__(self, p: float, start: int = 1):
        if not 0 < p <= 1:
            raise InvalidParams("geometric p must lie in (0, 1]")
        if start not in (0, 1):
            raise InvalidParams("geometric start must be 0 or 1")
        self.p = float(p)
        self.q = 1.0 - self.p
        self.start = int(start)

    @property
    def family(self):
        return f"geometric-from-{self.start}"

    def _cdf(self, x):
        k = _lattice_floor(x - self.start)
        return np.where(k < 0, 0.0, -np.expm1((k + 1) * np.log(self.q))) if self.q > 0 else \
            np.where(k < 0, 0.0, 1.0)

    def _sf(self, x):
        k = _lattice_floor(x - self.start)
        if self.q == 0:
            return np.where(k < 0, 1.0, 0.0)
        return np.where(k < 0, 1.0, np.exp((k + 1) * np.log(self.q)))

    def cdf_left(self, x):
        x = _arr(x)
        k = _lattice_below(x - self.start)
        if self.q > 0:
            val = np.where(k < 0, 0.0, -np.expm1((k + 1) * np.log(self.q)))
        else:
            val = np.where(k < 0, 0.0, 1.0)
        return _out(val, x)

    def _quantile(self, u):
        if self.q == 0:
            return np.full(np.shape(u), float(self.start))
        with np.errstate(divide="ignore"):
            t = np.log1p(-u) / np.log(self.q) - 1.0
        k = np.maximum(np.ceil(t), 0.0)
        k = np.where(np.isfinite(k), k, np.inf)
        # repair floating error in the closed form
        fin = np.isfinite(k)
        kk = np.where(fin, k, 0.0)
        lower_ok = (kk >= 1) & (-np.expm1(kk * np.log(self.q)) >= u)
        kk = np.where(lower_ok, kk - 1, kk)
        upper_bad = -np.expm1((kk + 1) * np.log(self.q)) < u
        kk = np.where(upper_bad, kk + 1, kk)
        return np.where(fin, kk, np.inf) + self.start

    @property
    def mean(self):
        # 1/p - 1 + start keeps 1/p exact for the trials count
        return 1.0 / self.p - 1.0 + self.start

    @property
    def second_moment(self):
        return self.q / self.p**2 + self.mean**2

    @property
    def third_moment(self):
        g1 = self.q / self.p
        g2 = self.q * (1 + self.q) / self.p**2
        g3 = self.q * (1 + 4 * self.q + self.q**2) / self.p**3
        s = self.start
        return g3 + 3 * s * g2 + 3 * s * s * g1 + s**3

    def _stop_loss(self, x):
        s = self.start
        q, p = self.q, self.p
        y = np.maximum(x - s, 0.0)
        f = np.minimum(_lattice_floor(y), np.floor(y) + 1)
        y = np.maximum(y, f)
        with np.errstate(divide="ignore"):
            lq = np.log(q) if q > 0 else -np.inf
        tail = (f + 1 - y) * np.exp((f + 1) * lq) + np.exp((f + 2) * lq) / p
        return np.where(x < s, (s - x) + q / p, tail)

    def atoms(self, upper=None):
        upper = self.upper if upper is None else upper
        if upper < self.start:
            return np.empty(0)
        return self.start + np.arange(int(math.floor(upper - self.start)) + 1, dtype=float)

    def describe(self):
        return {"family": self.family, "p": self.p, "start": self.start}


class Uniform(Distribution):
    family = "uniform"

    def __init__(self, a: float, b: float):
        if not (a >= 0 and b > a):
            raise InvalidParams("uniform requires 0 <= a < b")
        self.a, self.b = float(a), float(b)

    def _cdf(self, x):
        return np.clip((x - self.a) / (self.b - self.a), 0.0, 1.0)

    def _quantile(self, u):
        return self.a + u * (self.b - self.a)

    @property
    def mean(self):
        return 0.5 * (self.a + self.b)

    @property
    def second_moment(self):
        a, b = self.a, self.b
        return (a * a + a * b + b * b) / 3.0

    @property
    def third_moment(self):
        a, b = self.a, self.b
        return (b**4 - a**4) / (4.0 * (b - a))

    @property
    def upper(self):
        return self.b

    def _stop_loss(self, x):
        a, b = self.a, self.b
        mid = (b - x) ** 2 / (2 * (b - a))
        return np.where(x <= a, self.mean - x, np.where(x >= b, 0.0, mid))

    def _stop_loss2(self, x):
        a, b = self.a, self.b
        below = 0.5 * (self.second_moment - 2 * x * self.mean + x * x)
        mid = (b - x) ** 3 / (6 * (b - a))
        return np.where(x <= a, below, np.where(x >= b, 0.0, mid))

    def breakpoints(self):
        return np.array([self.a, self.b])

    def describe(self):
        return {"family": self.family, "a": self.a, "b": self.b}


class FinitePMF(Distribution):
    """Law with finitely many nonnegative atoms."""

    family = "finite-pmf"
    support_kind = FINITE

    def __init__(self, support: Sequence[float], probs: Sequence[float]):
        v = np.asarray(support, dtype=float)
        p = np.asarray(probs, dtype=float)
        if v.ndim != 1 or v.shape != p.shape or v.size == 0:
            raise InvalidParams("support and probs must be equal-length nonempty vectors")
        if np.any(v < 0) or np.any(p < 0) or np.any(p > 1):
            raise InvalidParams("support must be >= 0 and probabilities in [0, 1]")
        if abs(p.sum() - 1.0) > 1e-12:
            raise InvalidParams(f"probabilities sum to {p.sum()!r}, not 1")
        order = np.argsort(v, kind="stable")
        v, p = v[order], p[order]
        uniq, inv = np.unique(v, return_inverse=True)
        merged = np.bincount(inv, weights=p)
        keep = merged > 0
        self.values = uniq[keep]
        self.probs = merged[keep]
        self._cum = np.cumsum(self.probs)
        self._cum[-1] = 1.0
        self._suffix_p = np.concatenate([np.cumsum(self.probs[::-1])[::-1], [0.0]])
        self._suffix_pv = np.concatenate([np.cumsum((self.probs * self.values)[::-1])[::-1], [0.0]])
        self._suffix_pv2 = np.concatenate([np.cumsum((self.probs * self.values**2)[::-1])[::-1], [0.0]])

    @property
    def pmf(self) -> dict:
        return dict(zip(self.values.tolist(), self.probs.tolist()))

    def _cdf(self, x):
        idx = np.searchsorted(self.values, x, side="right")
        return np.where(idx == 0, 0.0, self._cum[np.maximum(idx - 1, 0)])

    def cdf_left(self, x):
        x = _arr(x)
        idx = np.searchsorted(self.values, x, side="left")
        return _out(np.where(idx == 0, 0.0, self._cum[np.maximum(idx - 1, 0)]), x)

    def _quantile(self, u):
        idx = np.searchsorted(self._cum, u, side="left")
        return self.values[np.minimum(idx, self.values.size - 1)]

    @property
    def mean(self):
        return float(np.dot(self.probs, self.values))

    @property
    def second_moment(self):
        return float(np.dot(self.probs, self.values**2))

    @property
    def third_moment(self):
        return float(np.dot(self.probs, self.values**3))

    @property
    def upper(self):
        return float(self.values[-1])

    def _stop_loss(self, x):
        i = np.searchsorted(self.values, x, side="right")
        return self._suffix_pv[i] - x * self._suffix_p[i]

    def _stop_loss2(self, x):
        i = np.searchsorted(self.values, x, side="right")
        return 0.5 * (self._suffix_pv2[i] - 2 * x * self._suffix_pv[i] + x * x * self._suffix_p[i])

    def atoms(self, upper=None):
        if upper is None:
            return self.values.copy()
        return self.values[self.values <= upper]

    def describe(self):
        return {"family": self.family, "support": self.values.tolist(), "probs": self.probs.tolist()}


class PointMass(FinitePMF):
    family = "point-mass"

    def __init__(self, c: float):
        if not c >= 0:
            raise InvalidParams("point mass location must be >= 0")
        super().__init__([c], [1.0])
        self.c = float(c)

    def describe(self):
        return {"family": self.family, "c": self.c}


class Gamma(Distribution):
    family = "gamma"

    def __init__(self, shape: float, rate: float = 1.0):
        if not (shape > 0 and rate > 0):
            raise InvalidParams("gamma shape and rate must be > 0")
        self.shape, self.rate = float(shape), float(rate)

    def _cdf(self, x):
        return special.gammainc(self.shape, self.rate * x)

    def _sf(self, x):
        return special.gammaincc(self.shape, self.rate * x)

    def _quantile(self, u):
        return special.gammaincinv(self.shape, u) / self.rate

    @property
    def mean(self):
        return self.shape / self.rate

    @property
    def second_moment(self):
        return self.shape * (self.shape + 1) / self.rate**2

    @property
    def third_moment(self):
        k = self.shape
        return k * (k + 1) * (k + 2) / self.rate**3

    def _stop_loss(self, x):
        k, lam = self.shape, self.rate
        z = lam * x
        return (k / lam) * special.gammaincc(k + 1, z) - x * special.gammaincc(k, z)

    def _stop_loss2(self, x):
        k, lam = self.shape, self.rate
        z = lam * x
        return 0.5 * (k * (k + 1) / lam**2 * special.gammaincc(k + 2, z)
                      - 2 * x * k / lam * special.gammaincc(k + 1, z)
                      + x * x * special.gammaincc(k, z))

    def describe(self):
        return {"family": self.family, "shape": self.shape, "rate": self.rate}


class NegativeBinomial(Distribution):
    """``shift + (failures before the r-th success)``; lattice with unit step."""

    family = "negative-binomial"
    support_kind = LATTICE
    step = 1.0

    def __init__(self, r: float, p: float, shift: int = 0):
        if not (r > 0 and 0 < p <= 1):
            raise InvalidParams("negative binomial needs r > 0 and p in (0, 1]")
        self.r, self.p, self.shift = float(r), float(p), int(shift)
        self._law = stats.nbinom(self.r, self.p)

    def _cdf(self, x):
        return self._law.cdf(_lattice_floor(x - self.shift))

    def _sf(self, x):
        return self._law.sf(_lattice_floor(x - self.shift))

    def cdf_left(self, x):
        x = _arr(x)
        return _out(self._law.cdf(_lattice_below(x - self.shift)), x)

    def _quantile(self, u):
        k = np.where(u <= 0, 0.0, self._law.ppf(u))
        return np.maximum(k, 0.0) + self.shift

    @property
    def mean(self):
        return self.shift + self.r * (1 - self.p) / self.p

    @property
    def second_moment(self):
        var = self.r * (1 - self.p) / self.p**2
        return var + self.mean**2

    def atoms(self, upper=None):
        upper = self.upper if upper is None else upper
        if upper < self.shift:
            return np.empty(0)
        return self.shift + np.arange(int(math.floor(upper - self.shift)) + 1, dtype=float)

    def describe(self):
        return {"family": self.family, "r": self.r, "p": self.p, "shift": self.shift}


class Scaled(Distribution):
    """Law of ``factor * X``."""

    def __init__(self, base: Distribution, factor: float):
        if not factor > 0:
            raise InvalidParams("scale factor must be > 0")
        self.base, self.factor = base, float(factor)
        self.support_kind = base.support_kind
        self.step = None if base.step is None else base.step * self.factor

    @property
    def family(self):
        return f"scaled-{self.base.family}"

    def _cdf(self, x):
        return _arr(self.base.cdf(x / self.factor))

    def _sf(self, x):
        return _arr(self.base.sf(x / self.factor))

    def cdf_left(self, x):
        x = _arr(x)
        return _out(_arr(self.base.cdf_left(x / self.factor)), x)

    def _quantile(self, u):
        return self.factor * _arr(self.base.quantile(u))

    @property
    def mean(self):
        return self.factor * self.base.mean

    @property
    def second_moment(self):
        m2 = self.base.second_moment
        return None if m2 is None else self.factor**2 * m2

    @property
    def third_moment(self):
        m3 = self.base.third_moment
        return None if m3 is None else self.factor**3 * m3

    @property
    def upper(self):
        return self.factor * self.base.upper

    def _stop_loss(self, x):
        return self.factor * _arr(self.base.stop_loss(x / self.factor))

    def _stop_loss2(self, x):
        return self.factor**2 * _arr(self.base.stop_loss2(x / self.factor))

    def atoms(self, upper=None):
        up = None if upper is None else upper / self.factor
        return self.factor * self.base.atoms(up)

    def breakpoints(self):
        return self.factor * self.base.breakpoints()

    def describe(self):
        return {"family": self.family, "base": self.base.describe(), "factor": self.factor}


def scale(dist: Distribution, factor: float) -> Distribution:
    """Law of ``factor * X``; finite PMFs stay finite PMFs."""
    if factor == 1.0:
        return dist
    if isinstance(dist, Exponential):
        return Exponential(dist.rate / factor)
    if isinstance(dist, Scaled):
        return Scaled(dist.base, dist.factor * factor)
    if isinstance(dist, FinitePMF) and not isinstance(dist, PointMass):
        return FinitePMF(dist.values * factor, dist.probs)
    if isinstance(dist, PointMass):
        return PointMass(dist.c * factor)
    return Scaled(dist, factor)


def normalized(dist: Distribution) -> Distribution:
    """Rescale to mean one."""
    m = dist.mean
    if not m > 0:
        raise InvalidParams("cannot normalise a law with zero mean")
    return scale(dist, 1.0 / m)


# ---------------------------------------------------------------------------
# construction

_FAMILIES = ("exponential", "geometric-from-1", "geometric-from-0", "uniform",
             "point-mass", "finite-pmf", "gamma", "negative-binomial")


def make_builtin(family: str, params: Sequence[Any] = ()) -> Distribution:
    """Build a named family.

    ``finite-pmf`` takes ``params = [(value, prob), ...]`` pairs.
    """
    params = list(params)
    try:
        if family == "exponential":
            return Exponential(*params) if params else Exponential()
        if family == "geometric-from-1":
            (p,) = params
            return Geometric(p, start=1)
        if family == "geometric-from-0":
            (p,) = params
            return Geometric(p, start=0)
        if family == "uniform":
            a, b = params
            return Uniform(a, b)
        if family == "point-mass":
            (c,) = params
            return PointMass(c)
        if family == "finite-pmf":
            if not params:
                raise InvalidParams("finite-pmf needs (value, prob) pairs")
            support, probs = zip(*params)
            return FinitePMF(support, probs)
        if family == "gamma":
            return Gamma(*params)
        if family == "negative-binomial":
            return NegativeBinomial(*params)
    except (TypeError, ValueError) as exc:
        if isinstance(exc, InvalidParams):
            raise
        raise InvalidParams(f"bad parameters for {family}: {params!r}") from exc
    raise UnknownFamily(f"unknown family {family!r}; expected one of {', '.join(_FAMILIES)}")


def from_literal(lit: Mapping[str, Any]) -> Distribution:
    """Parse a config literal such as ``{family = "geometric-from-1", params = [0.1]}``.

    Finite PMFs may use ``support`` / ``probs`` keys; an optional ``scale``
    multiplies the variable.
    """
    if "family" not in lit:
        raise InvalidParams(f"distribution literal without family: {dict(lit)!r}")
    family = lit["family"]
    if family in ("finite-pmf", "offspring") and "support" in lit:
        dist = FinitePMF(lit["support"], lit["probs"])
    else:
        dist = make_builtin(family, lit.get("params", ()))
    if "scale" in lit:
        dist = scale(dist, float(lit["scale"]))
    return dist


# ---------------------------------------------------------------------------
# moments


def moments(dist: Distribution) -> tuple[float, float]:
    """``(E X, E X^2)``, analytic when stored, otherwise by truncated quadrature."""
    m1 = dist.mean
    m2 = dist.second_moment
    if m2 is None:
        m2 = _quadrature_moment(dist, 2)
    return float(m1), float(m2)


def _quadrature_moment(dist: Distribution, order: int, doublings: int = 6) -> float:
    """``E X^k = int k x^{k-1} P[X > x] dx`` truncated at ``upper``, checked under doubling."""

    def integral(top):
        if dist.is_step:
            a = dist.atoms(top)
            return float(np.sum(dist.pmf_at(a) * a**order))
        pts = sorted(p for p in dist.breakpoints() if 0 < p < top)
        f = lambda x: order * x ** (order - 1) * float(dist.sf(x))
        return integrate.quad(f, 0.0, top, points=pts or None, limit=400,
                              epsabs=1e-14, epsrel=1e-11)[0]

    top = dist.upper
    prev = integral(top)
    for _ in range(doublings):
        cur = integral(2 * top)
        if abs(cur - prev) <= 1e-6 * max(abs(cur), 1e-300):
            return integral(top) if dist.is_step else cur
        prev, top = cur, 2 * top
    raise DivergentMoment(f"moment of order {order} does not settle under truncation doubling")


# ---------------------------------------------------------------------------
# samples


@dataclass(frozen=True)
class EmpiricalSample:
    """Sorted Monte Carlo output together with the seed that produced it."""

    values: np.ndarray
    seed: int | None = None
    stream: str | None = None
    extra: Mapping[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float).ravel()
        if v.size == 0:
            raise EmptySample("empirical sample needs at least one value")
        object.__setattr__(self, "values", np.sort(v, kind="stable"))

    @property
    def n(self) -> int:
        return int(self.values.size)

    @classmethod
    def from_values(cls, values, seed=None, stream=None, extra=None):
        return cls(np.asarray(values, dtype=float), seed, stream, extra or {})

    def scaled(self, factor: float) -> "EmpiricalSample":
        return EmpiricalSample(self.values * factor, self.seed, self.stream, self.extra)
