"""Equilibrium and size-bias transforms, aging classes, monotone coupling gaps."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .distributions import (CONTINUOUS, LATTICE, Distribution, Exponential, FinitePMF, Gamma,
                            Geometric, NegativeBinomial, PointMass, Scaled, Uniform, _arr, _out,
                            moments)
from .errors import NotMonotoneOrderable, UnsupportedFamily, ZeroMean, ZeroTail

AGING_GRID = 512
AGING_TOL = 1e-9

NBUE, NWUE, EXPONENTIAL, NEITHER = "NBUE", "NWUE", "exponential", "neither"


class Equilibrium(Distribution):
    """Law with CDF ``(1/EX) int_0^x P[X > y] dy``; always continuous."""

    family = "equilibrium"
    support_kind = CONTINUOUS

    def __init__(self, base: Distribution):
        m = base.mean
        if not m > 0:
            raise ZeroMean("equilibrium transform needs a positive mean")
        self.base = base
        self._m = float(m)

    def _cdf(self, x):
        return 1.0 - np.asarray(self.base.stop_loss(x), dtype=float) / self._m

    def sf(self, x):
        x = _arr(x)
        return _out(np.where(x < 0, 1.0, np.asarray(self.base.stop_loss(np.maximum(x, 0)), float) / self._m), x)

    def _quantile(self, u):
        """Vectorised bisection, absolute tolerance 1e-10 relative to the support scale."""
        u = np.asarray(u, dtype=float)
        lo = np.zeros_like(u)
        hi = np.full_like(u, max(self.base.upper, self.base.lower) * 1.0 + 1e-300)
        # bounded supports end exactly at the largest atom / endpoint
        tol = 1e-10 * max(1.0, float(hi.max()) if hi.size else 1.0) * 1e-2
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            below = np.asarray(self._cdf(mid), dtype=float) < u
            lo = np.where(below, mid, lo)
            hi = np.where(below, hi, mid)
            if np.all(hi - lo <= tol):
                break
        return np.where(u <= 0, 0.0, hi)

    @property
    def mean(self):
        m, m2 = moments(self.base)
        return m2 / (2.0 * m)

    @property
    def second_moment(self):
        m3 = self.base.third_moment
        return None if m3 is None else m3 / (3.0 * self._m)

    def _stop_loss(self, x):
        return np.asarray(self.base.stop_loss2(x), dtype=float) / self._m

    def breakpoints(self):
        top = self.base.upper
        pts = np.concatenate([self.base.atoms(top), self.base.breakpoints()])
        return np.unique(pts[pts > 0])

    def describe(self):
        return {"family": self.family, "base": self.base.describe()}


class SizeBiasedUniform(Distribution):
    """Density proportional to ``x`` on ``[a, b]``."""

    family = "size-biased-uniform"

    def __init__(self, a: float, b: float):
        self.a, self.b = float(a), float(b)

    def _cdf(self, x):
        a, b = self.a, self.b
        return np.clip((x * x - a * a) / (b * b - a * a), 0.0, 1.0)

    def _quantile(self, u):
        a, b = self.a, self.b
        return np.sqrt(a * a + u * (b * b - a * a))

    @property
    def mean(self):
        a, b = self.a, self.b
        return 2.0 * (b**3 - a**3) / (3.0 * (b * b - a * a))

    @property
    def second_moment(self):
        a, b = self.a, self.b
        return (b**4 - a**4) / (2.0 * (b * b - a * a))

    def breakpoints(self):
        return np.array([self.a, self.b])

    def describe(self):
        return {"family": self.family, "a": self.a, "b": self.b}


def equilibrium(dist: Distribution) -> Distribution:
    """Equilibrium (stationary residual-life) law of ``dist``."""
    if not dist.mean > 0:
        raise ZeroMean("equilibrium transform of a point mass at 0 is undefined")
    if isinstance(dist, Exponential):
        return Exponential(dist.rate)
    if isinstance(dist, PointMass):
        return Uniform(0.0, dist.c)
    if isinstance(dist, Scaled) and isinstance(dist.base, (Exponential, PointMass)):
        inner = equilibrium(dist.base)
        return Scaled(inner, dist.factor)
    return Equilibrium(dist)


def size_bias(dist: Distribution) -> Distribution:
    """Law reweighted by ``x / EX``."""
    m = dist.mean
    if not m > 0:
        raise ZeroMean("size-bias needs a positive mean")
    if isinstance(dist, PointMass):
        return PointMass(dist.c)
    if isinstance(dist, FinitePMF):
        w = dist.values * dist.probs / m
        keep = w > 0
        return FinitePMF(dist.values[keep], w[keep] / w[keep].sum())
    if isinstance(dist, Exponential):
        return Gamma(2.0, dist.rate)
    if isinstance(dist, Gamma):
        return Gamma(dist.shape + 1.0, dist.rate)
    if isinstance(dist, Geometric):
        # k p^2 q^(k-1), k >= 1, for either starting point
        return NegativeBinomial(2.0, dist.p, shift=1)
    if isinstance(dist, NegativeBinomial):
        # finite support cut where the remaining biased mass is below 1e-15
        top = float(dist.quantile(1.0 - 1e-15)) + 50.0 * (1.0 + dist.r) / dist.p
        k = dist.atoms(top)
        w = k * np.asarray(dist.cdf(k)) - k * np.asarray(dist.cdf_left(k))
        keep = w > 0
        return FinitePMF(k[keep], w[keep] / w[keep].sum())
    if isinstance(dist, Uniform):
        return SizeBiasedUniform(dist.a, dist.b)
    if isinstance(dist, Scaled):
        return Scaled(size_bias(dist.base), dist.factor)
    raise UnsupportedFamily(f"no analytic size-bias transform for {dist.family}")


def sample_equilibrium(dist: Distribution, rng: np.random.Generator, size=None):
    """Draw ``U * X^s`` with ``U`` uniform on ``[0, 1]`` and ``X^s`` size-biased.

    Families without an analytic size-bias law fall back to inverting the
    equilibrium CDF.
    """
    try:
        biased = size_bias(dist)
    except UnsupportedFamily:
        return equilibrium(dist).quantile(rng.random(size))
    u = rng.random(size)
    return u * biased.sample(rng, size)


# ---------------------------------------------------------------------------
# aging classes


@dataclass(frozen=True)
class AgingClass:
    tag: str
    witness: float | None = None


def _aging_grid(dist: Distribution, discrete: bool) -> np.ndarray:
    top = float(dist.quantile(1.0 - 1e-9))
    if discrete:
        h = dist.step or 1.0
        s = h * np.arange(1, int(np.floor(top / h)) + 1, dtype=float)
    else:
        s = np.linspace(0.0, top, AGING_GRID)
    return s


def mean_residual_life(dist: Distribution, s) -> np.ndarray:
    """``E[X - s | X > s]``; ``nan`` where ``P[X > s] = 0``."""
    s = np.asarray(s, dtype=float)
    tail = np.asarray(dist.sf(s), dtype=float)
    sl = np.asarray(dist.stop_loss(s), dtype=float)
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(tail > 0, sl / np.where(tail > 0, tail, 1.0), np.nan)


def classify_aging(dist: Distribution, tol: float = AGING_TOL,
                   discrete: bool | None = None) -> AgingClass:
    """NBUE / NWUE test of the mean residual life against the mean on a fixed grid.

    With ``discrete`` (the default for lattice laws) the test points are the
    positive multiples of the lattice step; otherwise 512 points of
    ``[0, quantile(1 - 1e-9)]``.  A geometric law from 1 is "exponential" in
    the discrete sense but NBUE in the continuous one, and only the latter
    orders it against its (continuous) equilibrium law.
    """
    m = dist.mean
    if discrete is None:
        discrete = dist.support_kind == LATTICE
    s = _aging_grid(dist, discrete)
    mrl = mean_residual_life(dist, s)
    ok = np.isfinite(mrl)
    if not np.any(ok):
        raise ZeroTail("no grid point with positive tail probability")
    s, mrl = s[ok], mrl[ok]
    slack = tol * max(1.0, abs(m))
    nbue = mrl <= m + slack
    nwue = mrl >= m - slack
    if nbue.all() and nwue.all():
        return AgingClass(EXPONENTIAL)
    if nbue.all():
        return AgingClass(NBUE)
    if nwue.all():
        return AgingClass(NWUE)
    return AgingClass(NEITHER, float(s[np.argmax(~nbue)]))


def nbue_coupling_gap(dist: Distribution) -> float:
    """``E|X^e - X|`` under the monotone coupling, ``|E X^2 / (2 E X) - E X|``.

    The ordering of ``X`` against ``X^e`` needs the continuous aging class.
    """
    cls = classify_aging(dist, discrete=False)
    if cls.tag == NEITHER:
        raise NotMonotoneOrderable(f"law is neither NBUE nor NWUE (witness s={cls.witness})")
    m, m2 = moments(dist)
    return abs(m2 / (2.0 * m) - m)


# ---------------------------------------------------------------------------
# index law for random sums


def index_equilibrium(
    n_dist: Distribution,
    summand_means: Callable[[np.ndarray], np.ndarray] | Sequence[float] | None = None,
) -> tuple[FinitePMF, float]:
    """Law of the index ``M`` with ``P[M = m] = mu_m P[N >= m] / mu`` and the normaliser ``mu``.

    ``summand_means`` gives ``mu_m = E(X_m | X_1..X_{m-1})``; a sequence is
    cycled, ``None`` means all equal to one.
    """
    top = n_dist.upper
    m = np.arange(1, int(np.floor(top)) + 1, dtype=float)
    if m.size == 0:
        raise ZeroMean("index law needs P[N >= 1] > 0")
    tail = 1.0 - np.asarray(n_dist.cdf_left(m), dtype=float)
    if summand_means is None:
        mu_m = np.ones_like(m)
    elif callable(summand_means):
        mu_m = np.asarray(summand_means(m), dtype=float)
    else:
        seq = np.asarray(summand_means, dtype=float)
        mu_m = seq[(m.astype(int) - 1) % seq.size]
    w = mu_m * tail
    mu = float(w.sum())
    keep = w > 0
    return FinitePMF(m[keep], w[keep] / w[keep].sum()), mu
