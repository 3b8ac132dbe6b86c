"""Exact small-instance computations: branching generation laws, hitting-time laws, exact distances."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.signal import fftconvolve

from .distributions import Distribution, Exponential, FinitePMF, Geometric, scale
from .errors import InvalidParams, TruncationOverflow
from .metrics import distance_exact

ACCEPT_MASS = 1e-9
TARGET_MASS = 1e-13  # keep doubling below this while cheap, so means are also accurate
MAX_TRUNC = 2**20
START_TRUNC = 64
MAX_HORIZON = 1_000_000
HITTING_MASS = 1e-13
_DIRECT = 2048  # below this length np.convolve is used instead of FFT


@dataclass(frozen=True, eq=False)
class PMF:
    """Law on ``0, 1, 2, ...`` stored on a finite support; ``truncation_mass`` is the mass beyond it."""
    support: np.ndarray
    probs: np.ndarray
    truncation_mass: float = 0.0

    @classmethod
    def from_vector(cls, vec) -> "PMF":
        vec = np.maximum(np.asarray(vec, dtype=float), 0.0)
        return cls(np.arange(vec.size), vec, max(0.0, 1.0 - float(vec.sum())))

    @property
    def vector(self) -> np.ndarray:
        out = np.zeros(int(self.support.max()) + 1 if self.support.size else 1)
        out[self.support] = self.probs
        return out

    def prob(self, k: int) -> float:
        v = self.vector
        return float(v[k]) if 0 <= k < v.size else 0.0

    @property
    def mean(self) -> float:
        return float(np.dot(self.support, self.probs))

    def tail(self, k: int) -> float:
        """``P[X > k]``, including the truncated mass."""
        return float(self.probs[self.support > k].sum()) + self.truncation_mass

    def conditioned_positive(self) -> "PMF":
        keep = self.support > 0
        z = self.probs[keep].sum()
        return PMF(self.support[keep], self.probs[keep] / z, self.truncation_mass / z)

    def size_biased(self) -> "PMF":
        w = self.support * self.probs
        keep = w > 0
        return PMF(self.support[keep], w[keep] / w.sum(), 0.0)

    def to_distribution(self, factor: float = 1.0) -> FinitePMF:
        keep = self.probs > 0
        p = self.probs[keep]
        return FinitePMF(self.support[keep] * factor, p / p.sum())


def total_variation(p: PMF, counts_or_pmf) -> float:
    """Total variation between ``p`` and another PMF or an array of integer observations."""
    if isinstance(counts_or_pmf, PMF):
        q = counts_or_pmf.vector
    else:
        obs = np.asarray(counts_or_pmf, dtype=np.int64)
        q = np.bincount(obs) / obs.size
    a = p.vector
    n = max(a.size, q.size)
    a, q = np.pad(a, (0, n - a.size)), np.pad(q, (0, n - q.size))
    return 0.5 * float(np.abs(a - q).sum()) + 0.5 * p.truncation_mass


def _conv(a, b, trunc):
    if min(a.size, b.size) < _DIRECT:
        c = np.convolve(a, b)
    else:
        c = np.maximum(fftconvolve(a, b), 0.0)
    return c[:trunc]


def _offspring_vector(offspring: Distribution, trunc: int) -> np.ndarray:
    if isinstance(offspring, FinitePMF):
        v = offspring.values
        if np.any(v != np.round(v)) or np.any(v < 0):
            raise InvalidParams("offspring law must live on nonnegative integers")
        vec = np.zeros(int(v.max()) + 1)
        vec[v.astype(int)] = offspring.probs
        return vec
    k = np.arange(trunc, dtype=float)
    vec = np.diff(np.concatenate([[0.0], np.asarray(offspring.cdf(k), dtype=float)]))
    big = np.flatnonzero(vec > 1e-18)
    return vec[: big[-1] + 1] if big.size else vec[:1]


def compose_pmf(outer: np.ndarray, inner: np.ndarray, trunc: int) -> np.ndarray:
    """Law of ``sum_{i <= J} Y_i`` with ``J ~ outer`` and i.i.d. ``Y_i ~ inner`` (Horner in ``outer``)."""
    outer = np.trim_zeros(np.asarray(outer, dtype=float), "b")
    acc = np.array([outer[-1]]) if outer.size else np.array([0.0])
    for c in outer[-2::-1]:
        acc = _conv(acc, inner, trunc)
        acc[0] += c
    return acc[:trunc]


def _gw_vector(off: np.ndarray, n: int, trunc: int) -> np.ndarray:
    z = np.array([0.0, 1.0])
    for _ in range(n):
        # one more generation below the root: Z_{k+1} = sum of Z_1 copies of Z_k
        z = compose_pmf(off, z, trunc)
    return z


def exact_gw_pmf(offspring: Distribution, n: int, trunc: int | None = None) -> PMF:
    """Law of ``Z_n`` for one ancestor; the support is doubled until less than 1e-9 mass is lost."""
    if int(n) != n or n < 0:
        raise InvalidParams("n must be a nonnegative integer")
    t = int(trunc or START_TRUNC)
    while True:
        off = _offspring_vector(offspring, t)
        z = _gw_vector(off[:t], int(n), t)
        pmf = PMF.from_vector(z)
        if pmf.truncation_mass < TARGET_MASS or (trunc is not None and pmf.truncation_mass < ACCEPT_MASS):
            return pmf
        if trunc is not None or t >= MAX_TRUNC:
            if pmf.truncation_mass < ACCEPT_MASS:
                return pmf
            raise TruncationOverflow(f"truncation mass {pmf.truncation_mass:.3g} at support {t}")
        t *= 2


def compose_generations(first: PMF, second: PMF, trunc: int = MAX_TRUNC) -> PMF:
    """Law of the generation reached by running ``first`` and then ``second`` from each individual."""
    return PMF.from_vector(compose_pmf(first.vector, second.vector, trunc))


def conditioned_law(offspring: Distribution, n: int, factor: float = 1.0) -> Distribution:
    """Law of ``factor * Z_n`` given ``Z_n > 0``; closed form for critical geometric offspring."""
    if isinstance(offspring, Geometric) and offspring.start == 0 and offspring.p == 0.5:
        return scale(Geometric(1.0 / (n + 1), 1), factor)
    return exact_gw_pmf(offspring, n).conditioned_positive().to_distribution(factor)


def exact_conditioned_geometric_distance(n: int, metric: str):
    """Distance between ``Ge(1/(n+1))`` from one, divided by ``n``, and Exp(1)."""
    if int(n) != n or n < 1:
        raise InvalidParams("n must be a positive integer")
    return distance_exact(scale(Geometric(1.0 / (n + 1), 1), 1.0 / n), Exponential(1.0), metric)


# ---------------------------------------------------------------------------
# hitting times


def exact_hitting_pmf(chain, i, start="stationary", horizon: int | None = None) -> PMF:
    """Law of the hitting time of ``i`` by taboo iteration.

    ``start="stationary"`` counts ``t >= 0``; a state label counts ``t > 0``.
    Iterates past ``horizon`` until less than 1e-13 mass is unaccounted for.
    """
    from .simulators.markov import stationary_distribution
    P = chain.P
    k = chain.index(i)
    into = P[:, k].copy()
    Q = P.copy()
    Q[:, k] = 0.0
    probs = []
    if isinstance(start, str) and start == "stationary":
        pi = stationary_distribution(chain)
        probs.append(pi[k])
        v = pi.copy()
        v[k] = 0.0
    else:
        probs.append(0.0)
        v = np.zeros(chain.size)
        v[chain.index(start)] = 1.0
    steps = 0
    need = int(horizon or 0)
    while True:
        steps += 1
        probs.append(float(v @ into))
        v = v @ Q
        rest = float(v.sum())
        if steps >= need and rest < HITTING_MASS:
            break
        if steps >= MAX_HORIZON:
            raise TruncationOverflow("hitting-time law needs more than 1e6 steps")
    vec = np.array(probs)
    return PMF(np.arange(vec.size), vec, max(rest, 0.0))
