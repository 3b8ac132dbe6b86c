"""Random sums ``W = mu^-1 sum_{i <= N} X_i``."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..distributions import Distribution, EmpiricalSample
from ..errors import DivergentMoment, InvalidParams
from ..rng import run_blocks
from ..transforms import index_equilibrium

PILOT_DRAWS = 100_000


@dataclass(frozen=True)
class IID:
    dist: Distribution


@dataclass(frozen=True)
class IndependentSequence:
    """``X_i`` drawn from ``dists[(i - 1) % len(dists)]``."""
    dists: tuple

    def __post_init__(self):
        if not len(self.dists):
            raise InvalidParams("independent sequence needs at least one law")
        object.__setattr__(self, "dists", tuple(self.dists))


@dataclass(frozen=True)
class MDependent:
    """``X_i`` is the mean of ``Y_i, ..., Y_{i+m}`` for i.i.d. ``Y`` drawn from ``dist``."""
    dist: Distribution
    m: int

    def __post_init__(self):
        if int(self.m) != self.m or self.m < 0:
            raise InvalidParams("m must be a nonnegative integer")


def _check_counts(n_dist: Distribution):
    if n_dist.support_kind == "continuous":
        raise InvalidParams("N must be integer valued")


def _draw_counts(n_dist, rng, count):
    n = np.asarray(n_dist.sample(rng, count), dtype=float)
    if np.any(n != np.round(n)) or np.any(n < 0):
        raise InvalidParams("N must take nonnegative integer values")
    return n.astype(np.int64)


def _draw_summands(x_gen, rng, counts):
    total = int(counts.sum())
    starts = np.repeat(np.cumsum(counts) - counts, counts)
    if isinstance(x_gen, IID):
        return np.asarray(x_gen.dist.sample(rng, total), dtype=float)
    if isinstance(x_gen, IndependentSequence):
        pos = np.arange(total) - starts
        which = pos % len(x_gen.dists)
        x = np.empty(total)
        for k, d in enumerate(x_gen.dists):
            sel = which == k
            x[sel] = d.sample(rng, int(sel.sum()))
        return x
    if isinstance(x_gen, MDependent):
        m = int(x_gen.m)
        lens = counts + m * (counts > 0)
        y = np.asarray(x_gen.dist.sample(rng, int(lens.sum())), dtype=float)
        c = np.concatenate([[0.0], np.cumsum(y)])
        y_starts = np.repeat(np.cumsum(lens) - lens, counts)
        j = np.arange(total) - starts + y_starts
        return (c[j + m + 1] - c[j]) / (m + 1)
    raise InvalidParams(f"unknown summand generator {x_gen!r}")


def raw_random_sums(n_dist, x_gen, rng, count):
    counts = _draw_counts(n_dist, rng, count)
    x = _draw_summands(x_gen, rng, counts)
    owner = np.repeat(np.arange(count), counts)
    return np.bincount(owner, weights=x, minlength=count), counts


def analytic_mu(n_dist: Distribution, x_gen) -> float:
    """``E sum_{i <= N} X_i``."""
    if isinstance(x_gen, IID):
        return float(n_dist.mean * x_gen.dist.mean)
    if isinstance(x_gen, MDependent):
        return float(n_dist.mean * x_gen.dist.mean)
    if isinstance(x_gen, IndependentSequence):
        return index_equilibrium(n_dist, [d.mean for d in x_gen.dists])[1]
    raise InvalidParams(f"unknown summand generator {x_gen!r}")


def simulate_random_sum(n_dist: Distribution, x_gen, reps: int, seed: int,
                        mu: float | None = None, normalize: bool = True,
                        threads: int | None = None) -> EmpiricalSample:
    """Replicates of ``sum_{i <= N} X_i``, divided by ``mu`` when ``normalize``.

    ``mu`` is taken from the argument, else computed analytically, else
    estimated from a pilot run whose standard error is recorded in ``extra``.
    """
    _check_counts(n_dist)
    mu_se = 0.0
    if mu is None:
        try:
            mu = analytic_mu(n_dist, x_gen)
            source = "analytic"
        except (DivergentMoment, ArithmeticError):
            pilot = run_blocks(lambda r, k: raw_random_sums(n_dist, x_gen, r, k)[0],
                               PILOT_DRAWS, seed, "random-sum-pilot", threads)
            mu, mu_se = float(pilot.mean()), float(pilot.std(ddof=1) / np.sqrt(pilot.size))
            source = "pilot"
    else:
        source = "given"
    if not mu > 0:
        raise InvalidParams("mu must be > 0")
    sums = run_blocks(lambda r, k: raw_random_sums(n_dist, x_gen, r, k)[0],
                      reps, seed, "random-sum", threads)
    vals = sums / mu if normalize else sums
    return EmpiricalSample(vals, seed=seed, stream="random-sum",
                           extra={"mu": float(mu), "mu_se": mu_se, "mu_source": source})


def geometric_coupling_tuples(p: float, reps: int, seed: int, m: int = 0,
                              x_gen=None, threads: int | None = None) -> np.ndarray:
    """``(w, w', w'', g)`` rows for a 0-started geometric sum with an atom at zero.

    ``N' = N + 1`` has the law of ``N`` given ``N > 0``; ``N'' = max(N - m, 0)``;
    ``g = (1 - p) / p``.  Summands default to ``X = 1``.
    """
    from ..distributions import Geometric, PointMass
    x_gen = x_gen or IID(PointMass(1.0))
    n_dist = Geometric(p, start=0)
    mu = analytic_mu(n_dist, x_gen)
    g = (1.0 - p) / p

    def block(rng, count):
        n = _draw_counts(n_dist, rng, count)
        x = _draw_summands(x_gen, rng, n + 1)
        owner = np.repeat(np.arange(count), n + 1)
        pos = np.arange(x.size) - np.repeat(np.cumsum(n + 1) - (n + 1), n + 1)
        w1 = np.bincount(owner, weights=x, minlength=count)
        w = np.bincount(owner, weights=x * (pos < n[owner]), minlength=count)
        w2 = np.bincount(owner, weights=x * (pos < np.maximum(n - m, 0)[owner]), minlength=count)
        return np.column_stack([w / mu, w1 / mu, w2 / mu, np.full(count, g)])

    return run_blocks(block, reps, seed, f"stein-coupling-{m}", threads)
