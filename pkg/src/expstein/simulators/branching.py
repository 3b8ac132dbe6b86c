"""Galton-Watson processes and the size-biased spine tree."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..distributions import (Distribution, EmpiricalSample, Exponential, FinitePMF, Geometric,
                             NegativeBinomial, moments)
from ..errors import ExtinctionOnly, InvalidParams, NoConvergence, PopulationOverflow
from ..metrics import DK, DW, distance_empirical, distance_exact
from ..rng import run_blocks
from ..transforms import size_bias

POPULATION_CAP = 100_000_000
RETRY_CAP = 1_000_000
CRITICAL_TOL = 1e-12


def _check_offspring(offspring: Distribution):
    if isinstance(offspring, FinitePMF):
        v = offspring.values
        if np.any(v != np.round(v)) or np.any(v < 0):
            raise InvalidParams("offspring law must live on nonnegative integers")
        return
    if isinstance(offspring, (Geometric, NegativeBinomial)):
        return
    raise InvalidParams(f"unsupported offspring law {offspring.family}")


def next_generation(offspring: Distribution, rng: np.random.Generator, counts: np.ndarray) -> np.ndarray:
    """Total offspring of ``counts[...]`` independent parents, elementwise."""
    counts = np.asarray(counts, dtype=np.int64)
    if counts.size == 0:
        return counts.copy()
    if isinstance(offspring, FinitePMF):
        draws = rng.multinomial(counts.ravel(), offspring.probs)
        out = draws @ offspring.values.astype(np.int64)
    elif isinstance(offspring, (Geometric, NegativeBinomial)):
        if isinstance(offspring, Geometric):
            r, p, shift = 1.0, offspring.p, offspring.start
        else:
            r, p, shift = offspring.r, offspring.p, offspring.shift
        c = counts.ravel()
        pos = c > 0
        out = np.zeros(c.size, dtype=np.int64)
        if p == 1.0:
            out[pos] = 0
        else:
            out[pos] = rng.negative_binomial(r * c[pos], p)
        out += shift * c
    else:
        raise InvalidParams(f"unsupported offspring law {offspring.family}")
    out = out.reshape(counts.shape)
    if np.any(out > POPULATION_CAP):
        raise PopulationOverflow("a generation exceeded 1e8 individuals")
    return out


def run_generations(offspring, rng, counts, gens: int) -> np.ndarray:
    z = np.asarray(counts, dtype=np.int64)
    for _ in range(int(gens)):
        z = next_generation(offspring, rng, z)
    return z


def offspring_variance(offspring: Distribution) -> tuple[float, float]:
    m, m2 = moments(offspring)
    return m, m2 - m * m


def gw_generation_sample(offspring: Distribution, n: int, reps: int, seed: int,
                         condition_on_survival: bool = False,
                         threads: int | None = None) -> EmpiricalSample:
    """Generation-``n`` sizes ``Z_n`` of a process started from one ancestor.

    With ``condition_on_survival`` replicates with ``Z_n = 0`` are discarded
    and redrawn, so ``reps`` counts accepted draws.
    """
    _check_offspring(offspring)
    if int(n) != n or n < 1:
        raise InvalidParams("n must be a positive integer")
    if condition_on_survival and float(offspring.cdf(0.0)) >= 1.0:
        raise ExtinctionOnly("offspring law is a point mass at 0")

    def block(rng, count):
        if not condition_on_survival:
            return run_generations(offspring, rng, np.ones(count, dtype=np.int64), n)
        got, batch, rounds = [], count, 0
        need = count
        while need > 0:
            rounds += 1
            if rounds > RETRY_CAP:
                raise NoConvergence("survival conditioning exceeded the retry cap")
            z = run_generations(offspring, rng, np.ones(batch, dtype=np.int64), n)
            z = z[z > 0][:need]
            got.append(z)
            need -= z.size
            rate = max(sum(a.size for a in got), 1) / (rounds * batch)
            batch = int(min(max(need / rate * 1.1, 64), 4_000_000))
        return np.concatenate(got)

    name = "gw-conditioned" if condition_on_survival else "gw"
    z = run_blocks(block, reps, seed, name, threads)
    return EmpiricalSample(z.astype(float), seed=seed, stream=name,
                           extra={"n": int(n), "conditioned": condition_on_survival})


# ---------------------------------------------------------------------------
# spine construction


@dataclass(frozen=True)
class GenStats:
    n: int
    S_n: int
    L_n: int
    R_n: int
    R_n_star: int
    per_split: tuple  # ((S_nj, L_nj, R_nj, R_nj_star), ...) for j = 1..n


@dataclass(frozen=True)
class SpineBatch:
    """Vectorised spine statistics; ``L, R, R_star`` have shape ``(reps, n)``, column ``j-1`` is split ``j``."""
    n: int
    L: np.ndarray
    R: np.ndarray
    R_star: np.ndarray

    @property
    def S_n(self):
        return 1 + self.L.sum(axis=1) + self.R.sum(axis=1)

    @property
    def L_n(self):
        return self.L.sum(axis=1)

    @property
    def R_n(self):
        return 1 + self.R.sum(axis=1)

    @property
    def R_n_star(self):
        return 1 + self.R_star.sum(axis=1)

    def stats(self, r: int) -> GenStats:
        L, R, Rs = self.L[r], self.R[r], self.R_star[r]
        per = tuple((int(a + b), int(a), int(b), int(c)) for a, b, c in zip(L, R, Rs))
        return GenStats(self.n, int(self.S_n[r]), int(self.L_n[r]), int(self.R_n[r]),
                        int(self.R_n_star[r]), per)


def _sibling_split(biased, rng, count):
    k = np.asarray(biased.sample(rng, count), dtype=np.int64)
    pos = np.floor(rng.random(count) * k).astype(np.int64) + 1  # spine child among 1..k
    return pos - 1, k - pos


def _resample_right(offspring, biased, rng, gens: int, count: int) -> np.ndarray:
    """Draws from the law of the right-sibling count given no left descendants, by rejection."""
    out = np.empty(count, dtype=np.int64)
    todo = np.arange(count)
    tries = 0
    while todo.size:
        tries += 1
        if tries > RETRY_CAP:
            raise NoConvergence("rejection for the left-empty split exceeded the retry cap")
        left, right = _sibling_split(biased, rng, todo.size)
        left = run_generations(offspring, rng, left, gens)
        right = run_generations(offspring, rng, right, gens)
        ok = left == 0
        out[todo[ok]] = right[ok]
        todo = todo[~ok]
    return out


def spine_samples(offspring: Distribution, n: int, reps: int, seed: int,
                  threads: int | None = None) -> SpineBatch:
    """Size-biased trees grown along a spine ``v_0, ..., v_n``.

    Each spine vertex ``v_{j-1}`` gets a size-biased number of children, one
    chosen uniformly continues the spine, and every sibling starts an
    ordinary process run for the remaining ``n - j`` generations.  Where a
    split has left descendants its right count is replaced by an independent
    draw conditioned on the left count being zero.
    """
    _check_offspring(offspring)
    if int(n) != n or n < 1:
        raise InvalidParams("n must be a positive integer")
    n = int(n)
    biased = size_bias(offspring)

    def block(rng, count):
        L = np.zeros((count, n), dtype=np.int64)
        R = np.zeros((count, n), dtype=np.int64)
        for t in range(1, n + 1):
            if t > 1:
                # advance every split introduced earlier by one generation
                L[:, : t - 1] = next_generation(offspring, rng, L[:, : t - 1])
                R[:, : t - 1] = next_generation(offspring, rng, R[:, : t - 1])
            L[:, t - 1], R[:, t - 1] = _sibling_split(biased, rng, count)
        Rs = R.copy()
        for j in range(1, n + 1):
            bad = np.flatnonzero(L[:, j - 1] > 0)
            if bad.size:
                Rs[bad, j - 1] = _resample_right(offspring, biased, rng, n - j, bad.size)
        return np.stack([L, R, Rs], axis=1)

    arr = run_blocks(block, reps, seed, f"spine-{n}", threads)
    return SpineBatch(n, arr[:, 0], arr[:, 1], arr[:, 2])


def spine_sample(offspring: Distribution, n: int, seed: int) -> GenStats:
    """One spine tree summarised as :class:`GenStats`."""
    return spine_samples(offspring, n, 1, seed).stats(0)


# ---------------------------------------------------------------------------
# exponential limit of the conditioned process


def _loglog_slope(x, y):
    x, y = np.log(np.asarray(x, float)), np.log(np.asarray(y, float))
    if x.size < 2:
        return float("nan"), float("nan")
    A = np.column_stack([x, np.ones_like(x)])
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    if x.size > 2:
        resid = y - A @ coef
        s2 = resid @ resid / (x.size - 2)
        se = float(np.sqrt(s2 * np.linalg.inv(A.T @ A)[0, 0]))
    else:
        se = float("nan")
    return float(coef[0]), se


def yaglom_rate_experiment(offspring: Distribution, n_list, reps: int, seed: int,
                           threads: int | None = None, resamples: int = 200) -> dict:
    """Wasserstein distance of ``2 Z_n / (sigma^2 n)`` given survival to Exp(1), for each ``n``.

    Conditioned draws come from the spine construction (``R_n_star``); the
    oracle column uses the exact generation law.
    """
    from ..oracle import conditioned_law
    _check_offspring(offspring)
    m, var = offspring_variance(offspring)
    if abs(m - 1.0) > CRITICAL_TOL:
        raise InvalidParams("offspring law must be critical (mean 1)")
    if not var > 0:
        raise InvalidParams("offspring variance must be positive")
    target = Exponential(1.0)
    rows = []
    for n in n_list:
        scale = 2.0 / (var * n)
        batch = spine_samples(offspring, n, reps, seed, threads)
        sample = EmpiricalSample(batch.R_n_star * scale, seed=seed)
        emp = distance_empirical(sample, target, DW, resamples=resamples, seed=seed)
        law = conditioned_law(offspring, n, scale)
        rows.append({
            "n": int(n),
            "dw_empirical": emp.value,
            "mc_halfwidth": emp.mc_halfwidth,
            "dw_oracle": distance_exact(law, target, DW).value,
            "dk_oracle": distance_exact(law, target, DK).value,
        })
    ns = [r["n"] for r in rows]
    slope_e, se_e = _loglog_slope(ns, [r["dw_empirical"] for r in rows])
    slope_o, se_o = _loglog_slope(ns, [r["dw_oracle"] for r in rows])
    # smallest C with dw_oracle(n) <= C log(n) / n for every n > 1
    ratios = [r["dw_oracle"] * r["n"] / np.log(r["n"]) for r in rows if r["n"] > 1]
    return {"sigma2": var, "rows": rows, "slope_empirical": slope_e, "slope_empirical_se": se_e,
            "slope_oracle": slope_o, "slope_oracle_se": se_o,
            "fitted_C": float(max(ratios)) if ratios else float("nan")}
