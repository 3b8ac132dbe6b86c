"""Finite Markov chains: stationary laws, hitting times, diagonal deviation sums."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.sparse.csgraph import connected_components

from ..distributions import EmpiricalSample
from ..errors import InvalidParams, NoConvergence, ReducibleChain
from ..rng import run_blocks

MAX_STATES = 10_000
ROW_TOL = 1e-12
MAX_STEPS = 10_000_000


@dataclass(frozen=True, eq=False)
class ChainSpec:
    P: np.ndarray
    states: tuple = ()

    def __post_init__(self):
        P = np.array(self.P, dtype=float)
        if P.ndim != 2 or P.shape[0] != P.shape[1] or P.shape[0] == 0:
            raise InvalidParams("transition matrix must be square and nonempty")
        if P.shape[0] > MAX_STATES:
            raise InvalidParams(f"at most {MAX_STATES} states supported")
        if np.any(P < 0) or np.any(P > 1):
            raise InvalidParams("transition probabilities must lie in [0, 1]")
        if np.any(np.abs(P.sum(axis=1) - 1.0) > ROW_TOL):
            raise InvalidParams("rows must sum to 1 within 1e-12")
        P.setflags(write=False)
        object.__setattr__(self, "P", P)
        states = tuple(self.states) if len(self.states) else tuple(range(P.shape[0]))
        if len(states) != P.shape[0] or len(set(states)) != len(states):
            raise InvalidParams("state labels must be unique, one per row")
        object.__setattr__(self, "states", states)

    @property
    def size(self) -> int:
        return self.P.shape[0]

    def index(self, state) -> int:
        try:
            return self.states.index(state)
        except ValueError:
            raise InvalidParams(f"unknown state {state!r}") from None

    @classmethod
    def two_state(cls, a: float, b: float) -> "ChainSpec":
        """States 0, 1 with ``P[0 -> 1] = a`` and ``P[1 -> 0] = b``."""
        return cls(np.array([[1 - a, a], [b, 1 - b]]))


def is_irreducible(chain: ChainSpec) -> bool:
    k, _ = connected_components(chain.P > 0, directed=True, connection="strong")
    return k == 1


def stationary_distribution(chain: ChainSpec) -> np.ndarray:
    """Solve ``pi P = pi``, ``sum(pi) = 1``."""
    if not is_irreducible(chain):
        raise ReducibleChain("chain is not irreducible")
    n = chain.size
    A = chain.P.T - np.eye(n)
    A[-1, :] = 1.0
    rhs = np.zeros(n)
    rhs[-1] = 1.0
    pi = np.linalg.solve(A, rhs)
    for _ in range(3):  # iterative refinement
        r = rhs - A @ pi
        if np.max(np.abs(r)) < 1e-15:
            break
        pi = pi + np.linalg.solve(A, r)
    pi = np.maximum(pi, 0.0)
    return pi / pi.sum()


def _cumulative(chain: ChainSpec) -> np.ndarray:
    c = np.cumsum(chain.P, axis=1)
    c[:, -1] = 1.0
    # shift row i into [i, i + 1] so one searchsorted handles every row
    return (c + np.arange(chain.size)[:, None]).ravel()


def _step(rng, flat, n, cur):
    u = rng.random(cur.size)
    j = np.searchsorted(flat, cur + u, side="right") - cur * n
    return np.minimum(j, n - 1)


def simulate_hitting_times(chain: ChainSpec, target, reps: int, seed: int,
                           start="stationary", normalized: bool = False,
                           threads: int | None = None) -> EmpiricalSample:
    """Hitting times of ``target``.

    ``start="stationary"`` draws ``X_0`` from the stationary law and counts
    steps ``t >= 0`` until ``X_t = target`` (0 if it starts there); a state
    label starts there and counts ``t > 0``.  ``normalized`` scales the
    times by the target's stationary probability.
    """
    pi = stationary_distribution(chain)
    i = chain.index(target)
    n = chain.size
    flat = _cumulative(chain)
    stationary = isinstance(start, str) and start == "stationary"
    j0 = None if stationary else chain.index(start)
    pi_cum = np.cumsum(pi)
    pi_cum[-1] = 1.0

    def block(rng, count):
        if stationary:
            cur = np.minimum(np.searchsorted(pi_cum, rng.random(count), side="right"), n - 1)
            t = np.zeros(count, dtype=np.int64)
            active = np.flatnonzero(cur != i)
        else:
            cur = np.full(count, j0, dtype=np.int64)
            t = np.zeros(count, dtype=np.int64)
            active = np.arange(count)
        steps = 0
        while active.size:
            steps += 1
            if steps > MAX_STEPS:
                raise NoConvergence("hitting time exceeded the step cap")
            cur[active] = _step(rng, flat, n, cur[active])
            t[active] += 1
            active = active[cur[active] != i]
        return t

    name = "hitting-stationary" if stationary else f"hitting-fixed-{j0}"
    t = run_blocks(block, reps, seed, name, threads)
    vals = t * pi[i] if normalized else t.astype(float)
    return EmpiricalSample(vals, seed=seed, stream=name,
                           extra={"pi_target": float(pi[i]), "normalized": normalized})


def diagonal_deviation_sum(chain: ChainSpec, i, tol: float = 1e-12,
                           max_steps: int = 100_000) -> float:
    """``sum_{n >= 1} |P^n_ii - pi_i|`` with a geometric tail correction."""
    pi = stationary_distribution(chain)
    k = chain.index(i)
    v = np.zeros(chain.size)
    v[k] = 1.0
    total, prev, quiet = 0.0, None, 0
    for _ in range(max_steps):
        v = v @ chain.P
        term = abs(v[k] - pi[k])
        total += term if term > 1e-15 else 0.0
        if term <= 1e-15:  # rounding noise of an exactly stationary row
            quiet += 1
            lam = 0.0
        else:
            lam = min(term / prev, 1.0) if prev else 1.0
            quiet = quiet + 1 if lam < 1.0 and term < tol * (1.0 - lam) else 0
        if quiet >= 10:
            return total + (term * lam / (1.0 - lam) if lam < 1.0 else 0.0)
        prev = term
    raise NoConvergence("diagonal deviations did not decay (periodic or slowly mixing chain)")


def random_chain(n: int, seed: int, density: float = 1.0) -> ChainSpec:
    """Seeded random chain; an added cycle through all states keeps it irreducible."""
    from ..rng import stream
    rng = stream(seed, "random-chain")
    P = rng.random((n, n)) * (rng.random((n, n)) < density)
    P[np.arange(n), (np.arange(n) + 1) % n] += 0.1  # a cycle keeps it irreducible
    P /= P.sum(axis=1, keepdims=True)
    return ChainSpec(P)
