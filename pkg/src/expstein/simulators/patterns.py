"""Waiting times for patterns in coin-flip sequences."""
from __future__ import annotations

import numpy as np

from ..distributions import EmpiricalSample
from ..errors import InvalidParams, NoConvergence
from ..rng import run_blocks

START_OF_RUN, HEAD_RUN = "start-of-run", "de-clumped-head-run"
MAX_FLIPS = 10_000_000


def _automaton(pattern: str) -> np.ndarray:
    """KMP transition table ``delta[state, flip]`` with flips 0 = T, 1 = H; state ``len`` accepts."""
    k = len(pattern)
    sym = [1 if c == "H" else 0 for c in pattern]
    fail = [0] * k
    j = 0
    for i in range(1, k):
        while j and sym[i] != sym[j]:
            j = fail[j - 1]
        if sym[i] == sym[j]:
            j += 1
        fail[i] = j
    delta = np.zeros((k + 1, 2), dtype=np.int64)
    for s in range(k + 1):
        for c in (0, 1):
            if s < k and sym[s] == c:
                delta[s, c] = s + 1
            elif s == 0:
                delta[s, c] = 0
            else:
                delta[s, c] = delta[fail[s - 1], c]
    return delta


def _first_completion(delta, k, p, rng, count):
    """Flip index (1-based) at which the pattern is first completed."""
    state = np.zeros(count, dtype=np.int64)
    t = np.zeros(count, dtype=np.int64)
    active = np.arange(count)
    flips = 0
    while active.size:
        flips += 1
        if flips > MAX_FLIPS:
            raise NoConvergence("pattern not completed within the flip cap")
        heads = (rng.random(active.size) < p).astype(np.int64)
        state[active] = delta[state[active], heads]
        t[active] += 1
        active = active[state[active] != k]
    return t


def simulate_pattern_time(p: float, pattern: str | None, mode: str, reps: int, seed: int,
                          k: int | None = None, threads: int | None = None) -> EmpiricalSample:
    """Pattern waiting times; heads has probability ``p``.

    ``start-of-run``: the 1-based flip index where ``pattern`` first begins.
    ``de-clumped-head-run``: the number of flips before the first run of ``k`` heads starts.
    """
    if not 0 <= p <= 1:
        raise InvalidParams("p must lie in [0, 1]")
    if mode == HEAD_RUN:
        if k is None or int(k) != k or k < 1:
            raise InvalidParams("head-run mode needs a positive integer k")
        pattern = "H" * int(k)
    elif mode != START_OF_RUN:
        raise InvalidParams(f"unknown mode {mode!r}")
    if not pattern or set(pattern) - {"H", "T"}:
        raise InvalidParams("pattern must be a nonempty word over H/T")
    if (p == 0 and "H" in pattern) or (p == 1 and "T" in pattern):
        raise NoConvergence("pattern has probability zero")
    delta = _automaton(pattern)
    L = len(pattern)
    t = run_blocks(lambda r, c: _first_completion(delta, L, p, r, c), reps, seed,
                   f"pattern-{pattern}", threads)
    vals = t - L + 1 if mode == START_OF_RUN else t - L
    return EmpiricalSample(vals.astype(float), seed=seed, stream=f"pattern-{pattern}",
                           extra={"mode": mode, "pattern": pattern})


def overlaps_itself(pattern: str) -> bool:
    """True if some proper prefix of ``pattern`` is also a suffix."""
    return any(pattern[:j] == pattern[-j:] for j in range(1, len(pattern)))
