from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from expstein.distributions import FinitePMF, Geometric
from expstein.errors import InvalidParams
from expstein.metrics import DK, DW
from expstein.oracle import (PMF, compose_generations, conditioned_law,
                             exact_conditioned_geometric_distance, exact_gw_pmf,
                             exact_hitting_pmf, total_variation)
from expstein.simulators import ChainSpec, random_chain, stationary_distribution

OFFSPRING = FinitePMF([0, 1, 2], [0.25, 0.5, 0.25])
CHAINS = [ChainSpec.two_state(0.05, 0.95), ChainSpec(np.array([[0.9, 0.1], [0.1, 0.9]])),
          random_chain(4, seed=3), random_chain(6, seed=8, density=0.6)]


def _poly_compose(outer, inner):
    # exact coefficients of outer(inner(s))
    out = [Fraction(0)]
    power = [Fraction(1)]
    for c in outer:
        out = [a + b for a, b in zip(out + [Fraction(0)] * (len(power) - len(out)),
                                     [c * x for x in power] + [Fraction(0)] * max(0, len(out) - len(power)))]
        new = [Fraction(0)] * (len(power) + len(inner) - 1)
        for i, a in enumerate(power):
            for j, b in enumerate(inner):
                new[i + j] += a * b
        power = new
    return out


def _exact_generation(n):
    f = [Fraction(1, 4), Fraction(1, 2), Fraction(1, 4)]
    g = [Fraction(0), Fraction(1)]
    for _ in range(n):
        g = _poly_compose(f, g)
    return g


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_generation_law_matches_rational_arithmetic(n):
    exact = np.array([float(c) for c in _exact_generation(n)])
    got = exact_gw_pmf(OFFSPRING, n).vector
    m = max(exact.size, got.size)
    assert np.allclose(np.pad(got, (0, m - got.size)), np.pad(exact, (0, m - exact.size)), atol=1e-15)


def test_extinction_probability_two_generations():
    assert exact_gw_pmf(OFFSPRING, 2).prob(0) == pytest.approx(25 / 64, abs=1e-15)


@pytest.mark.parametrize("off", [OFFSPRING, Geometric(0.5, 0)], ids=["finite", "geometric"])
@pytest.mark.parametrize("n", [1, 5, 20, 80])
def test_critical_mean_is_conserved(off, n):
    assert exact_gw_pmf(off, n).mean == pytest.approx(1.0, abs=1e-9)


@pytest.mark.parametrize("a,b", [(1, 1), (2, 3), (5, 7)])
def test_semigroup(a, b):
    for off in (OFFSPRING, Geometric(0.5, 0)):
        lhs = exact_gw_pmf(off, a + b)
        rhs = compose_generations(exact_gw_pmf(off, a), exact_gw_pmf(off, b))
        assert total_variation(lhs, rhs) < 1e-10


@pytest.mark.parametrize("n", [1, 3, 10])
def test_conditioned_geometric_closed_form(n):
    z = exact_gw_pmf(Geometric(0.5, 0), n).conditioned_positive()
    k = np.arange(1, 40)
    g = Geometric(1.0 / (n + 1), 1)
    closed = np.asarray(g.cdf(k)) - np.asarray(g.cdf_left(k))
    assert np.allclose(z.vector[1:40], closed, atol=1e-12)
    assert conditioned_law(Geometric(0.5, 0), n).mean == pytest.approx(n + 1)


def test_conditioned_distance_sequence_rate():
    ns = [10, 20, 40, 80]
    dk = [exact_conditioned_geometric_distance(n, DK).value for n in ns]
    slope = np.polyfit(np.log(ns), np.log(dk), 1)[0]
    assert -1.25 <= slope <= -0.75
    assert exact_conditioned_geometric_distance(10, DW).value > 0
    with pytest.raises(InvalidParams):
        exact_conditioned_geometric_distance(0, DK)


@pytest.mark.parametrize("chain", CHAINS, ids=range(len(CHAINS)))
def test_renewal_identity(chain):
    pi = stationary_distribution(chain)
    for i in range(chain.size):
        stat = exact_hitting_pmf(chain, i, "stationary", horizon=30)
        ret = exact_hitting_pmf(chain, i, i, horizon=30)
        for k in range(31):
            assert stat.prob(k) == pytest.approx(pi[i] * ret.tail(k), abs=1e-10)


def test_two_state_hitting_law():
    stat = exact_hitting_pmf(CHAINS[0], 1, "stationary", horizon=5)
    assert stat.prob(0) == pytest.approx(0.05)
    assert stat.prob(1) == pytest.approx(0.95 * 0.05)
    ret = exact_hitting_pmf(CHAINS[0], 1, 1)
    assert ret.mean == pytest.approx(20.0, rel=1e-9)  # Kac: 1 / pi_1


def test_pmf_helpers():
    p = PMF.from_vector([0.25, 0.5, 0.25])
    assert p.mean == pytest.approx(1.0)
    assert p.tail(0) == pytest.approx(0.75)
    assert np.allclose(p.size_biased().probs, [0.5, 0.5])
    assert total_variation(p, np.array([0, 1, 1, 2])) == pytest.approx(0.0)


@settings(max_examples=15)
@given(st.integers(1, 8), st.integers(1, 8))
def test_semigroup_property(a, b):
    lhs = exact_gw_pmf(OFFSPRING, a + b)
    rhs = compose_generations(exact_gw_pmf(OFFSPRING, a), exact_gw_pmf(OFFSPRING, b))
    assert total_variation(lhs, rhs) < 1e-10
