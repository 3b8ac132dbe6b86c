import io
import itertools

import numpy as np
import pytest
from hypothesis import given, strategies as st

from expstein.distributions import (EmpiricalSample, Exponential, FinitePMF, Gamma, Geometric,
                                    PointMass, Uniform, scale)
from expstein.errors import DivergentIntegral, EmptySample, InvalidParams
from expstein.metrics import (DK, DW, dk_from_dw, distance_empirical, distance_exact, ks_band,
                              write_csv)
from expstein.rng import stream

EXP = Exponential(1.0)

# computed independently with mpmath (closed-form segment integrals, 30 digits)
GEOMETRIC_DW = {0.2: 0.091930350346138, 0.1: 0.044518662675105121, 0.05: 0.021928941718014172}
GEOMETRIC_DK = {0.2: 0.18126924692201814, 0.1: 0.095162581964040427, 0.05: 0.048770575499285991}
UNIFORM02_DW = 0.32380511894604291
UNIFORM02_DK = 0.15342640972002735

PAIRS = [
    scale(Geometric(0.1, 1), 0.1), scale(Geometric(0.3, 1), 0.3), Uniform(0.0, 2.0), PointMass(1.0),
    Gamma(2.0, 2.0), Gamma(0.5, 0.5), Exponential(1.3), FinitePMF([0.5, 1.5], [0.5, 0.5]),
    scale(Geometric(0.5, 0), 1.0), Uniform(0.5, 1.5),
]


@pytest.mark.parametrize("p", sorted(GEOMETRIC_DW))
def test_scaled_geometric_oracle_values(p):
    w = scale(Geometric(p, 1), p)
    assert distance_exact(w, EXP, DW).value == pytest.approx(GEOMETRIC_DW[p], abs=1e-10)
    assert distance_exact(w, EXP, DK).value == pytest.approx(GEOMETRIC_DK[p], abs=1e-10)


def test_uniform_oracle_values():
    assert distance_exact(Uniform(0, 2), EXP, DW).value == pytest.approx(UNIFORM02_DW, abs=1e-9)
    assert distance_exact(Uniform(0, 2), EXP, DK).value == pytest.approx(UNIFORM02_DK, abs=1e-9)


def test_identical_laws_are_at_distance_zero():
    for d in (EXP, Uniform(0, 2), Geometric(0.2, 1)):
        for m in (DK, DW):
            assert distance_exact(d, d, m).value == pytest.approx(0.0, abs=1e-9)


@pytest.mark.parametrize("f,g", list(itertools.combinations(PAIRS[:6], 2)))
def test_symmetry(f, g):
    for m in (DK, DW):
        assert distance_exact(f, g, m).value == pytest.approx(distance_exact(g, f, m).value, abs=1e-9)


@pytest.mark.parametrize("a,b,c", list(itertools.combinations(PAIRS[:6], 3)))
def test_triangle_inequality(a, b, c):
    for m in (DK, DW):
        ab = distance_exact(a, b, m).value
        bc = distance_exact(b, c, m).value
        ac = distance_exact(a, c, m).value
        assert ac <= ab + bc + 1e-7


@pytest.mark.parametrize("d", PAIRS)
def test_kolmogorov_below_wasserstein_transfer(d):
    dk = distance_exact(d, EXP, DK).value
    dw = distance_exact(d, EXP, DW).value
    assert dk <= dk_from_dw(dw) + 1e-9


def test_dk_from_dw():
    assert dk_from_dw(0.0) == 0.0
    assert dk_from_dw(0.01) == pytest.approx(0.174)
    assert dk_from_dw(4.0) == 1.0


def test_empirical_matches_exact_within_halfwidth():
    w = scale(Geometric(0.1, 1), 0.1)
    x = np.asarray(w.sample(stream(3, "m"), 100_000), float)
    s = EmpiricalSample(x, seed=3)
    for m in (DK, DW):
        r = distance_empirical(s, EXP, m)
        assert r.method == "empirical"
        exact = distance_exact(w, EXP, m).value
        # lattice dK is attained at a fixed atom, so its bootstrap spread can vanish
        assert abs(r.value - exact) <= 3 * r.mc_halfwidth + 2 * ks_band(x.size)


def test_empirical_ties_are_merged():
    s = EmpiricalSample(np.array([1.0, 1.0, 1.0, 1.0]))
    r = distance_empirical(s, PointMass(1.0), DK, resamples=0)
    assert r.value == pytest.approx(0.0)


def test_empirical_reproducible():
    s = EmpiricalSample(np.asarray(EXP.sample(stream(1, "r"), 2000)), seed=9)
    a = distance_empirical(s, EXP, DW)
    b = distance_empirical(s, EXP, DW)
    assert a == b


def test_wasserstein_convergence_rate():
    ratios = []
    for seed in range(20):
        errs = []
        for n in (10_000, 40_000):
            x = np.asarray(Uniform(0, 2).sample(stream(seed, "doubling", n), n), float)
            r = distance_empirical(EmpiricalSample(x), EXP, DW, resamples=0)
            errs.append(abs(r.value - UNIFORM02_DW))
        ratios.append(errs[0] / max(errs[1], 1e-15))
    assert np.mean(ratios) >= 1.5


def test_errors():
    with pytest.raises(InvalidParams):
        distance_exact(EXP, EXP, "tv")
    with pytest.raises(EmptySample):
        distance_empirical(None, EXP, DK)

    class Heavy(Gamma):
        mean = float("inf")

    with pytest.raises(DivergentIntegral):
        distance_exact(Heavy(1.0, 1.0), EXP, DW)


def test_write_csv():
    buf = io.StringIO()
    write_csv([distance_exact(EXP, Uniform(0, 2), DK)], buf)
    lines = buf.getvalue().splitlines()
    assert lines[0] == "metric,value,method,mc_halfwidth,seed"
    assert lines[1].startswith("dK,")


@given(st.floats(0.05, 0.95))
def test_dk_never_exceeds_one_and_dominated(p):
    w = scale(Geometric(p, 1), p)
    dk = distance_exact(w, EXP, DK).value
    dw = distance_exact(w, EXP, DW).value
    assert 0 <= dk <= 1
    assert dk <= dk_from_dw(dw) + 1e-9
