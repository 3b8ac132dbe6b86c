import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate

from expstein.distributions import (Exponential, FinitePMF, Gamma, Geometric, NegativeBinomial,
                                    PointMass, Uniform, moments, scale)
from expstein.errors import NotMonotoneOrderable, ZeroMean
from expstein.metrics import ks_band
from expstein.rng import stream
from expstein.transforms import (EXPONENTIAL, NBUE, NEITHER, NWUE, Equilibrium, classify_aging,
                                 equilibrium, index_equilibrium, mean_residual_life,
                                 nbue_coupling_gap, sample_equilibrium, size_bias)

BUILTINS = [
    Exponential(1.0), Geometric(0.2, 1), Geometric(0.4, 0), Uniform(0.0, 2.0), Uniform(1.0, 3.0),
    FinitePMF([1, 2, 4], [0.2, 0.5, 0.3]), PointMass(1.0), Gamma(0.5, 1.0), Gamma(3.0, 2.0),
    NegativeBinomial(2.0, 0.4, shift=1),
]


@pytest.mark.parametrize("d", BUILTINS, ids=lambda d: d.family)
def test_equilibrium_mean_by_quadrature(d):
    e = equilibrium(d)
    m, m2 = moments(d)
    top = float(e.quantile(1 - 1e-13)) if not isinstance(e, Uniform) else e.b
    pts = np.unique(np.r_[0.0, np.asarray(d.atoms(top)) if d.support_kind != "continuous" else [], top])
    pts = pts[pts <= top]
    area = sum(integrate.quad(lambda x: float(e.sf(x)), a, b, limit=200)[0] for a, b in zip(pts[:-1], pts[1:]))
    assert area == pytest.approx(m2 / (2 * m), abs=1e-6)
    assert e.mean == pytest.approx(m2 / (2 * m), rel=1e-9)


@pytest.mark.parametrize("d", BUILTINS, ids=lambda d: d.family)
def test_equilibrium_density_nonincreasing(d):
    e = equilibrium(d)
    x = np.linspace(0.0, float(e.quantile(0.999)), 2001)
    F = np.asarray(e.cdf(x))
    dens = np.diff(F) / np.diff(x)
    assert np.all(np.diff(dens) <= 1e-6)


@pytest.mark.parametrize("d", BUILTINS, ids=lambda d: d.family)
def test_stochastic_order_by_aging_class(d):
    tag = classify_aging(d, discrete=False).tag
    e = equilibrium(d)
    x = np.linspace(0.0, float(d.quantile(0.999)), 1001)
    F, Fe = np.asarray(d.cdf(x)), np.asarray(e.cdf(x))
    if tag in (NBUE, EXPONENTIAL):
        assert np.all(Fe >= F - 1e-9)
    if tag in (NWUE, EXPONENTIAL):
        assert np.all(Fe <= F + 1e-9)


@pytest.mark.parametrize("d", BUILTINS, ids=lambda d: d.family)
def test_sample_equilibrium_law(d):
    n = 100_000
    x = np.sort(np.asarray(sample_equilibrium(d, stream(5, "eq-sample"), n), float))
    e = equilibrium(d)
    F = np.asarray(e.cdf(x))
    i = np.arange(1, n + 1)
    ks = max(np.max(i / n - F), np.max(F - (i - 1) / n))
    assert ks < ks_band(n)


def test_closed_form_equilibria():
    assert isinstance(equilibrium(Exponential(2.0)), Exponential)
    u = equilibrium(PointMass(1.0))
    assert isinstance(u, Uniform) and u.b == 1.0
    e = equilibrium(Uniform(0, 2))
    x = np.linspace(0, 2, 11)
    assert np.allclose(e.cdf(x), x - x * x / 4, atol=1e-12)
    assert e.mean == pytest.approx(2 / 3)
    with pytest.raises(ZeroMean):
        equilibrium(PointMass(0.0))


def test_size_bias():
    s = size_bias(FinitePMF([0, 1, 2], [0.25, 0.5, 0.25]))
    assert np.allclose(s.probs, [0.5, 0.5])
    g = size_bias(Geometric(0.5, 1))
    assert g.mean == pytest.approx(Geometric(0.5, 1).second_moment / 2.0)
    assert isinstance(size_bias(Exponential(1.0)), Gamma)


@pytest.mark.parametrize("d,tag", [
    (Exponential(1.0), EXPONENTIAL), (Uniform(0, 2), NBUE), (PointMass(1.0), NBUE),
    (Geometric(0.3, 1), EXPONENTIAL), (Geometric(0.3, 0), NWUE), (Gamma(0.5, 1.0), NWUE),
    (Gamma(3.0, 1.0), NBUE), (FinitePMF([0.1, 1.0, 10.0], [0.45, 0.1, 0.45]), NEITHER),
])
def test_classify_aging(d, tag):
    assert classify_aging(d).tag == tag


def test_discrete_and_continuous_classes_differ_for_geometric():
    g = Geometric(0.3, 1)
    assert classify_aging(g).tag == EXPONENTIAL
    assert classify_aging(g, discrete=False).tag == NBUE
    assert nbue_coupling_gap(g) == pytest.approx(0.5)


def test_coupling_gap():
    assert nbue_coupling_gap(Uniform(0, 2)) == pytest.approx(1 / 3)
    assert nbue_coupling_gap(PointMass(1.0)) == pytest.approx(0.5)
    assert nbue_coupling_gap(Exponential(1.0)) == pytest.approx(0.0, abs=1e-12)
    with pytest.raises(NotMonotoneOrderable):
        nbue_coupling_gap(FinitePMF([0.1, 1.0, 10.0], [0.45, 0.1, 0.45]))


def test_mean_residual_life_exponential_is_constant():
    assert np.allclose(mean_residual_life(Exponential(2.0), [0.0, 1.0, 5.0]), 0.5)


def test_index_equilibrium():
    m, mu = index_equilibrium(Geometric(0.25, 1))
    assert mu == pytest.approx(4.0)
    g = Geometric(0.25, 1)
    k = np.arange(1, 30)
    assert np.allclose(m.cdf(k), g.cdf(k), atol=1e-12)
    m, mu = index_equilibrium(PointMass(3.0))
    assert mu == pytest.approx(3.0)
    assert np.allclose(m.probs, [1 / 3] * 3)


@given(st.floats(0.1, 5.0), st.floats(0.1, 5.0))
def test_uniform_equilibrium_mean_property(a, w):
    d = Uniform(a, a + w)
    m, m2 = moments(d)
    assert equilibrium(d).mean == pytest.approx(m2 / (2 * m), rel=1e-9)
    assert isinstance(equilibrium(d), Equilibrium)


@given(st.floats(0.05, 0.95), st.floats(0.1, 3.0))
def test_scaled_geometric_from_one_is_exponential_class(p, c):
    assert classify_aging(scale(Geometric(p, 1), c)).tag == EXPONENTIAL
