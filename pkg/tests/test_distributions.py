import numpy as np
import pytest
from hypothesis import given, strategies as st

from expstein.distributions import (EmpiricalSample, Exponential, FinitePMF, Gamma, Geometric,
                                    NegativeBinomial, PointMass, Uniform, from_literal, make_builtin,
                                    moments, normalized, scale)
from expstein.errors import EmptySample, InvalidParams, UnknownFamily
from expstein.metrics import ks_band
from expstein.rng import stream

BUILTINS = [
    Exponential(1.0), Exponential(2.5), Geometric(0.1, 1), Geometric(0.3, 0), Uniform(0.0, 2.0),
    Uniform(1.0, 3.0), FinitePMF([0, 1, 2], [0.25, 0.5, 0.25]), PointMass(1.0), Gamma(0.5, 1.0),
    Gamma(3.0, 2.0), NegativeBinomial(2.0, 0.4, shift=1),
]
CONTINUOUS = [d for d in BUILTINS if isinstance(d, (Exponential, Uniform, Gamma))]
LATTICE = [d for d in BUILTINS if d not in CONTINUOUS]


def _ks(x, d):
    x = np.sort(x)
    n = x.size
    atoms, idx = np.unique(x, return_index=True)
    ecdf_right = np.r_[idx[1:], n] / n
    ecdf_left = idx / n
    F = np.asarray(d.cdf(atoms))
    Fl = np.asarray(d.cdf_left(atoms))
    return max(np.max(np.abs(ecdf_right - F)), np.max(np.abs(ecdf_left - Fl)))


@pytest.mark.parametrize("d", BUILTINS, ids=lambda d: d.family)
def test_sampler_matches_cdf(d):
    x = np.asarray(d.sample(stream(1, "dist-ks"), 100_000), dtype=float)
    assert _ks(x, d) < ks_band(100_000)


@pytest.mark.parametrize("d", CONTINUOUS, ids=lambda d: d.family)
def test_continuous_round_trip(d):
    u = np.linspace(0.01, 0.99, 99)
    assert np.allclose(d.cdf(d.quantile(u)), u, atol=1e-9)
    x = np.asarray(d.quantile(u))
    assert np.allclose(d.quantile(d.cdf(x)), x, atol=1e-9)


@pytest.mark.parametrize("d", LATTICE, ids=lambda d: d.family)
def test_lattice_quantile_is_smallest_point(d):
    u = np.linspace(0.01, 0.99, 99)
    q = np.asarray(d.quantile(u), dtype=float)
    assert np.all(np.asarray(d.cdf(q)) >= u - 1e-12)
    step = d.step or 1.0
    below = q - step
    ok = below >= d.lower
    assert np.all(np.asarray(d.cdf(below[ok])) < u[ok])


def test_geometric_closed_forms():
    g = Geometric(0.1, 1)
    assert g.mean == 10.0
    assert g.cdf(2) == pytest.approx(0.19)
    assert g.sf(2) == pytest.approx(0.81)
    g0 = Geometric(0.5, 0)
    assert g0.mean == pytest.approx(1.0)
    assert g0.cdf(0) == pytest.approx(0.5)


def test_moments_and_stop_loss():
    assert moments(Uniform(0, 2)) == pytest.approx((1.0, 4 / 3))
    assert moments(Exponential(1.0)) == pytest.approx((1.0, 2.0))
    e = Exponential(1.0)
    assert e.stop_loss(1.0) == pytest.approx(np.exp(-1.0))
    f = FinitePMF([1, 3], [0.5, 0.5])
    assert f.stop_loss(2.0) == pytest.approx(0.5)


def test_scale_and_normalized():
    g = scale(Geometric(0.1, 1), 0.1)
    assert g.mean == pytest.approx(1.0)
    assert g.cdf(0.2) == pytest.approx(Geometric(0.1, 1).cdf(2))
    assert normalized(Uniform(0, 4)).mean == pytest.approx(1.0)


def test_builders_and_errors():
    assert isinstance(make_builtin("geometric-from-1", [0.2]), Geometric)
    d = from_literal({"family": "uniform", "params": [0.0, 2.0]})
    assert d.mean == pytest.approx(1.0)
    with pytest.raises(UnknownFamily):
        make_builtin("cauchy", [1.0])
    with pytest.raises(InvalidParams):
        Geometric(1.5, 1)
    with pytest.raises(InvalidParams):
        Uniform(2.0, 1.0)
    with pytest.raises(EmptySample):
        EmpiricalSample(np.array([]))


@given(st.floats(0.01, 0.99), st.floats(0.0, 50.0))
def test_geometric_cdf_sf_complement(p, x):
    g = Geometric(p, 1)
    assert g.cdf(x) + g.sf(x) == pytest.approx(1.0, abs=1e-12)


@given(st.lists(st.floats(0.0, 10.0), min_size=1, max_size=8),
       st.lists(st.floats(0.01, 1.0), min_size=8, max_size=8))
def test_finite_pmf_normalizes(values, weights):
    w = np.array(weights[: len(values)])
    d = FinitePMF(values, w / w.sum())
    assert d.cdf(max(values)) == pytest.approx(1.0)
    assert d.mean == pytest.approx(float(np.dot(values, w / w.sum())))
