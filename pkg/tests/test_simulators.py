import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from expstein.distributions import Exponential, FinitePMF, Geometric, PointMass, Uniform
from expstein.errors import ExtinctionOnly, InvalidParams, NoConvergence, ReducibleChain
from expstein.metrics import DK, distance_empirical, ks_band
from expstein.oracle import exact_gw_pmf, exact_hitting_pmf, total_variation
from expstein.simulators import (HEAD_RUN, IID, START_OF_RUN, ChainSpec, IndependentSequence,
                                 MDependent, diagonal_deviation_sum, geometric_coupling_tuples,
                                 gw_generation_sample, overlaps_itself, random_chain,
                                 simulate_hitting_times, simulate_pattern_time,
                                 simulate_random_sum, spine_sample, spine_samples,
                                 stationary_distribution, yaglom_rate_experiment)

OFFSPRING = FinitePMF([0, 1, 2], [0.25, 0.5, 0.25])
TWO_STATE = ChainSpec.two_state(0.05, 0.95)


# -- random sums -------------------------------------------------------------

def test_random_sum_geometric_unit_summands():
    s = simulate_random_sum(Geometric(0.1, 1), IID(PointMass(1.0)), 100_000, seed=1)
    assert s.extra["mu"] == pytest.approx(10.0)
    assert s.values.mean() == pytest.approx(1.0, abs=0.02)
    assert np.allclose(s.values * 10, np.round(s.values * 10))


def test_random_sum_exponential_summands_is_exponential():
    s = simulate_random_sum(Geometric(0.2, 1), IID(Exponential(1.0)), 50_000, seed=2)
    r = distance_empirical(s, Exponential(1.0), DK, resamples=0)
    assert r.value < ks_band(50_000)


def test_random_sum_other_generators():
    seq = IndependentSequence((PointMass(1.0), PointMass(3.0)))
    s = simulate_random_sum(PointMass(2.0), seq, 10, seed=3, normalize=False)
    assert np.all(s.values == 4.0)
    s = simulate_random_sum(Geometric(0.5, 1), MDependent(Uniform(0, 2), 2), 20_000, seed=3)
    assert s.values.mean() == pytest.approx(1.0, abs=0.05)


def test_random_sum_threads_invariant():
    a = simulate_random_sum(Geometric(0.1, 1), IID(Uniform(0, 2)), 20_000, seed=9, threads=1)
    b = simulate_random_sum(Geometric(0.1, 1), IID(Uniform(0, 2)), 20_000, seed=9, threads=3)
    assert np.array_equal(a.values, b.values)


def test_geometric_coupling_tuples_structure():
    p = 0.2
    t = geometric_coupling_tuples(p, 5000, seed=1, m=2)
    w, w1, w2, g = t.T
    mu = (1 - p) / p
    assert np.allclose(w1 - w, 1 / mu)
    assert np.all(w2 <= w + 1e-15) and np.all(w - w2 <= 2 / mu + 1e-12)
    assert np.all(g == mu)


# -- Markov chains -------------------------------------------------------------

def test_two_state_chain():
    assert np.allclose(stationary_distribution(TWO_STATE), [0.95, 0.05])
    assert diagonal_deviation_sum(TWO_STATE, 1) == pytest.approx(0.0, abs=1e-12)


def test_diagonal_sum_lazy_chain():
    c = ChainSpec(np.array([[0.9, 0.1], [0.1, 0.9]]))
    # P^n_00 - 1/2 = 0.8^n / 2, summed over n >= 1
    assert diagonal_deviation_sum(c, 0) == pytest.approx(0.5 * 0.8 / 0.2, rel=1e-9)


def test_periodic_chain_does_not_converge():
    c = ChainSpec(np.array([[0.0, 1.0], [1.0, 0.0]]))
    with pytest.raises(NoConvergence):
        diagonal_deviation_sum(c, 0, max_steps=2000)


def test_reducible_chain_rejected():
    c = ChainSpec(np.array([[1.0, 0.0], [0.5, 0.5]]))
    with pytest.raises(ReducibleChain):
        stationary_distribution(c)


def test_invalid_matrix():
    with pytest.raises(InvalidParams):
        ChainSpec(np.array([[0.5, 0.6], [0.5, 0.5]]))


def _renewal_check(chain, i, reps, seed):
    pi_i = stationary_distribution(chain)[chain.index(i)]
    ret = exact_hitting_pmf(chain, i, i, horizon=25)
    s = simulate_hitting_times(chain, i, reps, seed)
    t = s.values.astype(np.int64)
    for k in range(21):
        expect = pi_i * ret.tail(k)
        freq = np.mean(t == k)
        se = math.sqrt(expect * (1 - expect) / reps)
        assert abs(freq - expect) <= 3 * se, k


def test_renewal_identity_two_state():
    _renewal_check(TWO_STATE, 1, 100_000, seed=21)


def test_renewal_identity_random_chain():
    _renewal_check(random_chain(4, seed=3), 2, 100_000, seed=22)


def test_hitting_threads_invariant():
    c = random_chain(5, seed=1)
    a = simulate_hitting_times(c, 0, 20_000, seed=4, threads=1)
    b = simulate_hitting_times(c, 0, 20_000, seed=4, threads=2)
    assert np.array_equal(a.values, b.values)


def test_two_state_scaled_hitting_time_close_to_exponential():
    s = simulate_hitting_times(TWO_STATE, 1, 100_000, seed=5, normalized=True)
    r = distance_empirical(s, Exponential(1.0), DK)
    assert r.value <= 0.1 + 3 * r.mc_halfwidth


# -- patterns -------------------------------------------------------------------

def test_pattern_certain_heads():
    s = simulate_pattern_time(1.0, "H", START_OF_RUN, 100, seed=1)
    assert np.all(s.values == 1.0)


def test_head_run_mean():
    # flips before the first run of k heads starts: E = (p^-k - 1)/q - k
    p, k = 0.5, 3
    s = simulate_pattern_time(p, None, HEAD_RUN, 100_000, seed=2, k=k)
    expect = (p ** -k - 1) / (1 - p) - k
    se = s.values.std() / math.sqrt(s.n)
    assert abs(s.values.mean() - expect) <= 4 * se


def test_non_overlapping_start_mean():
    # a non-overlapping pattern of probability pi first completes after 1/pi flips on average
    s = simulate_pattern_time(0.5, "HHT", START_OF_RUN, 100_000, seed=3)
    mean_completion = s.values.mean() + 2
    se = s.values.std() / math.sqrt(s.n)
    assert abs(mean_completion - 8.0) <= 4 * se


def test_overlaps_itself():
    assert overlaps_itself("HH") and overlaps_itself("HTH")
    assert not overlaps_itself("HHT") and not overlaps_itself("H")


def test_pattern_threads_invariant():
    a = simulate_pattern_time(0.5, "HTT", START_OF_RUN, 20_000, seed=7, threads=1)
    b = simulate_pattern_time(0.5, "HTT", START_OF_RUN, 20_000, seed=7, threads=4)
    assert np.array_equal(a.values, b.values)


# -- branching --------------------------------------------------------------------

@settings(max_examples=25)
@given(st.integers(0, 2**32), st.integers(1, 6))
def test_genstats_identities(seed, n):
    g = spine_sample(OFFSPRING, n, seed)
    assert g.S_n == g.L_n + g.R_n
    assert g.S_n == 1 + sum(s for s, _, _, _ in g.per_split)
    assert g.R_n == 1 + sum(r for _, _, r, _ in g.per_split)
    assert g.R_n_star == 1 + sum(rs for _, _, _, rs in g.per_split)
    assert g.R_n_star >= 1
    assert all(min(c) >= 0 for c in g.per_split)


def test_size_biased_generation_law():
    b = spine_samples(OFFSPRING, 3, 1_000_000, seed=11)
    oracle = exact_gw_pmf(OFFSPRING, 3).size_biased()
    assert total_variation(oracle, b.S_n) < 0.01


@pytest.mark.parametrize("n", [1, 2, 3, 4, 5])
def test_right_count_matches_conditioned_law(n):
    b = spine_samples(OFFSPRING, n, 100_000, seed=12 + n)
    oracle = exact_gw_pmf(OFFSPRING, n).conditioned_positive()
    assert total_variation(oracle, b.R_n_star) < 0.02


def test_spine_position_uniform_given_size():
    b = spine_samples(OFFSPRING, 2, 1_000_000, seed=13)
    s, r = b.S_n, b.R_n
    for size in np.unique(s):
        if size < 2:
            continue
        obs = np.bincount(r[s == size], minlength=size + 1)[1:]
        if obs.sum() < 50 * size:
            continue
        assert stats.chisquare(obs).pvalue > 0.001


def test_spine_threads_invariant():
    a = spine_samples(OFFSPRING, 3, 10_000, seed=3, threads=1)
    b = spine_samples(OFFSPRING, 3, 10_000, seed=3, threads=2)
    assert np.array_equal(a.R_star, b.R_star) and np.array_equal(a.L, b.L)


def test_conditioned_geometric_generation():
    s = gw_generation_sample(Geometric(0.5, 0), 20, 100_000, seed=14, condition_on_survival=True)
    r = distance_empirical(s, Geometric(1 / 21, 1), DK, resamples=0)
    assert r.value < ks_band(100_000)


def test_unconditioned_generation_law():
    s = gw_generation_sample(OFFSPRING, 2, 200_000, seed=15)
    assert total_variation(exact_gw_pmf(OFFSPRING, 2), s.values.astype(np.int64)) < 0.01


def test_branching_errors():
    with pytest.raises(ExtinctionOnly):
        gw_generation_sample(PointMass(0.0), 2, 10, seed=1, condition_on_survival=True)
    with pytest.raises(InvalidParams):
        spine_samples(OFFSPRING, 0, 10, seed=1)


def test_binary_offspring_spine_is_deterministic_at_one():
    g = spine_sample(FinitePMF([0, 2], [0.5, 0.5]), 1, seed=0)
    assert g.S_n == 2


def test_yaglom_rate_experiment_decays():
    res = yaglom_rate_experiment(Geometric(0.5, 0), [5, 10, 20], 20_000, seed=16, resamples=20)
    oracle = [row["dw_oracle"] for row in res["rows"]]
    assert oracle[0] > oracle[1] > oracle[2]
    assert -1.25 <= res["slope_oracle"] <= -0.75
    for row in res["rows"]:
        assert row["dw_oracle"] <= res["fitted_C"] * math.log(row["n"]) / row["n"] + 1e-12
