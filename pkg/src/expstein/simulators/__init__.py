"""Simulators for random sums, Markov hitting times, pattern waiting times and branching processes."""
from .branching import (GenStats, SpineBatch, gw_generation_sample, next_generation, spine_sample,
                        spine_samples, yaglom_rate_experiment)
from .markov import (ChainSpec, diagonal_deviation_sum, random_chain, simulate_hitting_times,
                     stationary_distribution)
from .patterns import HEAD_RUN, START_OF_RUN, overlaps_itself, simulate_pattern_time
from .sums import IID, IndependentSequence, MDependent, geometric_coupling_tuples, simulate_random_sum

__all__ = [
    "ChainSpec", "GenStats", "HEAD_RUN", "IID", "IndependentSequence", "MDependent", "SpineBatch",
    "START_OF_RUN", "diagonal_deviation_sum", "geometric_coupling_tuples", "gw_generation_sample",
    "next_generation", "overlaps_itself", "random_chain", "simulate_hitting_times",
    "simulate_pattern_time", "simulate_random_sum", "spine_sample", "spine_samples",
    "stationary_distribution", "yaglom_rate_experiment",
]
