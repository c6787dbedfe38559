"""Shared builders for the benchmark datasets used across the test suite."""

from __future__ import annotations

import numpy as np

from freqid.kernels import CONTINUOUS, DISCRETE
from freqid.signals import Dataset, DiscreteInput, PiecewiseConstantInput
from freqid.sim import (add_noise_snr, example_continuous_tf,
                        example_discrete_tf, simulate)


def make_discrete_dataset(input_seed: int, noise_seed: int, n: int = 150,
                          snr_db: float = 14.5) -> Dataset:
    """Benchmark discrete-time record: white Gaussian input through the
    third-order example system, plus white output noise at the given SNR."""
    tf = example_discrete_tf()
    rng = np.random.default_rng(input_seed)
    u = DiscreteInput(rng.standard_normal(n))
    times = np.arange(n, dtype=float)
    y = simulate(tf, u, times)
    return Dataset(DISCRETE, u, times, add_noise_snr(y, snr_db, noise_seed))


def make_continuous_dataset(input_seed: int, noise_seed: int, n: int = 150,
                            n_segments: int = 50, t_end: float = 10.0,
                            snr_db: float = 20.0) -> Dataset:
    """Benchmark continuous-time record: piecewise-constant random input
    through the fourth-order example system."""
    tf = example_continuous_tf()
    rng = np.random.default_rng(input_seed)
    u = PiecewiseConstantInput(np.linspace(0.0, t_end, n_segments + 1),
                               rng.standard_normal(n_segments))
    times = np.linspace(t_end / n, t_end, n)
    y = simulate(tf, u, times)
    return Dataset(CONTINUOUS, u, times, add_noise_snr(y, snr_db, noise_seed))
