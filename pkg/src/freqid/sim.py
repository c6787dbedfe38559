"""Reference LTI simulators and noise injection for experiment data.

Discrete systems run their exact difference equation; continuous systems are
propagated segment-exactly over each constant-input interval with the matrix
exponential (scipy's scaling-and-squaring Pade-13 `expm`).  Noise is seeded
through numpy's default PCG64 generator so runs are reproducible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
import scipy.signal

from .kernels import CONTINUOUS, DISCRETE
from .signals import DiscreteInput, PiecewiseConstantInput


class SimError(ValueError):
    """Invalid simulation setup."""


@dataclass(frozen=True)
class RationalTF:
    """Rational transfer function, coefficients in descending powers of z/s."""

    axis: str
    num: np.ndarray
    den: np.ndarray

    def __post_init__(self) -> None:
        num = np.atleast_1d(np.asarray(self.num, dtype=float))
        den = np.atleast_1d(np.asarray(self.den, dtype=float))
        den = np.trim_zeros(den, "f")
        if den.size == 0:
            raise SimError("denominator is identically zero")
        if self.axis not in (DISCRETE, CONTINUOUS):
            raise SimError(f"unknown axis {self.axis!r}")
        if num.size > den.size:
            raise SimError("improper transfer function (num degree > den degree)")
        object.__setattr__(self, "num", num)
        object.__setattr__(self, "den", den)

    @property
    def poles(self) -> np.ndarray:
        return np.roots(self.den)

    @property
    def is_stable(self) -> bool:
        p = self.poles
        if p.size == 0:
            return True
        if self.axis == DISCRETE:
            return bool(np.all(np.abs(p) < 1.0))
        return bool(np.all(p.real < 0.0))


def _zinv_coeffs(tf: RationalTF):
    """(b, a) for the difference equation in powers of z^{-1}."""
    b = np.concatenate([np.zeros(tf.den.size - tf.num.size), tf.num])
    return b, tf.den


def simulate(tf: RationalTF, input, times) -> np.ndarray:
    """Noise-free output of the system at the requested sample times."""
    times = np.atleast_1d(np.asarray(times, dtype=float))
    if tf.axis == DISCRETE:
        if not isinstance(input, DiscreteInput):
            raise SimError("discrete system needs a DiscreteInput")
        if np.any(times != np.round(times)) or np.any(times < 0):
            raise SimError("discrete sample times must be non-negative integers")
        horizon = int(times.max()) + 1
        u = np.zeros(horizon)
        n = min(horizon, len(input.samples))
        u[:n] = input.samples[:n]
        b, a = _zinv_coeffs(tf)
        y = scipy.signal.lfilter(b, a, u)
        return y[times.astype(int)]
    if not isinstance(input, PiecewiseConstantInput):
        raise SimError("continuous system needs a PiecewiseConstantInput")
    if np.any(np.diff(times) <= 0) or np.any(times < 0):
        raise SimError("sample times must be strictly increasing and >= 0")
    A, B, C, D = scipy.signal.tf2ss(tf.num, tf.den)
    n = A.shape[0]
    # event times: input breakpoints and requested samples, in order
    events = np.unique(np.concatenate([input.breakpoints, times,
                                       [0.0, times.max()]]))
    events = events[events <= times.max() + 1e-300]
    x = np.zeros(n)
    out = {}
    want = set(times.tolist())
    aug = np.zeros((n + 1, n + 1))
    aug[:n, :n] = A
    aug[:n, n] = B[:, 0]
    t_prev = 0.0
    if 0.0 in want:
        out[0.0] = float((C @ x)[0] + D[0, 0] * input.value(0.0))
    for t in events:
        if t <= t_prev:
            continue
        dt = t - t_prev
        uval = input.value(t_prev)  # constant on [t_prev, t)
        M = sla.expm(aug * dt)
        x = M[:n, :n] @ x + M[:n, n] * uval
        t_prev = t
        if t in want:
            out[t] = float((C @ x)[0] + D[0, 0] * input.value(t))
    return np.array([out[t] for t in times.tolist()])


def impulse_response_of(tf: RationalTF, grid) -> np.ndarray:
    """Impulse response samples on the grid (feed-through excluded in CT)."""
    grid = np.atleast_1d(np.asarray(grid, dtype=float))
    if tf.axis == DISCRETE:
        horizon = int(grid.max()) + 1
        delta = np.zeros(horizon)
        delta[0] = 1.0
        b, a = _zinv_coeffs(tf)
        g = scipy.signal.lfilter(b, a, delta)
        return g[grid.astype(int)]
    A, B, C, _ = scipy.signal.tf2ss(tf.num, tf.den)
    out = np.empty(grid.size)
    for i, t in enumerate(grid):
        out[i] = float((C @ sla.expm(A * t) @ B[:, 0])[0])
    return out


def add_noise_snr(y: np.ndarray, snr_db: float, seed: int) -> np.ndarray:
    """Add white Gaussian noise at the requested SNR (dB); inf leaves y alone."""
    y = np.asarray(y, dtype=float)
    if y.size == 0:
        raise SimError("empty output vector")
    if math.isinf(snr_db):
        return y.copy()
    var = float(np.var(y))
    if var == 0.0:
        raise SimError("zero-variance output with finite SNR")
    sigma = math.sqrt(var * 10.0 ** (-snr_db / 10.0))
    rng = np.random.default_rng(seed)
    return y + sigma * rng.standard_normal(y.size)


def example_discrete_tf() -> RationalTF:
    """Third-order discrete benchmark: a dominant first-order lag plus a
    small lightly-damped resonance, gain-bounded by 1."""
    return RationalTF(DISCRETE, np.array([1.06, 0.91, 0.93]),
                      np.array([2.0, 1.0, 0.8, -0.9]))


def example_continuous_tf() -> RationalTF:
    """Fourth-order continuous benchmark with unit gain bound."""
    return RationalTF(
        CONTINUOUS,
        -np.array([2.0, 3.6, 2.095, 0.396]),
        np.array([0.461, 2.628, 4.389, 2.662, 0.519]),
    )
