"""Stable first-order ("TC") kernel family and its moments.

The kernel is ``k(s, t) = gamma * alpha ** max(s, t)`` on the non-negative
integers, or ``k(s, t) = gamma * exp(-beta * max(s, t))`` on the non-negative
reals.  The two cases are unified by ``alpha = exp(-beta)``, so either decay
parameter may be supplied.  Every Gram entry in this package ultimately comes
from one of these two formulas.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

DISCRETE = "discrete"
CONTINUOUS = "continuous"


class KernelError(ValueError):
    """Invalid kernel parameters or arguments."""


@dataclass(frozen=True)
class KernelSpec:
    """First-order stable kernel, parameterized by decay and scale.

    ``decay`` is ``alpha`` in [0, 1) on the discrete axis and ``beta`` > 0 on
    the continuous axis.  ``scale`` is the positive multiplier ``gamma``.
    """

    axis: str
    decay: float
    scale: float = 1.0

    def __post_init__(self) -> None:
        if self.axis not in (DISCRETE, CONTINUOUS):
            raise KernelError(f"unknown axis {self.axis!r}")
        if self.scale <= 0:
            raise KernelError("scale must be positive")
        if self.axis == DISCRETE:
            if not 0.0 <= self.decay < 1.0:
                raise KernelError("discrete decay alpha must be in [0, 1)")
        else:
            if not self.decay > 0.0:
                raise KernelError("continuous decay beta must be positive")

    @classmethod
    def discrete(cls, alpha: float | None = None, *, beta: float | None = None,
                 gamma: float = 1.0) -> "KernelSpec":
        if (alpha is None) == (beta is None):
            raise KernelError("supply exactly one of alpha or beta")
        if alpha is None:
            alpha = math.exp(-beta)
        return cls(DISCRETE, alpha, gamma)

    @classmethod
    def continuous(cls, beta: float, gamma: float = 1.0) -> "KernelSpec":
        return cls(CONTINUOUS, beta, gamma)

    @property
    def alpha(self) -> float:
        """Per-step decay factor (``exp(-beta)`` on the continuous axis)."""
        if self.axis == DISCRETE:
            return self.decay
        return math.exp(-self.decay)

    @property
    def beta(self) -> float:
        """Exponential decay rate (``-ln alpha`` on the discrete axis)."""
        if self.axis == CONTINUOUS:
            return self.decay
        if self.decay == 0.0:
            return math.inf
        return -math.log(self.decay)

    @property
    def gamma(self) -> float:
        return self.scale


def kernel_eval(spec: KernelSpec, s, t):
    """Evaluate k(s, t); symmetric, accepts scalars or arrays."""
    s = np.asarray(s, dtype=float)
    t = np.asarray(t, dtype=float)
    if np.any(s < 0) or np.any(t < 0):
        raise KernelError("kernel arguments must be non-negative")
    m = np.maximum(s, t)
    if spec.axis == DISCRETE:
        out = spec.gamma * spec.decay ** m
    else:
        out = spec.gamma * np.exp(-spec.decay * m)
    if out.ndim == 0:
        return float(out)
    return out


def kernel_moments(spec: KernelSpec, n: int, tol: float = 1e-10,
                   method: str = "analytic") -> float:
    """n-th moment of sqrt(k(t, t)): sum (discrete) or integral (continuous).

    ``method='analytic'`` uses the exact geometric / Gamma-function closed
    forms; ``method='truncated-sum'`` sums/integrates numerically on a
    deterministic horizon with tail error below ``tol``.
    """
    if n not in (0, 1):
        raise KernelError("only moments n in {0, 1} are supported")
    if tol <= 0:
        raise KernelError("tol must be positive")
    g = math.sqrt(spec.gamma)
    if method == "analytic":
        if spec.axis == DISCRETE:
            r = math.sqrt(spec.decay)
            if n == 0:
                return g / (1.0 - r)
            return g * r / (1.0 - r) ** 2
        beta = spec.decay
        # integral of t^n exp(-beta t / 2) dt = n! (2/beta)^(n+1)
        return g * math.factorial(n) * (2.0 / beta) ** (n + 1)
    if method != "truncated-sum":
        raise KernelError(f"unknown method {method!r}")
    beta = spec.beta
    if not beta > 0:
        raise KernelError("non-convergent kernel configuration")

    def tail(T: float) -> float:
        # bound on sum/integral of t^n sqrt(k(t,t)) beyond T
        if spec.axis == DISCRETE:
            r = math.sqrt(spec.decay)
            if n == 0:
                return g * r ** (T + 1) / (1.0 - r)
            return g * r ** (T + 1) * ((T + 1) * (1.0 - r) + r) / (1.0 - r) ** 2
        h = beta / 2.0
        if n == 0:
            return g * math.exp(-h * T) / h
        return g * (T + 1.0 / h) * math.exp(-h * T) / h

    horizon = 1.0
    while tail(horizon) > tol:
        horizon *= 2.0
        if horizon > 1e9:
            raise KernelError("truncation horizon overflow")
    if spec.axis == DISCRETE:
        t = np.arange(0, int(math.ceil(horizon)) + 1, dtype=float)
        return float(np.sum(t ** n * np.sqrt(kernel_eval(spec, t, t))))
    from scipy.integrate import quad

    val, _ = quad(lambda t: t ** n * math.sqrt(kernel_eval(spec, t, t)),
                  0.0, horizon, limit=500)
    return float(val)


def mu_bound(spec: KernelSpec, n: int) -> float:
    """Analytic upper bound gamma^(1/2) (2/beta)^(n+1) n! on the n-th moment.

    Exact for the continuous-axis kernel.  On the discrete axis the bound
    compares a sum against the integral and can undershoot the n = 0 moment
    by up to the t = 0 term; prefer exact moments there.
    """
    beta = spec.beta
    g = math.sqrt(spec.gamma)
    if math.isinf(beta):
        return 0.0 if n >= 1 else g * 2.0  # degenerate alpha = 0 case
    val = g * (2.0 / beta) ** (n + 1) * math.factorial(n)
    if not math.isfinite(val):
        raise KernelError("moment bound overflows for decay near 1")
    return val
