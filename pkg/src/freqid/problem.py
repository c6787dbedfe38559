"""Finite-problem construction: frequency range, partition, Gram matrix.

The estimator solves

    min_x  ||A x - y||^2 + lambda x^T Phi x
    s.t.   (b_j^T x)^2 + (c_j^T x)^2 <= 1 - eps   for each partition frequency,

where Phi is the Gram matrix of the representers, A is its first n_D rows
(input functionals), and b_j / c_j are the literal columns of Phi belonging
to the Re/Im frequency functionals at omega_j.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .functionals import (FREQ_IMAG, FREQ_REAL, INPUT, BasisDescriptor,
                          freq_freq_cross, freq_imag, freq_real, freq_u_cross,
                          input_at, uu_block)
from .kernels import DISCRETE, KernelSpec, kernel_moments
from .signals import Dataset

DIMENSION_CAP = 20_000


class ProblemError(ValueError):
    """Invalid problem construction."""


@dataclass(frozen=True)
class FrequencyPartition:
    """Sorted frequency grid 0 = omega_0 < ... < omega_{n_P} = omega_max."""

    omegas: np.ndarray

    def __post_init__(self) -> None:
        om = np.atleast_1d(np.asarray(self.omegas, dtype=float))
        if om.size < 1 or om[0] != 0.0:
            raise ProblemError("partition must start at 0")
        if np.any(np.diff(om) <= 0):
            raise ProblemError("partition frequencies must be strictly increasing")
        object.__setattr__(self, "omegas", om)

    @property
    def omega_max(self) -> float:
        return float(self.omegas[-1])

    @property
    def n_intervals(self) -> int:
        return len(self.omegas) - 1

    @property
    def mesh(self) -> float:
        if len(self.omegas) == 1:
            return 0.0
        return float(np.max(np.diff(self.omegas)))


def omega_max_ct(spec: KernelSpec, y: np.ndarray, lam: float) -> float:
    """Frequency beyond which the constraint can never be active.

    Any solution obeys |F_omega(g)|^2 <= (sum y^2 / lambda) * 2 gamma /
    (omega^2 + beta^2), so constraints above the returned value are vacuous.
    """
    if lam <= 0:
        raise ProblemError("lambda must be positive")
    ssq = float(np.sum(np.square(y)))
    if ssq == 0.0:
        return 0.0
    return math.sqrt(max(0.0, 2.0 * spec.gamma * ssq / lam - spec.decay ** 2))


def mesh_bound(spec: KernelSpec, y: np.ndarray, lam: float, eps: float,
               conservative: bool = False) -> float:
    """Largest partition mesh that certifies the between-node gain bound.

    Equal to 2*eps*lambda / (4 mu0 mu1 sum y^2); ``conservative=True`` uses
    the analytic moment upper bounds instead of exact moments.
    """
    if lam <= 0 or not 0 < eps < 1:
        raise ProblemError("need lambda > 0 and eps in (0, 1)")
    if conservative:
        from .kernels import mu_bound
        mu0, mu1 = mu_bound(spec, 0), mu_bound(spec, 1)
    else:
        mu0, mu1 = kernel_moments(spec, 0), kernel_moments(spec, 1)
    if mu0 <= 0 or mu1 <= 0:
        raise ProblemError("degenerate kernel: zero moment")
    ssq = float(np.sum(np.square(y)))
    if ssq == 0.0:
        return math.inf
    return 2.0 * eps * lam / (4.0 * mu0 * mu1 * ssq)


def build_partition(omega_max: float, mesh_target: float) -> FrequencyPartition:
    """Uniform partition of [0, omega_max] with mesh <= mesh_target."""
    if omega_max < 0:
        raise ProblemError("omega_max must be >= 0")
    if mesh_target <= 0:
        raise ProblemError("mesh_target must be positive")
    if omega_max == 0.0:
        return FrequencyPartition(np.array([0.0]))
    n = int(math.ceil(omega_max / mesh_target))
    return FrequencyPartition(np.linspace(0.0, omega_max, n + 1))


@dataclass(frozen=True)
class GramProblem:
    """Assembled finite problem; see module docstring for the layout."""

    phi: np.ndarray
    y: np.ndarray
    lam: float
    eps: float
    descriptors: tuple
    n_data: int
    certified: bool = field(default=False)

    @property
    def m(self) -> int:
        return self.phi.shape[0]

    @property
    def n_constraints(self) -> int:
        return (self.m - self.n_data) // 2

    @property
    def a_rows(self) -> np.ndarray:
        """Objective matrix A: rows are the input-functional columns of Phi."""
        return self.phi[: self.n_data, :]

    def b_vec(self, j: int) -> np.ndarray:
        return self.phi[:, self.n_data + 2 * j]

    def c_vec(self, j: int) -> np.ndarray:
        return self.phi[:, self.n_data + 2 * j + 1]

    @property
    def constraint_omegas(self) -> np.ndarray:
        return np.array([d.arg for d in self.descriptors[self.n_data::2]])


def _interleaved_freq_block(Zr: np.ndarray, Zi: np.ndarray) -> np.ndarray:
    """Pack the four Re/Im pairings into the (2 n_w1) x (2 n_w2) layout."""
    n1, n2 = Zr.shape
    blk = np.empty((2 * n1, 2 * n2))
    blk[0::2, 0::2] = Zr.real
    blk[0::2, 1::2] = Zi.real
    blk[1::2, 0::2] = Zr.imag
    blk[1::2, 1::2] = Zi.imag
    return blk


def assemble(d: Dataset, spec: KernelSpec, omegas, lam: float, eps: float,
             tol: float = 1e-12, certified: bool = False) -> GramProblem:
    """Build the Gram problem for the given constraint frequencies.

    ``omegas`` may be a FrequencyPartition, an array of frequencies, or None /
    empty for the unconstrained (pure regression) problem.
    """
    if lam <= 0 or not 0 < eps < 1:
        raise ProblemError("need lambda > 0 and eps in (0, 1)")
    if isinstance(omegas, FrequencyPartition):
        om = omegas.omegas
    elif omegas is None:
        om = np.empty(0)
    else:
        om = np.atleast_1d(np.asarray(omegas, dtype=float))
    taus = d.sample_times
    n_d = taus.size
    m = n_d + 2 * om.size
    if m > DIMENSION_CAP:
        raise ProblemError(f"problem dimension {m} exceeds cap {DIMENSION_CAP}")

    descriptors = [input_at(t) for t in taus]
    for w in om:
        descriptors.append(freq_real(w))
        descriptors.append(freq_imag(w))

    phi = np.empty((m, m))
    phi[:n_d, :n_d] = uu_block(d, spec)
    if om.size:
        Z = freq_u_cross(d, spec, om, taus, tol)          # (n_w, n_d)
        phi[:n_d, n_d + 0::2] = Z.real.T
        phi[:n_d, n_d + 1::2] = Z.imag.T
        Zr, Zi = freq_freq_cross(spec, om, om, tol)
        phi[n_d:, n_d:] = _interleaved_freq_block(Zr, Zi)
        phi[n_d:, :n_d] = phi[:n_d, n_d:].T
    # exact symmetry: keep the upper triangle, mirror it down
    iu = np.triu_indices(m, 1)
    phi[iu[1], iu[0]] = phi[iu]
    return GramProblem(phi=phi, y=np.array(d.outputs, dtype=float), lam=lam,
                       eps=eps, descriptors=tuple(descriptors), n_data=n_d,
                       certified=certified)
