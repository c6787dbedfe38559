"""Finite-problem construction: partition, frequency range, Gram assembly."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from freqid import functionals as fn
from freqid.kernels import DISCRETE, KernelSpec, kernel_moments
from freqid.problem import (DIMENSION_CAP, FrequencyPartition, ProblemError,
                            assemble, build_partition, mesh_bound,
                            omega_max_ct)
from freqid.signals import Dataset, DiscreteInput


def small_dataset(n=6, seed=0):
    rng = np.random.default_rng(seed)
    u = DiscreteInput(rng.standard_normal(n))
    t = np.arange(n, dtype=float)
    return Dataset(DISCRETE, u, t, rng.standard_normal(n))


class TestFrequencyPartition:
    def test_must_start_at_zero(self):
        with pytest.raises(ProblemError):
            FrequencyPartition(np.array([0.1, 0.2]))

    def test_strictly_increasing(self):
        with pytest.raises(ProblemError):
            FrequencyPartition(np.array([0.0, 0.5, 0.5]))

    def test_mesh_and_counts(self):
        p = FrequencyPartition(np.array([0.0, 0.25, 1.0]))
        assert p.n_intervals == 2
        assert p.mesh == 0.75
        assert p.omega_max == 1.0
        assert FrequencyPartition(np.array([0.0])).mesh == 0.0

    @given(st.floats(0.1, 50.0), st.floats(0.01, 2.0))
    def test_build_partition_respects_mesh_target(self, omega_max, target):
        p = build_partition(omega_max, target)
        assert p.omegas[0] == 0.0
        assert p.omega_max == pytest.approx(omega_max)
        assert p.mesh <= target * (1 + 1e-12)

    def test_build_partition_validation(self):
        with pytest.raises(ProblemError):
            build_partition(-1.0, 0.1)
        with pytest.raises(ProblemError):
            build_partition(1.0, 0.0)
        assert build_partition(0.0, 0.1).n_intervals == 0


class TestBounds:
    def test_omega_max_formula(self):
        spec = KernelSpec.continuous(1.5, gamma=2.0)
        y = np.array([1.0, 2.0])
        lam = 0.5
        expect = math.sqrt(2.0 * 2.0 * 5.0 / 0.5 - 1.5 ** 2)
        assert omega_max_ct(spec, y, lam) == pytest.approx(expect, rel=1e-12)

    def test_omega_max_degenerate(self):
        spec = KernelSpec.continuous(10.0)
        # bound smaller than beta^2: no frequency can ever be active
        assert omega_max_ct(spec, np.array([0.1]), 100.0) == 0.0
        assert omega_max_ct(spec, np.zeros(3), 1.0) == 0.0
        with pytest.raises(ProblemError):
            omega_max_ct(spec, np.ones(2), 0.0)

    def test_mesh_bound_formula(self):
        spec = KernelSpec.discrete(0.25)
        y = np.array([1.0, 1.0])
        mu0 = kernel_moments(spec, 0)
        mu1 = kernel_moments(spec, 1)
        expect = 2.0 * 0.3 * 1.0 / (4.0 * mu0 * mu1 * 2.0)
        assert mesh_bound(spec, y, 1.0, 0.3) == pytest.approx(expect,
                                                              rel=1e-12)

    def test_mesh_bound_conservative_is_smaller_when_valid(self):
        spec = KernelSpec.continuous(0.8)
        y = np.ones(3)
        exact = mesh_bound(spec, y, 1.0, 0.1)
        cons = mesh_bound(spec, y, 1.0, 0.1, conservative=True)
        assert cons == pytest.approx(exact, rel=1e-12)  # CT bounds are exact

    def test_mesh_bound_zero_outputs(self):
        spec = KernelSpec.discrete(0.5)
        assert mesh_bound(spec, np.zeros(2), 1.0, 0.1) == math.inf


class TestAssemble:
    def test_layout_and_symmetry(self):
        d = small_dataset()
        spec = KernelSpec.discrete(0.7, gamma=1.1)
        om = np.array([0.0, 0.9, 2.2])
        prob = assemble(d, spec, om, lam=0.5, eps=1e-3)
        m = d.n_samples + 2 * om.size
        assert prob.m == m
        assert prob.n_constraints == om.size
        np.testing.assert_array_equal(prob.phi, prob.phi.T)
        # objective rows are the input-functional rows of the Gram matrix
        np.testing.assert_array_equal(prob.a_rows, prob.phi[:d.n_samples])
        # constraint vectors are literal Gram columns
        for j in range(om.size):
            np.testing.assert_array_equal(prob.b_vec(j),
                                          prob.phi[:, d.n_samples + 2 * j])
            np.testing.assert_array_equal(prob.c_vec(j),
                                          prob.phi[:, d.n_samples + 2 * j + 1])
        np.testing.assert_array_equal(prob.constraint_omegas, om)
        kinds = [desc.kind for desc in prob.descriptors]
        assert kinds[:d.n_samples] == [fn.INPUT] * d.n_samples
        assert kinds[d.n_samples::2] == [fn.FREQ_REAL] * om.size
        assert kinds[d.n_samples + 1::2] == [fn.FREQ_IMAG] * om.size

    def test_entries_match_pairwise_inner_products(self):
        d = small_dataset(n=4, seed=3)
        spec = KernelSpec.discrete(0.6, gamma=0.8)
        prob = assemble(d, spec, np.array([0.0, 1.3]), lam=1.0, eps=0.5)
        for i, da in enumerate(prob.descriptors):
            for j, db in enumerate(prob.descriptors):
                assert prob.phi[i, j] == pytest.approx(
                    fn.inner_product(d, spec, da, db), rel=1e-9, abs=1e-11)

    def test_gram_is_psd(self):
        d = small_dataset(n=5, seed=9)
        spec = KernelSpec.discrete(0.8)
        prob = assemble(d, spec, np.linspace(0.0, 3.0, 7), lam=1.0, eps=0.5)
        w = np.linalg.eigvalsh(prob.phi)
        assert w.min() >= -1e-9 * max(1.0, w.max())

    def test_unconstrained_assembly(self):
        d = small_dataset()
        spec = KernelSpec.discrete(0.7)
        prob = assemble(d, spec, None, lam=0.5, eps=1e-3)
        assert prob.m == d.n_samples
        assert prob.n_constraints == 0

    def test_dimension_cap(self):
        d = small_dataset()
        spec = KernelSpec.discrete(0.7)
        om = np.linspace(0.0, 1.0, (DIMENSION_CAP - d.n_samples) // 2 + 1)
        with pytest.raises(ProblemError, match="cap"):
            assemble(d, spec, om, lam=0.5, eps=1e-3)

    def test_parameter_validation(self):
        d = small_dataset()
        spec = KernelSpec.discrete(0.7)
        with pytest.raises(ProblemError):
            assemble(d, spec, None, lam=0.0, eps=0.5)
        with pytest.raises(ProblemError):
            assemble(d, spec, None, lam=1.0, eps=1.0)
