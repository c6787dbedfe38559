"""Constrained-solver correctness: ridge path, barrier derivatives,
hand-solvable optima, and the active-set refinement."""

import numpy as np
import pytest

from freqid.kernels import KernelSpec
from freqid.problem import assemble, build_partition
from freqid.qcqp import (QuadraticProgram, SolverConfig, SolverError,
                         barrier_grad_hess, barrier_objective,
                         constraint_values, solve_qcqp, solve_ridge)
from freqid.signals import Dataset, DiscreteInput


def random_spd_problem(seed, m=8):
    """Unconstrained Gram problem with a random SPD matrix."""
    rng = np.random.default_rng(seed)
    R = rng.standard_normal((m, m))
    phi = R @ R.T + m * np.eye(m)
    phi = 0.5 * (phi + phi.T)
    y = rng.standard_normal(m)
    return QuadraticProgram(phi=phi, a=phi.copy(), y=y, lam=0.5 + rng.random(),
                            eps=0.5, B=np.empty((0, m)), C=np.empty((0, m)))


def scalar_bound_problem(y=2.0, lam=0.1, eps=0.19):
    """1-D problem: min (x - y)^2 + lam x^2 s.t. x^2 <= 1 - eps.

    With 1 - eps = 0.81 and y/(1 + lam) > 0.9 the optimum is x = 0.9.
    """
    one = np.eye(1)
    return QuadraticProgram(phi=one, a=one.copy(), y=np.array([y]), lam=lam,
                            eps=eps, B=one.copy(), C=np.zeros((1, 1)))


def disc_bound_problem():
    """2-D problem: min ||x - (2, 0)||^2 + 0.5 ||x||^2, ||x||^2 <= 0.64.

    The optimum projects onto the disc boundary along e1: x = (0.8, 0).
    """
    eye = np.eye(2)
    return QuadraticProgram(phi=eye, a=eye.copy(), y=np.array([2.0, 0.0]),
                            lam=0.5, eps=0.36, B=np.array([[1.0, 0.0]]),
                            C=np.array([[0.0, 1.0]]))


class TestRidgePath:
    @pytest.mark.parametrize("seed", range(20))
    def test_matches_closed_form(self, seed):
        qp = random_spd_problem(seed)
        rep = solve_ridge(qp)
        x_ref = np.linalg.solve(qp.phi + qp.lam * np.eye(qp.m), qp.y)
        np.testing.assert_allclose(rep.x, x_ref, rtol=1e-8, atol=1e-10)
        assert rep.feasible
        assert rep.message == "ridge"

    def test_general_objective_rows(self):
        rng = np.random.default_rng(1)
        m = 6
        R = rng.standard_normal((m, m))
        phi = R @ R.T + m * np.eye(m)
        a = rng.standard_normal((4, m))
        y = rng.standard_normal(4)
        qp = QuadraticProgram(phi=phi, a=a, y=y, lam=0.3, eps=0.5,
                              B=np.empty((0, m)), C=np.empty((0, m)))
        rep = solve_ridge(qp)
        x_ref = np.linalg.solve(a.T @ a + 0.3 * phi, a.T @ y)
        np.testing.assert_allclose(rep.x, x_ref, rtol=1e-8, atol=1e-10)

    def test_rejects_constrained_problem(self):
        with pytest.raises(SolverError):
            solve_ridge(scalar_bound_problem())

    def test_solve_qcqp_dispatches_to_ridge(self):
        qp = random_spd_problem(3)
        rep = solve_qcqp(qp)
        np.testing.assert_allclose(
            rep.x, np.linalg.solve(qp.phi + qp.lam * np.eye(qp.m), qp.y),
            rtol=1e-8)


class TestHandSolvedOptima:
    def test_scalar_boundary_optimum(self):
        rep = solve_qcqp(scalar_bound_problem())
        assert rep.x[0] == pytest.approx(0.9, abs=1e-6)
        assert rep.feasible
        assert rep.polished

    def test_disc_boundary_optimum(self):
        rep = solve_qcqp(disc_bound_problem())
        np.testing.assert_allclose(rep.x, [0.8, 0.0], atol=1e-6)
        assert rep.feasible

    def test_inactive_constraint_equals_ridge(self):
        # big bound: constraint never binds, so the QCQP is pure ridge
        qp = scalar_bound_problem(y=0.3, lam=1.0, eps=0.19)
        rep = solve_qcqp(qp)
        assert rep.x[0] == pytest.approx(0.3 / 2.0, abs=1e-8)

    def test_objective_value_reported_unhalved(self):
        rep = solve_qcqp(scalar_bound_problem())
        x = rep.x[0]
        assert rep.objective == pytest.approx((x - 2.0) ** 2 + 0.1 * x ** 2,
                                              rel=1e-12)


class TestBarrierDerivatives:
    @pytest.mark.parametrize("seed", range(20))
    def test_grad_hess_match_finite_differences(self, seed):
        rng = np.random.default_rng(seed)
        m = 5
        R = rng.standard_normal((m, m))
        phi = R @ R.T + m * np.eye(m)
        qp = QuadraticProgram(
            phi=phi, a=rng.standard_normal((4, m)), y=rng.standard_normal(4),
            lam=0.4, eps=0.2, B=0.3 * rng.standard_normal((3, m)),
            C=0.3 * rng.standard_normal((3, m)))
        x = 0.05 * rng.standard_normal(m)     # strictly feasible
        assert np.all(constraint_values(qp, x) < 1.0 - qp.eps)
        theta = 0.7
        grad, hess = barrier_grad_hess(qp, x, theta)
        h = 1e-6
        for i in range(m):
            e = np.zeros(m)
            e[i] = h
            df = (barrier_objective(qp, x + e, theta)
                  - barrier_objective(qp, x - e, theta)) / (2 * h)
            assert df == pytest.approx(grad[i], rel=1e-5, abs=1e-7)
            gp, _ = barrier_grad_hess(qp, x + e, theta)
            gm, _ = barrier_grad_hess(qp, x - e, theta)
            np.testing.assert_allclose((gp - gm) / (2 * h), hess[i],
                                       rtol=1e-5, atol=1e-6)

    def test_barrier_rejects_infeasible_point(self):
        qp = scalar_bound_problem()
        with pytest.raises(SolverError):
            barrier_objective(qp, np.array([2.0]), 1.0)
        with pytest.raises(SolverError):
            barrier_grad_hess(qp, np.array([2.0]), 1.0)


class TestSolverConfig:
    def test_parameter_validation(self):
        with pytest.raises(ValueError):
            SolverConfig(theta0=0.0)
        with pytest.raises(ValueError):
            SolverConfig(theta_decay=1.0)
        with pytest.raises(ValueError):
            SolverConfig(backtrack=1.0)

    def test_eps_validation(self):
        qp = scalar_bound_problem()
        bad = QuadraticProgram(phi=qp.phi, a=qp.a, y=qp.y, lam=qp.lam,
                               eps=1.5, B=qp.B, C=qp.C)
        with pytest.raises(SolverError):
            solve_qcqp(bad)


class TestGramProblemSolve:
    @pytest.fixture
    def gram_problem(self):
        rng = np.random.default_rng(12)
        n = 20
        u = DiscreteInput(rng.standard_normal(n))
        t = np.arange(n, dtype=float)
        y = rng.standard_normal(n)
        d = Dataset("discrete", u, t, y)
        spec = KernelSpec.discrete(0.85)
        p = build_partition(np.pi, np.pi / 20)
        return assemble(d, spec, p, lam=0.05, eps=0.2)

    def test_solution_is_feasible_and_optimal_versus_perturbation(
            self, gram_problem):
        rep = solve_qcqp(gram_problem)
        assert rep.feasible
        vals = constraint_values(gram_problem, rep.x)
        assert np.all(vals <= 1.0 - gram_problem.eps + 1e-9)
        # local optimality: random feasible perturbations never improve
        rng = np.random.default_rng(0)
        for _ in range(30):
            dx = 1e-4 * rng.standard_normal(rep.x.size)
            xt = rep.x + dx
            if np.any(constraint_values(gram_problem, xt)
                      > 1.0 - gram_problem.eps):
                continue
            qp = QuadraticProgram.from_gram(gram_problem)
            resid = qp.a @ xt - qp.y
            obj = float(resid @ resid + qp.lam * xt @ qp.phi @ xt)
            assert obj >= rep.objective - 1e-10

    def test_polish_respects_whitened_norm(self, gram_problem):
        # solving twice gives bit-identical results (determinism)
        r1 = solve_qcqp(gram_problem)
        r2 = solve_qcqp(gram_problem)
        np.testing.assert_array_equal(r1.x, r2.x)

    def test_norm_bound(self, gram_problem):
        rep = solve_qcqp(gram_problem)
        ssq = float(np.sum(gram_problem.y ** 2))
        assert rep.rkhs_norm_sq <= ssq / gram_problem.lam + 1e-6
