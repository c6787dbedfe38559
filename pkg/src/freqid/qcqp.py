"""Log-barrier Newton solver for the constrained quadratic program.

Minimizes p(x) = 0.5||Ax - y||^2 + 0.5 lambda x^T Phi x subject to
p_j(x) = 0.5 (b_j^T x)^2 + 0.5 (c_j^T x)^2 - 0.5 (1 - eps) <= 0, by the
central path f_theta(x) = p(x) - theta sum_j ln(-p_j(x)) with damped Newton
steps, followed by an active-set KKT refinement that removes the O(theta)
barrier bias.  Reported objective values are for the unhalved problem
||Ax - y||^2 + lambda x^T Phi x.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .problem import GramProblem


class SolverError(RuntimeError):
    """Numerical failure inside the solver."""


@dataclass(frozen=True)
class SolverConfig:
    theta0: float = 1.0
    theta_decay: float = 10.0
    barrier_tol: float = 1e-8
    newton_tol: float = 1e-10
    max_newton: int = 100
    armijo_slope: float = 1e-4
    backtrack: float = 0.5
    jitter: float = 1e-10
    polish: bool = True

    def __post_init__(self) -> None:
        if min(self.theta0, self.barrier_tol, self.newton_tol,
               self.armijo_slope, self.backtrack, self.jitter) <= 0:
            raise ValueError("solver parameters must be positive")
        if self.theta_decay <= 1.0:
            raise ValueError("theta_decay must exceed 1")
        if self.backtrack >= 1.0:
            raise ValueError("backtrack factor must be < 1")


@dataclass(frozen=True)
class QuadraticProgram:
    """Solver-level view: objective matrices plus stacked constraint vectors."""

    phi: np.ndarray   # (m, m) regularizer matrix
    a: np.ndarray     # (n, m) objective rows
    y: np.ndarray     # (n,) targets
    lam: float
    eps: float
    B: np.ndarray     # (n_c, m) rows b_j
    C: np.ndarray     # (n_c, m) rows c_j

    @classmethod
    def from_gram(cls, p: GramProblem) -> "QuadraticProgram":
        n_c = p.n_constraints
        if n_c:
            # contiguous copies: strided views cripple the BLAS rank-k updates
            B = np.ascontiguousarray(p.phi[:, p.n_data + 0: p.m: 2].T)
            C = np.ascontiguousarray(p.phi[:, p.n_data + 1: p.m: 2].T)
        else:
            B = np.empty((0, p.m))
            C = np.empty((0, p.m))
        return cls(phi=p.phi, a=np.ascontiguousarray(p.a_rows), y=p.y,
                   lam=p.lam, eps=p.eps, B=B, C=C)

    @property
    def m(self) -> int:
        return self.phi.shape[0]

    @property
    def n_constraints(self) -> int:
        return self.B.shape[0]


def _as_qp(p) -> QuadraticProgram:
    return QuadraticProgram.from_gram(p) if isinstance(p, GramProblem) else p


@dataclass(frozen=True)
class SolveReport:
    x: np.ndarray
    objective: float
    slacks: np.ndarray
    barrier_stages: int
    newton_iterations: int
    rkhs_norm_sq: float
    feasible: bool
    polished: bool = field(default=False)
    message: str = field(default="")


def _jitter_scale(qp: QuadraticProgram, cfg: SolverConfig) -> float:
    tr = float(np.trace(qp.phi))
    return cfg.jitter * max(tr / max(qp.m, 1), 1e-300)


def constraint_values(p, x: np.ndarray) -> np.ndarray:
    """(b_j^T x)^2 + (c_j^T x)^2 for each j."""
    qp = _as_qp(p)
    return (qp.B @ x) ** 2 + (qp.C @ x) ** 2


def _report(qp: QuadraticProgram, x: np.ndarray, stages: int, iters: int,
            polished: bool, message: str = "") -> SolveReport:
    resid = qp.a @ x - qp.y
    obj = float(resid @ resid + qp.lam * x @ qp.phi @ x)
    slacks = (1.0 - qp.eps) - constraint_values(qp, x)
    feasible = bool(np.all(slacks >= -1e-9)) if slacks.size else True
    return SolveReport(x=x, objective=obj, slacks=slacks, barrier_stages=stages,
                       newton_iterations=iters, rkhs_norm_sq=float(x @ qp.phi @ x),
                       feasible=feasible, polished=polished, message=message)


def solve_ridge(p) -> SolveReport:
    """Closed-form solution of the unconstrained problem.

    With only input functionals in the basis, A = Phi and the normal
    equations reduce to (Phi + lambda I) x = y; the general unconstrained
    case solves (A^T A + lambda Phi) x = A^T y.
    """
    qp = _as_qp(p)
    if qp.n_constraints != 0:
        raise SolverError("ridge path requires an unconstrained problem")
    if qp.a.shape == qp.phi.shape and np.array_equal(qp.a, qp.phi):
        lhs = qp.phi + qp.lam * np.eye(qp.m)
        rhs = qp.y
    else:
        lhs = qp.a.T @ qp.a + qp.lam * qp.phi
        rhs = qp.a.T @ qp.y
    jit = _jitter_scale(qp, SolverConfig())
    for attempt in (0.0, jit):
        try:
            cho = sla.cho_factor(lhs + attempt * np.eye(qp.m), lower=True)
            x = sla.cho_solve(cho, rhs)
            return _report(qp, x, stages=0, iters=0, polished=False,
                           message="ridge")
        except np.linalg.LinAlgError:
            continue
    raise SolverError("ridge system singular after jitter")


def barrier_objective(p, x: np.ndarray, theta: float) -> float:
    qp = _as_qp(p)
    resid = qp.a @ x - qp.y
    val = 0.5 * resid @ resid + 0.5 * qp.lam * x @ qp.phi @ x
    if qp.n_constraints:
        slack = 0.5 * (1.0 - qp.eps) - 0.5 * constraint_values(qp, x)
        if np.any(slack <= 0.0):
            raise SolverError("barrier evaluated at an infeasible point")
        val -= theta * float(np.sum(np.log(slack)))
    return float(val)


def barrier_grad_hess(p, x: np.ndarray, theta: float):
    """Gradient and Hessian of the barrier objective at strictly feasible x."""
    qp = _as_qp(p)
    A = qp.a
    grad = A.T @ (A @ x - qp.y) + qp.lam * (qp.phi @ x)
    hess = A.T @ A + qp.lam * qp.phi
    if qp.n_constraints:
        bx = qp.B @ x
        cx = qp.C @ x
        pj = 0.5 * bx ** 2 + 0.5 * cx ** 2 - 0.5 * (1.0 - qp.eps)
        if np.any(pj >= 0.0):
            raise SolverError("barrier evaluated at an infeasible point")
        w = -theta / pj                                     # positive weights
        gj = qp.B * bx[:, None] + qp.C * cx[:, None]        # rows: grad p_j
        grad = grad + gj.T @ w
        hess = hess + (qp.B.T * w) @ qp.B + (qp.C.T * w) @ qp.C
        hess = hess + (gj.T * (w / (-pj))) @ gj
    return grad, hess


def _newton_stage(qp: QuadraticProgram, x: np.ndarray, theta: float,
                  cfg: SolverConfig, scale: float):
    """Damped Newton until the gradient norm falls below newton_tol*scale."""
    jit = _jitter_scale(qp, cfg)
    eye = np.eye(qp.m)
    gnorm = np.inf
    stalls = 0
    best_g = np.inf
    best_x = x
    no_improve = 0
    for it in range(cfg.max_newton):
        grad, hess = barrier_grad_hess(qp, x, theta)
        gnorm = float(np.linalg.norm(grad))
        if gnorm <= cfg.newton_tol * scale:
            return x, it
        if gnorm < best_g:
            if gnorm > 0.9 * best_g:
                no_improve += 1
            else:
                no_improve = 0
            best_g = gnorm
            best_x = x
        else:
            no_improve += 1
        # rounding noise in the gradient grows like the Hessian norm, which
        # is unbounded for small theta; once the norm stops shrinking the
        # iterate is converged to float precision
        if no_improve >= 8:
            return best_x, it
        step = None
        # escalate the jitter when rounding makes the Hessian indefinite
        # (its norm grows without bound as iterates approach the boundary)
        base = max(jit, 1e-15 * float(np.max(np.diag(hess))))
        for boost in range(12):
            try:
                cho = sla.cho_factor(hess + base * 10.0 ** boost * eye,
                                     lower=True)
                step = -sla.cho_solve(cho, grad)
                break
            except np.linalg.LinAlgError:
                continue
        if step is None:
            raise SolverError("Hessian factorization failed")
        slope = float(grad @ step)
        if not np.isfinite(slope) or slope >= 0:
            return x, it
        # Newton decrement and step-size guards: quit once float precision
        # prevents further progress even though the gradient test missed
        if -slope <= (cfg.newton_tol * scale) ** 2 \
                or np.linalg.norm(step) <= 1e-15 * (1.0 + np.linalg.norm(x)):
            return x, it
        f0 = barrier_objective(qp, x, theta)
        t = 1.0
        while True:
            trial = x + t * step
            try:
                ft = barrier_objective(qp, trial, theta)
            except SolverError:
                ft = np.inf
            if ft <= f0 + cfg.armijo_slope * t * slope:
                x = trial
                break
            t *= cfg.backtrack
            if t < 1e-16:
                # step cannot improve in float arithmetic; accept the point
                return x, it + 1
        if not np.all(np.isfinite(x)):
            raise SolverError("non-finite iterate")
        # objective decreases below float resolution: further Newton steps
        # only churn rounding noise, so accept the point
        if f0 - ft <= 1e-14 * (1.0 + abs(f0)):
            stalls += 1
            if stalls >= 3:
                return x, it + 1
        else:
            stalls = 0
    raise SolverError(f"Newton did not converge in {cfg.max_newton} iterations "
                      f"(theta={theta:g}, |grad|={gnorm:g})")


def _kkt_polish(qp: QuadraticProgram, x: np.ndarray, theta: float,
                cfg: SolverConfig):
    """Active-set Newton on the KKT system to remove the barrier bias.

    The Gram matrix is often numerically rank-deficient (dense frequency
    grids give nearly dependent columns), and a small residual in the raw
    coordinates still allows a large error in the Gram (RKHS) norm along
    near-null eigendirections.  The refinement therefore works in whitened
    coordinates w = Lam^{1/2} V^T x from the eigendecomposition
    phi = V Lam V^T: there the objective Hessian is bounded below by
    ``lam`` and Newton converges to machine accuracy in the norm that
    actually matters.

    Returns the refined x, or None when the refinement cannot be certified
    (the barrier solution is then kept).
    """
    B, C = qp.B, qp.C

    def pj_of(xv):
        return 0.5 * (B @ xv) ** 2 + 0.5 * (C @ xv) ** 2 - 0.5 * (1.0 - qp.eps)

    mu_init = theta / np.maximum(-pj_of(x), 1e-300)
    # barrier multiplier estimates: O(theta) when inactive, O(1) when active
    thresh = max(np.sqrt(theta), 1e3 * theta)
    active = np.flatnonzero(mu_init > thresh)
    if active.size == 0:
        return None

    sig, V = np.linalg.eigh(qp.phi)
    keep = sig > 0.0
    if not np.any(keep):
        return None
    sig, V = sig[keep], V[:, keep]
    s12 = np.sqrt(sig)
    n_d = qp.a.shape[0]
    colb = n_d + 2 * np.arange(qp.n_constraints)
    if (qp.a.shape == (n_d, qp.m) and colb[-1] + 2 == qp.m
            and np.array_equal(qp.a, qp.phi[:n_d])
            and np.array_equal(qp.B, qp.phi[:, colb].T)
            and np.array_equal(qp.C, qp.phi[:, colb + 1].T)):
        # rows of A and the constraint vectors are literal Gram columns, so
        # their whitened forms reduce to scaled eigenvector rows (stable even
        # for tiny eigenvalues)
        M = V[:n_d] * s12                   # A x  ->  M w
        Bw_all = V[colb] * s12              # b_j^T x  ->  Bw_all[j] @ w
        Cw_all = V[colb + 1] * s12
    else:
        M = (qp.a @ V) / s12
        Bw_all = (qp.B @ V) / s12
        Cw_all = (qp.C @ V) / s12
        if not (np.all(np.isfinite(M)) and np.all(np.isfinite(Bw_all))
                and np.all(np.isfinite(Cw_all))):
            return None
    w0 = s12 * (V.T @ x)
    H0 = M.T @ M + qp.lam * np.eye(sig.size)
    Mty = M.T @ qp.y
    res_tol = 1e-11 * (1.0 + float(np.linalg.norm(Mty)))

    def pj_w(wv):
        return (0.5 * (Bw_all @ wv) ** 2 + 0.5 * (Cw_all @ wv) ** 2
                - 0.5 * (1.0 - qp.eps))

    for _ in range(active.size + 1):  # outer loop only shrinks the active set
        Bw, Cw = Bw_all[active], Cw_all[active]
        mu_a = np.maximum(mu_init[active], 0.0)
        wv = w0.copy()
        best = None
        stall = 0
        for _ in range(50):
            bx = Bw @ wv
            cx = Cw @ wv
            gj = Bw * bx[:, None] + Cw * cx[:, None]
            grad_l = H0 @ wv - Mty + gj.T @ mu_a
            res_c = 0.5 * bx ** 2 + 0.5 * cx ** 2 - 0.5 * (1.0 - qp.eps)
            res = np.concatenate([grad_l, res_c])
            if not np.all(np.isfinite(res)):
                break
            rnorm = float(np.linalg.norm(res))
            if best is None or rnorm < best[0]:
                stall = 0 if (best is None or rnorm < 0.9 * best[0]) else stall + 1
                best = (rnorm, wv.copy(), mu_a.copy())
            else:
                stall += 1
            if stall >= 5:
                break
            Hl = H0 + (Bw.T * mu_a) @ Bw + (Cw.T * mu_a) @ Cw
            k = active.size
            kkt = np.block([[Hl, gj.T], [gj, np.zeros((k, k))]])
            try:
                delta = np.linalg.solve(kkt, -res)
            except np.linalg.LinAlgError:
                break
            wv = wv + delta[: wv.size]
            mu_a = mu_a + delta[wv.size:]
        if best is None or best[0] > res_tol:
            return None
        _, wv, mu_a = best
        if np.any(mu_a < -1e-10):
            active = active[mu_a >= -1e-10]
            if active.size == 0:
                return None
            continue
        # the refinement must not violate any constraint left out of the set
        if np.any(pj_w(wv) > 1e-12):
            return None
        return V @ (wv / s12)
    return None


def solve_qcqp(p, cfg: SolverConfig | None = None) -> SolveReport:
    """Solve the constrained problem; falls back to the ridge path when
    there are no constraints."""
    cfg = cfg or SolverConfig()
    qp = _as_qp(p)
    if not 0 < qp.eps < 1:
        raise SolverError("eps must lie in (0, 1)")
    if qp.n_constraints == 0:
        return solve_ridge(qp)
    x = np.zeros(qp.m)
    scale = max(1.0, float(np.linalg.norm(qp.a.T @ qp.y)))
    theta = cfg.theta0
    stages = 0
    iters = 0
    n_c = qp.n_constraints
    while True:
        x, it = _newton_stage(qp, x, theta, cfg, scale)
        stages += 1
        iters += it
        if theta * n_c < cfg.barrier_tol:
            break
        theta /= cfg.theta_decay
    polished = False
    if cfg.polish:
        refined = _kkt_polish(qp, x, theta, cfg)
        if refined is not None:
            x = refined
            polished = True
    return _report(qp, x, stages, iters, polished)
