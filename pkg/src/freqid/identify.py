"""Constraint-activation identification loop, model evaluation, and the
problem reductions (gain bound, dissipativity, model-error, weighted gain).

The solver enforces |F_omega(g)|^2 <= 1 - eps only at frequencies where the
running solution violates the bound: starting from the unconstrained
regression, each pass adds every partition frequency whose constraint the
current model breaks, and stops when none is violated.  The result matches
the full-partition solution because discarded constraints are inactive there.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.signal

from . import functionals as fn
from .kernels import CONTINUOUS, DISCRETE, KernelSpec, kernel_moments
from .problem import (FrequencyPartition, GramProblem, _interleaved_freq_block,
                      mesh_bound)
from .qcqp import SolveReport, SolverConfig, solve_qcqp
from .signals import (Dataset, DataError, DiscreteInput,
                      PiecewiseConstantInput, scale_outputs)


class IdentifyError(RuntimeError):
    pass


@dataclass(frozen=True)
class Model:
    """Identified impulse response g = rho * sum_i x_i phi_i."""

    spec: KernelSpec
    dataset: Dataset            # normalized (rho = 1) dataset used in the fit
    descriptors: tuple
    x: np.ndarray
    lam: float
    eps: float
    rho: float = 1.0
    active_omegas: np.ndarray = field(default_factory=lambda: np.empty(0))
    certified: bool = False
    report: SolveReport | None = None
    iterations: int = 0

    @property
    def n_data(self) -> int:
        return sum(1 for d in self.descriptors if d.kind == fn.INPUT)

    def input_taus(self) -> np.ndarray:
        return np.array([d.arg for d in self.descriptors if d.kind == fn.INPUT])


def identify(d: Dataset, spec: KernelSpec, p: FrequencyPartition | None,
             lam: float, eps: float, cfg: SolverConfig | None = None,
             rho: float = 1.0, tol: float = 1e-12,
             max_outer: int | None = None) -> Model:
    """Fit the gain-bounded model by constraint activation.

    ``p`` is the constraint partition (None disables the gain constraints
    entirely).  ``rho`` is the gain bound; outputs are normalized by it
    internally and model evaluations are scaled back.
    """
    cfg = cfg or SolverConfig()
    dn = scale_outputs(d, rho)
    taus = dn.sample_times
    n_d = taus.size
    uu = fn.uu_block(dn, spec)
    certified = False
    if p is not None and p.n_intervals > 0:
        bound = mesh_bound(spec, dn.outputs, lam, eps)
        certified = p.mesh <= bound
    omegas = p.omegas if p is not None else np.empty(0)
    z_full = (fn.freq_u_cross(dn, spec, omegas, taus, tol)
              if omegas.size else np.empty((0, n_d), dtype=complex))

    active = np.empty(0, dtype=int)     # indices into omegas, sorted
    x = None
    report = None
    iters = 0
    limit = max_outer if max_outer is not None else max(1, omegas.size + 1)
    while True:
        iters += 1
        if iters > limit:
            raise IdentifyError("constraint activation failed to settle")
        act_om = omegas[active]
        descriptors = [fn.input_at(t) for t in taus]
        for w in act_om:
            descriptors.append(fn.freq_real(w))
            descriptors.append(fn.freq_imag(w))
        m = n_d + 2 * act_om.size
        phi = np.empty((m, m))
        phi[:n_d, :n_d] = uu
        if act_om.size:
            Z = z_full[active]
            phi[:n_d, n_d + 0::2] = Z.real.T
            phi[:n_d, n_d + 1::2] = Z.imag.T
            Zr, Zi = fn.freq_freq_cross(spec, act_om, act_om, tol)
            phi[n_d:, n_d:] = _interleaved_freq_block(Zr, Zi)
            phi[n_d:, :n_d] = phi[:n_d, n_d:].T
        iu = np.triu_indices(m, 1)
        phi[iu[1], iu[0]] = phi[iu]
        prob = GramProblem(phi=phi, y=dn.outputs, lam=lam, eps=eps,
                           descriptors=tuple(descriptors), n_data=n_d,
                           certified=certified)
        report = solve_qcqp(prob, cfg)
        x = report.x
        if omegas.size == 0:
            break
        # violation scan over the full partition
        F = z_full @ x[:n_d]
        if act_om.size:
            Zr_s, Zi_s = fn.freq_freq_cross(spec, omegas, act_om, tol)
            F = F + Zr_s @ x[n_d + 0::2] + Zi_s @ x[n_d + 1::2]
        viol = np.flatnonzero(np.abs(F) ** 2 > 1.0 - eps)
        new = np.setdiff1d(viol, active)
        if new.size == 0:
            break
        active = np.union1d(active, new)

    return Model(spec=spec, dataset=dn, descriptors=tuple(descriptors),
                 x=np.asarray(x), lam=lam, eps=eps, rho=rho,
                 active_omegas=np.array(omegas[active]), certified=certified,
                 report=report, iterations=iters)


def _freq_contributions(m: Model, omegas: np.ndarray, tol: float = 1e-12):
    """Complex F_omega(sum x_i phi_i) over the given frequencies (rho = 1)."""
    omegas = np.atleast_1d(np.asarray(omegas, dtype=float))
    n_d = m.n_data
    F = np.zeros(omegas.size, dtype=complex)
    if n_d:
        Z = fn.freq_u_cross(m.dataset, m.spec, omegas, m.input_taus(), tol)
        F += Z @ m.x[:n_d]
    fr_om = np.array([d.arg for d in m.descriptors if d.kind == fn.FREQ_REAL])
    if fr_om.size:
        Zr, Zi = fn.freq_freq_cross(m.spec, omegas, fr_om, tol)
        F += Zr @ m.x[n_d + 0::2] + Zi @ m.x[n_d + 1::2]
    return F


def frequency_response(m: Model, omega) -> complex | np.ndarray:
    """F_omega of the identified system (including the rho rescaling)."""
    F = m.rho * _freq_contributions(m, omega)
    return complex(F[0]) if np.ndim(omega) == 0 else F


def impulse_response(m: Model, t):
    """Pointwise impulse response rho * sum_i x_i phi_i(t)."""
    t = np.asarray(t, dtype=float)
    out = np.zeros(t.shape if t.ndim else ())
    for coef, desc in zip(m.x, m.descriptors):
        if coef != 0.0:
            out = out + coef * fn.phi_descriptor_value(m.dataset, m.spec, desc, t)
    out = m.rho * np.asarray(out, dtype=float)
    return float(out) if out.ndim == 0 else out


def rkhs_norm_sq(m: Model) -> float:
    """Squared Hilbert norm of the normalized solution."""
    if m.report is not None:
        return m.report.rkhs_norm_sq
    return float("nan")


@dataclass(frozen=True)
class HinfCheck:
    grid_sup: float          # max |F_omega(g)| over the grid (normalized)
    certified_bound: float   # Lipschitz bound on the true sup
    lipschitz: float         # L_g for the squared magnitude


def hinf_grid_sup(m: Model, grid: FrequencyPartition) -> HinfCheck:
    """Grid supremum of the normalized gain |F_omega(g)|, with the Lipschitz
    certificate sup^2 <= max_grid |F|^2 + L_g * mesh / 2."""
    F = _freq_contributions(m, grid.omegas)
    mags = np.abs(F) ** 2
    mu0 = kernel_moments(m.spec, 0)
    mu1 = kernel_moments(m.spec, 1)
    L = 4.0 * mu0 * mu1 * rkhs_norm_sq(m)
    bound = math.sqrt(max(0.0, float(np.max(mags)) + L * grid.mesh / 2.0))
    return HinfCheck(grid_sup=float(np.sqrt(np.max(mags))),
                     certified_bound=bound, lipschitz=L)


def predict(m: Model, times) -> np.ndarray:
    """Model output at the given sample times: rho * L_{u,t}(g)."""
    times = np.atleast_1d(np.asarray(times, dtype=float))
    n_d = m.n_data
    out = np.zeros(times.size)
    if n_d:
        blk = fn.uu_block(m.dataset, m.spec, times, m.input_taus())
        out += blk @ m.x[:n_d]
    fr_om = np.array([d.arg for d in m.descriptors if d.kind == fn.FREQ_REAL])
    if fr_om.size:
        Z = fn.freq_u_cross(m.dataset, m.spec, fr_om, times)
        out += Z.real.T @ m.x[n_d + 0::2] + Z.imag.T @ m.x[n_d + 1::2]
    return m.rho * out


def fit(g_hat: np.ndarray, g_true: np.ndarray) -> float:
    """Impulse-response goodness of fit, 100 * (1 - ||ghat - g|| / ||g||)."""
    g_hat = np.asarray(g_hat, dtype=float)
    g_true = np.asarray(g_true, dtype=float)
    if g_hat.shape != g_true.shape:
        raise ValueError("fit requires equal-length samplings")
    denom = float(np.linalg.norm(g_true))
    if denom == 0.0:
        raise ValueError("fit undefined for a zero reference response")
    return 100.0 * (1.0 - float(np.linalg.norm(g_hat - g_true)) / denom)


# ---------------------------------------------------------------------------
# problem reductions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SupplyRate:
    """Quadratic supply rate q_u u^2 + 2 q_uy u y + q_y y^2 with q_y < 0."""

    q_u: float
    q_uy: float
    q_y: float

    def __post_init__(self) -> None:
        if self.q_y >= 0:
            raise ValueError("supply rate needs q_y < 0")
        if self.q_u * self.q_y - self.q_uy ** 2 > 0:
            raise ValueError("supply rate needs det Q <= 0")

    @property
    def factors(self) -> tuple[float, float, float]:
        det = self.q_u * self.q_y - self.q_uy ** 2
        l1 = math.sqrt(det / self.q_y)
        l2 = -self.q_uy / math.sqrt(-self.q_y)
        l3 = math.sqrt(-self.q_y)
        return l1, l2, l3


@dataclass(frozen=True)
class DissipativityBackMap:
    """Recovers the original system from the transformed identification:
    G = (l1 * Gtilde - l2) / l3, i.e. impulse response (l1/l3) gtilde plus a
    feed-through -l2/l3 (folded into g_0 in discrete time)."""

    l1: float
    l2: float
    l3: float
    axis: str

    @property
    def feedthrough(self) -> float:
        return -self.l2 / self.l3

    def apply_impulse(self, g_tilde: np.ndarray, times: np.ndarray) -> np.ndarray:
        g = (self.l1 / self.l3) * np.asarray(g_tilde, dtype=float)
        if self.axis == DISCRETE and self.feedthrough != 0.0:
            g = g.copy()
            at0 = np.flatnonzero(np.asarray(times) == 0)
            g[at0] += self.feedthrough
        return g


def dissipativity_reduce(d: Dataset, q: SupplyRate):
    """Turn a dissipativity requirement into a unit gain bound on the
    transformed data v = l1 u, z = l2 u + l3 y."""
    l1, l2, l3 = q.factors
    if isinstance(d.input, DiscreteInput):
        new_input = DiscreteInput(l1 * d.input.samples)
        u_at = d.input.value(d.sample_times.astype(int))
    else:
        new_input = PiecewiseConstantInput(d.input.breakpoints,
                                           l1 * d.input.values)
        u_at = d.input.value(d.sample_times)
    z = l2 * np.atleast_1d(u_at) + l3 * d.outputs
    return (replace(d, input=new_input, outputs=z),
            DissipativityBackMap(l1, l2, l3, d.axis))


def delta_reduce(d: Dataset, gbar) -> Dataset:
    """Subtract the response of a reference impulse response gbar (callable
    on times) so identification targets the model-error system."""
    taus = d.sample_times
    resp = np.empty(taus.size)
    if d.axis == DISCRETE:
        T = int(taus.max())
        g = np.array([float(gbar(s)) for s in range(T + 1)])
        u = d.input.value(np.arange(T + 1))
        conv = np.convolve(g, u)[: T + 1]
        resp = conv[taus.astype(int)]
    else:
        from scipy.integrate import quad
        for i, tau in enumerate(taus):
            sb = np.maximum(tau - d.input.breakpoints, 0.0)
            acc = 0.0
            for k, xi in enumerate(d.input.values):
                lo, hi = sb[k + 1], sb[k]
                if hi > lo:
                    val, _ = quad(gbar, lo, hi, limit=200)
                    acc += xi * val
            resp[i] = acc
    return replace(d, outputs=d.outputs - resp)


@dataclass(frozen=True)
class WeightedBackMap:
    """Inverse filter of the weighting system, applied to the identified
    impulse response over a finite horizon."""

    w: "object"              # RationalTF (discrete)
    horizon: int

    def apply_impulse(self, h_samples: np.ndarray) -> np.ndarray:
        from .sim import _zinv_coeffs
        b, a = _zinv_coeffs(self.w)
        h = np.asarray(h_samples, dtype=float)
        padded = np.zeros(max(self.horizon, h.size))
        padded[: h.size] = h
        # inverse system swaps numerator and denominator
        return scipy.signal.lfilter(a, b, padded)[: h.size]


def weighted_reduce(d: Dataset, w, horizon_factor: int = 4):
    """Filter outputs through the weight W (discrete time only); the back-map
    filters the identified response through W^{-1}."""
    from .sim import _zinv_coeffs
    if d.axis != DISCRETE:
        raise DataError("weighted identification is defined for discrete time")
    b, a = _zinv_coeffs(w)
    if not w.is_stable:
        raise ValueError("weight must be stable")
    if w.num.size != w.den.size or w.num[0] == 0.0:
        raise ValueError("weight must be biproper for a causal inverse")
    zeros = np.roots(w.num)
    if zeros.size and np.any(np.abs(zeros) >= 1.0):
        raise ValueError("weight zeros must lie strictly inside the unit circle")
    T = int(d.sample_times.max()) + 1
    u = d.input.value(np.arange(T))
    yfull = np.zeros(T)
    yfull[d.sample_times.astype(int)] = d.outputs
    if not np.array_equal(d.sample_times, np.arange(T, dtype=float)):
        raise DataError("weighted reduction requires contiguous sample times")
    p = scipy.signal.lfilter(b, a, yfull)
    horizon = horizon_factor * T
    return (replace(d, outputs=p),
            WeightedBackMap(w=w, horizon=horizon))


# ---------------------------------------------------------------------------
# model serialization
# ---------------------------------------------------------------------------

def model_to_json(m: Model) -> str:
    inp = m.dataset.input
    if isinstance(inp, DiscreteInput):
        input_doc = {"type": "discrete", "samples": [f"{v:.17g}" for v in inp.samples]}
    else:
        input_doc = {"type": "piecewise_constant",
                     "breakpoints": [f"{v:.17g}" for v in inp.breakpoints],
                     "values": [f"{v:.17g}" for v in inp.values]}
    doc = {
        "axis": m.spec.axis,
        "kernel": {"decay": f"{m.spec.decay:.17g}", "scale": f"{m.spec.scale:.17g}"},
        "input": input_doc,
        "sample_times": [f"{v:.17g}" for v in m.dataset.sample_times],
        "descriptors": [{"kind": d.kind, "arg": f"{d.arg:.17g}"}
                        for d in m.descriptors],
        "coefficients": [f"{v:.17g}" for v in m.x],
        "lambda": f"{m.lam:.17g}",
        "eps": f"{m.eps:.17g}",
        "rho": f"{m.rho:.17g}",
        "active_omegas": [f"{v:.17g}" for v in m.active_omegas],
        "certified": m.certified,
    }
    return json.dumps(doc, indent=2)


def model_from_json(text: str) -> Model:
    doc = json.loads(text)
    axis = doc["axis"]
    spec = KernelSpec(axis, float(doc["kernel"]["decay"]),
                      float(doc["kernel"]["scale"]))
    if doc["input"]["type"] == "discrete":
        inp = DiscreteInput(np.array([float(v) for v in doc["input"]["samples"]]))
    else:
        inp = PiecewiseConstantInput(
            np.array([float(v) for v in doc["input"]["breakpoints"]]),
            np.array([float(v) for v in doc["input"]["values"]]))
    times = np.array([float(v) for v in doc["sample_times"]])
    ds = Dataset(axis, inp, times, np.zeros(times.size))
    descriptors = tuple(fn.BasisDescriptor(e["kind"], float(e["arg"]))
                        for e in doc["descriptors"])
    return Model(spec=spec, dataset=ds, descriptors=descriptors,
                 x=np.array([float(v) for v in doc["coefficients"]]),
                 lam=float(doc["lambda"]), eps=float(doc["eps"]),
                 rho=float(doc["rho"]),
                 active_omegas=np.array([float(v) for v in doc["active_omegas"]]),
                 certified=bool(doc["certified"]))
