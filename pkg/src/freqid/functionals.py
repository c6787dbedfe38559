"""Representers of the sampling and frequency functionals, and their inner
products.

For the first-order stable kernel every quantity needed by the estimator has
a closed form (continuous time) or reduces to finite/truncated geometric sums
(discrete time):

* ``phi_u_*`` — representer of the output-sampling functional g -> (u*g)(tau),
* ``phi_omega_*`` — representers of Re/Im of the frequency response at omega,
* pairwise inner products of all of the above, assembled into Gram blocks.

All closed forms below are stated for kernel scale gamma = 1; representer
values and inner products are linear in gamma, so public entry points
multiply by ``spec.gamma`` exactly once.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .kernels import CONTINUOUS, DISCRETE, KernelError, KernelSpec, kernel_eval
from .signals import Dataset, DiscreteInput, PiecewiseConstantInput

INPUT = "input"
FREQ_REAL = "freq_real"
FREQ_IMAG = "freq_imag"


@dataclass(frozen=True)
class BasisDescriptor:
    """One basis element: an input functional at tau, or Re/Im frequency
    functional at omega."""

    kind: str
    arg: float

    def __post_init__(self) -> None:
        if self.kind not in (INPUT, FREQ_REAL, FREQ_IMAG):
            raise ValueError(f"unknown descriptor kind {self.kind!r}")
        if self.arg < 0:
            raise ValueError("descriptor argument must be >= 0")


def input_at(tau: float) -> BasisDescriptor:
    return BasisDescriptor(INPUT, float(tau))


def freq_real(omega: float) -> BasisDescriptor:
    return BasisDescriptor(FREQ_REAL, float(omega))


def freq_imag(omega: float) -> BasisDescriptor:
    return BasisDescriptor(FREQ_IMAG, float(omega))


# ---------------------------------------------------------------------------
# continuous-time closed forms (gamma = 1)
# ---------------------------------------------------------------------------

def psi(t, a, b, beta: float):
    """Integral of exp(-beta*max(t, s)) over s in [a, b]; needs a <= b."""
    t = np.asarray(t, dtype=float)
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if np.any(a > b):
        raise ValueError("psi needs a <= b")
    m = np.maximum(np.minimum(t, b), a)
    out = (np.exp(-beta * m) - np.exp(-beta * b)) / beta + (m - a) * np.exp(-beta * t)
    return float(out) if out.ndim == 0 else out


def nu(x, y, beta: float):
    """Double integral of exp(-beta*max(s, t)) over [0, x] x [0, y]."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    m = np.minimum(x, y)
    out = (2.0 - 2.0 * np.exp(-beta * m)
           - beta * m * (np.exp(-beta * x) + np.exp(-beta * y))) / beta ** 2
    return float(out) if out.ndim == 0 else out


def phi_omega_ct(omega, t, beta: float):
    """phi_{omega,t} = integral of exp(-beta*max(t,s)) e^{-j omega s} ds.

    Its real/imaginary parts are the pointwise values of the Re/Im frequency
    representers (for gamma = 1).  Vectorized over broadcastable omega, t.
    """
    omega = np.asarray(omega, dtype=float)
    t = np.asarray(t, dtype=float)
    omega_b, t_b = np.broadcast_arrays(omega, t)
    out = np.empty(omega_b.shape, dtype=complex)
    zero = omega_b == 0.0
    if np.any(zero):
        tz = t_b[zero]
        out[zero] = np.exp(-beta * tz) * (tz + 1.0 / beta)
    if np.any(~zero):
        w = omega_b[~zero]
        tn = t_b[~zero]
        jw = 1j * w
        ph = np.exp(-jw * tn)
        out[~zero] = np.exp(-beta * tn) * ((1.0 - ph) / jw + ph / (beta + jw))
    return complex(out) if out.ndim == 0 else out


def zeta(omega1: float, omega2: float, beta: float):
    """Transforms of the frequency representers at omega2 evaluated at omega1.

    Returns (zeta_r, zeta_i) with zeta_r = int phi^r_{omega2}(t) e^{-j omega1 t} dt
    and likewise for the imaginary-part representer.
    """
    zr, zi = _zeta_arrays(np.asarray([omega1], float), np.asarray([omega2], float), beta)
    return complex(zr[0, 0]), complex(zi[0, 0])


def _zeta_arrays(om1: np.ndarray, om2: np.ndarray, beta: float):
    """zeta_r, zeta_i on the grid om1 (rows) x om2 (cols), gamma = 1."""
    w1 = om1[:, None]
    w2 = om2[None, :]
    zr = np.empty((om1.size, om2.size), dtype=complex)
    zi = np.empty_like(zr)
    nz = np.broadcast_to(w2 != 0.0, zr.shape)
    if np.any(nz):
        W1 = np.broadcast_to(w1, zr.shape)[nz]
        W2 = np.broadcast_to(w2, zr.shape)[nz]
        term1 = 1.0 / ((W2 ** 2 - 1j * W2 * beta) * (beta + 1j * W1 + 1j * W2))
        term2 = 1.0 / ((W2 ** 2 + 1j * W2 * beta) * (beta + 1j * W1 - 1j * W2))
        zr[nz] = 0.5 * beta * (term1 + term2)
        zi[nz] = beta / 2j * (term1 - term2) - 1.0 / (W2 * (beta + 1j * W1))
    if np.any(~nz):
        W1 = np.broadcast_to(w1, zr.shape)[~nz]
        zr[~nz] = (2 * beta + 1j * W1) / (beta * (beta + 1j * W1) ** 2)
        zi[~nz] = 0.0
    return zr, zi


def _sbar(input: PiecewiseConstantInput, taus: np.ndarray) -> np.ndarray:
    """Matrix [max(tau_a - s_p, 0)] with rows over taus, cols over breakpoints."""
    return np.maximum(taus[:, None] - input.breakpoints[None, :], 0.0)


def zu_ct(input: PiecewiseConstantInput, omega: float, tau: float,
          beta: float) -> complex:
    """z_u(omega, tau): Re/Im give the (freq, input) inner products, gamma=1."""
    z = _zu_arrays(input, np.asarray([omega], float), np.asarray([tau], float), beta)
    return complex(z[0, 0])


def _zu_arrays(input: PiecewiseConstantInput, omegas: np.ndarray,
               taus: np.ndarray, beta: float) -> np.ndarray:
    """z_u on the omegas (rows) x taus (cols) grid, gamma = 1."""
    sb = _sbar(input, taus)                       # (n_tau, n_s + 1)
    xi = input.values
    eb = np.exp(-beta * sb)
    out = np.empty((omegas.size, taus.size), dtype=complex)
    zero = omegas == 0.0
    if np.any(zero):
        poly = (beta * sb + 2.0) * eb
        row = (xi[None, :] * (poly[:, 1:] - poly[:, :-1])).sum(axis=1) / beta ** 2
        out[zero, :] = row[None, :]
    wnz = omegas[~zero]
    if wnz.size:
        # exp(-(beta + j w) sbar) = eb * exp(-j w sbar), one omega at a time
        d_eb = xi[None, :] * (eb[:, 1:] - eb[:, :-1])
        first = d_eb.sum(axis=1)                  # omega-independent numerator
        res = np.empty((wnz.size, taus.size), dtype=complex)
        for k, w in enumerate(wnz):
            ph = np.exp(-1j * w * sb)
            g = eb * ph
            second = (xi[None, :] * (g[:, 1:] - g[:, :-1])).sum(axis=1)
            res[k] = (first / (1j * w * beta)
                      + beta * second / ((w ** 2 - 1j * w * beta) * (beta + 1j * w)))
        out[~zero, :] = res
    return out


def kappa_ij(input: PiecewiseConstantInput, i: int, j: int,
             tau1: float, tau2: float, beta: float) -> float:
    """Four-corner nu difference for segment pair (i, j)."""
    s = input.breakpoints
    s1 = [max(tau1 - s[i], 0.0), max(tau1 - s[i + 1], 0.0)]
    s2 = [max(tau2 - s[j], 0.0), max(tau2 - s[j + 1], 0.0)]
    return (nu(s1[0], s2[0], beta) - nu(s1[1], s2[0], beta)
            - nu(s1[0], s2[1], beta) + nu(s1[1], s2[1], beta))


def _uu_block_ct(input: PiecewiseConstantInput, taus1: np.ndarray,
                 taus2: np.ndarray, beta: float) -> np.ndarray:
    """[<phi_{u,tau1}, phi_{u,tau2}>] for gamma = 1.

    Uses the jump form of the double segment sum: with c_p the input jump at
    breakpoint p, the entry is sum_{p,q} c_p c_q nu(sbar_p(tau1), sbar_q(tau2)).
    """
    xi = input.values
    c = np.diff(np.concatenate(([0.0], xi, [0.0])))   # jump at each breakpoint
    S1 = _sbar(input, taus1)
    S2 = _sbar(input, taus2)
    out = np.zeros((taus1.size, taus2.size))
    for p in range(c.size):
        if c[p] == 0.0:
            continue
        x = S1[:, p][:, None]
        for q in range(c.size):
            if c[q] == 0.0:
                continue
            out += (c[p] * c[q]) * nu(x, S2[:, q][None, :], beta)
    return out


# ---------------------------------------------------------------------------
# discrete-time representers and sums (gamma = 1)
# ---------------------------------------------------------------------------

def dt_horizon(alpha: float, tol: float) -> int:
    """Smallest T with sum_{t>T} alpha^t (t + 1/(1-alpha)) <= tol.

    The summand bounds |phi_omega(t)| pointwise, so T truncates any
    frequency-representer sum with absolute tail error below tol.
    """
    if not 0.0 <= alpha < 1.0:
        raise KernelError("alpha must be in [0, 1)")
    if alpha == 0.0:
        return 1

    def tail(T: int) -> float:
        a = alpha
        geo = a ** (T + 1) / (1.0 - a)
        lin = a ** (T + 1) * ((T + 1) * (1.0 - a) + a) / (1.0 - a) ** 2
        return lin + geo / (1.0 - a)

    hi = 1
    while tail(hi) > tol:
        hi *= 2
        if hi > 10 ** 8:
            raise KernelError("horizon overflow; alpha too close to 1")
    lo = hi // 2
    while lo + 1 < hi:
        mid = (lo + hi) // 2
        if tail(mid) <= tol:
            hi = mid
        else:
            lo = mid
    return hi


def phi_omega_dt(omega, t, alpha: float, tol: float = 1e-12,
                 method: str = "closed"):
    """phi_omega(t) = sum_s alpha^{max(t,s)} e^{-j omega s} for gamma = 1.

    The closed path splits the sum at s = t (finite geometric head plus
    geometric tail); ``method='truncated'`` sums directly to the tail-bound
    horizon and exists as the oracle the closed path must match.
    """
    if not 0.0 <= alpha < 1.0:
        raise KernelError("alpha must be in [0, 1)")
    omega = np.asarray(omega, dtype=float)
    t = np.asarray(t, dtype=float)
    if method == "truncated":
        T = max(dt_horizon(alpha, tol), int(np.max(t)) + 1)
        s = np.arange(T + 1)
        om_b, t_b = np.broadcast_arrays(omega, t)
        out = np.empty(om_b.shape, dtype=complex)
        flat_o, flat_t = om_b.ravel(), t_b.ravel()
        res = out.ravel()
        for idx in range(flat_o.size):
            res[idx] = np.sum(alpha ** np.maximum(flat_t[idx], s)
                              * np.exp(-1j * flat_o[idx] * s))
        return complex(out) if out.ndim == 0 else out
    if method != "closed":
        raise ValueError(f"unknown method {method!r}")
    om_b, t_b = np.broadcast_arrays(omega, t)
    out = np.empty(om_b.shape, dtype=complex)
    zero = om_b == 0.0
    with np.errstate(invalid="ignore"):
        if np.any(zero):
            tz = t_b[zero]
            out[zero] = alpha ** tz * (tz + 1.0 / (1.0 - alpha))
        if np.any(~zero):
            w = om_b[~zero]
            tn = t_b[~zero]
            e = np.exp(-1j * w)
            head = alpha ** tn * (1.0 - np.exp(-1j * w * tn)) / (1.0 - e)
            tail = (alpha * e) ** tn / (1.0 - alpha * e)
            out[~zero] = head + tail
    return complex(out) if out.ndim == 0 else out


def _phi_omega_dt_matrix(omegas: np.ndarray, T: int, alpha: float) -> np.ndarray:
    """Matrix [phi_omega(t)] with rows t = 0..T, cols over omegas (gamma=1)."""
    t = np.arange(T + 1, dtype=float)
    return phi_omega_dt(omegas[None, :], t[:, None], alpha).reshape(T + 1, omegas.size)


def _shifted_input_matrix(u: DiscreteInput, taus: np.ndarray, T: int) -> np.ndarray:
    """Matrix [u_{tau_i - t}] with rows t = 0..T, cols over integer taus."""
    t = np.arange(T + 1)
    lag = taus[None, :].astype(int) - t[:, None]
    return u.value(lag)


# ---------------------------------------------------------------------------
# public pointwise values and inner products
# ---------------------------------------------------------------------------

def phi_u_value(d: Dataset, spec: KernelSpec, tau: float, t):
    """Pointwise value phi_{u,tau}(t) of the input-functional representer."""
    taus = d.sample_times
    if not np.any(np.isclose(taus, tau)):
        raise IndexError(f"tau={tau} is not a sample time of the dataset")
    t = np.asarray(t, dtype=float)
    if spec.axis == DISCRETE:
        s = np.arange(int(tau) + 1)
        vals = kernel_eval(spec, t[..., None], s) * d.input.value(int(tau) - s)
        out = np.sum(np.atleast_1d(vals), axis=-1)
    else:
        sb = _sbar(d.input, np.asarray([tau]))[0]
        xi = d.input.values
        acc = np.zeros(t.shape)
        for i in range(xi.size):
            acc += xi[i] * psi(t, sb[i + 1], sb[i], spec.beta)
        out = spec.gamma * acc
    return float(out) if out.ndim == 0 else out


def phi_descriptor_value(d: Dataset, spec: KernelSpec, desc: BasisDescriptor, t):
    """Pointwise value of any basis representer at time(s) t."""
    if desc.kind == INPUT:
        return phi_u_value(d, spec, desc.arg, t)
    if spec.axis == DISCRETE:
        z = spec.gamma * phi_omega_dt(desc.arg, np.asarray(t, float), spec.decay)
    else:
        z = spec.gamma * phi_omega_ct(desc.arg, np.asarray(t, float), spec.decay)
    out = np.real(z) if desc.kind == FREQ_REAL else np.imag(z)
    out = np.asarray(out)
    return float(out) if out.ndim == 0 else out


def _freq_pair_value(Zr: np.ndarray, Zi: np.ndarray, kind1: str, kind2: str):
    """Dispatch the four Re/Im pairings given zeta_r/zeta_i arrays."""
    if kind1 == FREQ_REAL and kind2 == FREQ_REAL:
        return Zr.real
    if kind1 == FREQ_REAL and kind2 == FREQ_IMAG:
        return Zi.real
    if kind1 == FREQ_IMAG and kind2 == FREQ_REAL:
        return Zr.imag
    return Zi.imag


def freq_freq_cross(spec: KernelSpec, omegas1: np.ndarray, omegas2: np.ndarray,
                    tol: float = 1e-12):
    """(zeta_r, zeta_i)-style arrays on omegas1 x omegas2, scaled by gamma."""
    omegas1 = np.asarray(omegas1, dtype=float)
    omegas2 = np.asarray(omegas2, dtype=float)
    if spec.axis == CONTINUOUS:
        zr, zi = _zeta_arrays(omegas1, omegas2, spec.decay)
        return spec.gamma * zr, spec.gamma * zi
    T = dt_horizon(spec.decay, tol)
    P = _phi_omega_dt_matrix(omegas2, T, spec.decay)      # (T+1, n2)
    E = np.exp(-1j * omegas1[:, None] * np.arange(T + 1)[None, :])
    zr = E @ P.real
    zi = E @ P.imag
    return spec.gamma * zr, spec.gamma * zi


def freq_u_cross(d: Dataset, spec: KernelSpec, omegas: np.ndarray,
                 taus: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    """Complex array Z with Z[k, i] = <phi^r_{omega_k}, phi_{u,tau_i}>
    + j <phi^i_{omega_k}, phi_{u,tau_i}> (gamma included)."""
    omegas = np.asarray(omegas, dtype=float)
    taus = np.asarray(taus, dtype=float)
    if spec.axis == CONTINUOUS:
        return spec.gamma * _zu_arrays(d.input, omegas, taus, spec.decay)
    T = int(np.max(taus)) if taus.size else 0
    M = _phi_omega_dt_matrix(omegas, T, spec.decay)       # (T+1, n_w)
    U = _shifted_input_matrix(d.input, taus, T)           # (T+1, n_tau)
    return spec.gamma * (M.T @ U)


def uu_block(d: Dataset, spec: KernelSpec, taus1: np.ndarray | None = None,
             taus2: np.ndarray | None = None) -> np.ndarray:
    """Gram block [<phi_{u,tau1}, phi_{u,tau2}>] (gamma included).

    Discrete time is the (generalized) Toeplitz product V K V^T with
    V[i, t] = u_{tau_i - t}; continuous time uses the nu closed form.
    """
    taus1 = d.sample_times if taus1 is None else np.asarray(taus1, float)
    taus2 = d.sample_times if taus2 is None else np.asarray(taus2, float)
    if spec.axis == DISCRETE:
        T = int(max(np.max(taus1), np.max(taus2)))
        V1 = _shifted_input_matrix(d.input, taus1, T)     # (T+1, n1)
        V2 = _shifted_input_matrix(d.input, taus2, T)
        tgrid = np.arange(T + 1, dtype=float)
        K = kernel_eval(spec, tgrid[:, None], tgrid[None, :])
        return V1.T @ K @ V2
    return spec.gamma * _uu_block_ct(d.input, taus1, taus2, spec.decay)


def inner_product(d: Dataset, spec: KernelSpec, a: BasisDescriptor,
                  b: BasisDescriptor, tol: float = 1e-12) -> float:
    """<phi_a, phi_b> in the kernel's Hilbert space."""
    if a.kind == INPUT and b.kind == INPUT:
        blk = uu_block(d, spec, np.asarray([a.arg]), np.asarray([b.arg]))
        return float(blk[0, 0])
    if a.kind == INPUT or b.kind == INPUT:
        freq, inp = (b, a) if a.kind == INPUT else (a, b)
        z = freq_u_cross(d, spec, np.asarray([freq.arg]),
                         np.asarray([inp.arg]), tol)[0, 0]
        return float(z.real) if freq.kind == FREQ_REAL else float(z.imag)
    Zr, Zi = freq_freq_cross(spec, np.asarray([a.arg]), np.asarray([b.arg]), tol)
    return float(_freq_pair_value(Zr, Zi, a.kind, b.kind)[0, 0])
