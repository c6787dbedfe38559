"""Input/output data model and CSV ingestion.

Discrete-time inputs are finite sample sequences, zero before time 0 and
after the last sample.  Continuous-time inputs are restricted to piecewise
constant functions ``u_t = sum_i xi_{i+1} 1_[s_i, s_{i+1})(t)`` — the class
for which all Gram entries have closed forms.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, replace

import numpy as np

from .kernels import CONTINUOUS, DISCRETE


class DataError(ValueError):
    """Malformed signal data."""


@dataclass(frozen=True)
class DiscreteInput:
    """Finite input sequence u_0 ... u_{n-1}; u_t = 0 outside [0, n)."""

    samples: np.ndarray

    def __post_init__(self) -> None:
        samples = np.atleast_1d(np.asarray(self.samples, dtype=float))
        if samples.ndim != 1 or samples.size < 1:
            raise DataError("input needs at least one sample")
        if not np.all(np.isfinite(samples)):
            raise DataError("non-finite input sample")
        object.__setattr__(self, "samples", samples)

    def value(self, t):
        """u_t with the at-rest convention (vectorized over integer t)."""
        t = np.asarray(t)
        idx = np.clip(t, 0, len(self.samples) - 1).astype(int)
        out = np.where((t >= 0) & (t < len(self.samples)),
                       self.samples[idx], 0.0)
        return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class PiecewiseConstantInput:
    """u_t = xi_{i+1} on [s_i, s_{i+1}); zero for t < 0 and t >= s_{n_s}."""

    breakpoints: np.ndarray  # s_0 = 0 < s_1 < ... < s_{n_s}
    values: np.ndarray       # xi_1 ... xi_{n_s}

    def __post_init__(self) -> None:
        s = np.atleast_1d(np.asarray(self.breakpoints, dtype=float))
        xi = np.atleast_1d(np.asarray(self.values, dtype=float))
        if s.size != xi.size + 1:
            raise DataError("need one more breakpoint than segment values")
        if xi.size < 1:
            raise DataError("need at least one segment")
        if s[0] != 0.0:
            raise DataError("first breakpoint must be 0")
        if np.any(np.diff(s) <= 0):
            raise DataError("breakpoints must be strictly increasing")
        if not (np.all(np.isfinite(s)) and np.all(np.isfinite(xi))):
            raise DataError("non-finite breakpoint or value")
        object.__setattr__(self, "breakpoints", s)
        object.__setattr__(self, "values", xi)

    @property
    def n_segments(self) -> int:
        return len(self.values)

    def value(self, t):
        t = np.asarray(t, dtype=float)
        # side='right' puts t = s_i into segment i+1, matching [s_i, s_{i+1})
        idx = np.searchsorted(self.breakpoints, t, side="right") - 1
        inside = (idx >= 0) & (idx < self.n_segments)
        out = np.where(inside, self.values[np.clip(idx, 0, self.n_segments - 1)], 0.0)
        return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class Dataset:
    """Sampled input/output record: y_{t_i} observed at strictly increasing t_i."""

    axis: str
    input: DiscreteInput | PiecewiseConstantInput
    sample_times: np.ndarray
    outputs: np.ndarray

    def __post_init__(self) -> None:
        t = np.atleast_1d(np.asarray(self.sample_times, dtype=float))
        y = np.atleast_1d(np.asarray(self.outputs, dtype=float))
        if t.size != y.size or t.size < 1:
            raise DataError("sample_times and outputs must match and be non-empty")
        if np.any(t < 0) or np.any(np.diff(t) <= 0):
            raise DataError("sample times must be strictly increasing and >= 0")
        if not (np.all(np.isfinite(t)) and np.all(np.isfinite(y))):
            raise DataError("non-finite sample time or output")
        if self.axis == DISCRETE:
            if not isinstance(self.input, DiscreteInput):
                raise DataError("discrete dataset needs a DiscreteInput")
            if np.any(t != np.round(t)):
                raise DataError("discrete sample times must be integers")
        elif self.axis == CONTINUOUS:
            if not isinstance(self.input, PiecewiseConstantInput):
                raise DataError("continuous dataset needs a PiecewiseConstantInput")
        else:
            raise DataError(f"unknown axis {self.axis!r}")
        object.__setattr__(self, "sample_times", t)
        object.__setattr__(self, "outputs", y)

    @property
    def n_samples(self) -> int:
        return len(self.sample_times)


def _read_csv_rows(text: str, header: tuple, path: str) -> np.ndarray:
    lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise DataError(f"{path}: empty file")
    got = tuple(col.strip() for col in lines[0].split(","))
    if got != header:
        raise DataError(f"{path}: expected header {','.join(header)!r}, got {lines[0]!r}")
    if len(lines) == 1:
        raise DataError(f"{path}: no samples")
    rows = np.empty((len(lines) - 1, len(header)))
    for i, line in enumerate(lines[1:], start=2):
        parts = line.split(",")
        if len(parts) != len(header):
            raise DataError(f"{path}: row {i}: expected {len(header)} fields")
        try:
            rows[i - 2] = [float(p) for p in parts]
        except ValueError as exc:
            raise DataError(f"{path}: row {i}: {exc}") from None
        if not np.all(np.isfinite(rows[i - 2])):
            raise DataError(f"{path}: row {i}: non-finite value")
    return rows


def load_dataset(path: str, axis: str,
                 input_path: str | None = None) -> Dataset:
    """Read a `t,u,y` CSV; continuous datasets also need a `s,xi` input file.

    For discrete data the `u` column is the input sequence at t = 0..n-1.
    For continuous data the `u` column is informational (the sampled value
    of the separately supplied piecewise-constant input).
    """
    with open(path, "r", encoding="utf-8") as fh:
        rows = _read_csv_rows(fh.read(), ("t", "u", "y"), path)
    t, u, y = rows[:, 0], rows[:, 1], rows[:, 2]
    if np.any(np.diff(t) <= 0):
        raise DataError(f"{path}: sample times not strictly increasing")
    if axis == DISCRETE:
        if np.any(t != np.round(t)):
            raise DataError(f"{path}: non-integer discrete time")
        n = int(t[-1]) + 1
        full = np.zeros(n)
        full[t.astype(int)] = u
        return Dataset(DISCRETE, DiscreteInput(full), t, y)
    if axis == CONTINUOUS:
        if input_path is None:
            raise DataError("continuous dataset requires an input breakpoint file")
        with open(input_path, "r", encoding="utf-8") as fh:
            irows = _read_csv_rows(fh.read(), ("s", "xi"), input_path)
        # n_s segments need n_s + 1 breakpoint rows; the final row carries
        # the closing breakpoint with xi = 0 as padding by convention
        s = irows[:, 0]
        xi = irows[:-1, 1]
        return Dataset(CONTINUOUS, PiecewiseConstantInput(s, xi), t, y)
    raise DataError(f"unknown axis {axis!r}")


def save_dataset(d: Dataset, path: str, input_path: str | None = None) -> None:
    """Inverse of load_dataset (17 significant digits round-trip float64)."""
    buf = io.StringIO()
    buf.write("t,u,y\n")
    u_at = d.input.value(d.sample_times if d.axis == CONTINUOUS
                         else d.sample_times.astype(int))
    for t, u, y in zip(d.sample_times, np.atleast_1d(u_at), d.outputs):
        buf.write(f"{t:.17g},{u:.17g},{y:.17g}\n")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(buf.getvalue())
    if d.axis == CONTINUOUS and input_path is not None:
        with open(input_path, "w", encoding="utf-8") as fh:
            fh.write("s,xi\n")
            xi = np.append(d.input.values, 0.0)
            for s, x in zip(d.input.breakpoints, xi):
                fh.write(f"{s:.17g},{x:.17g}\n")


def scale_outputs(d: Dataset, rho: float) -> Dataset:
    """Divide outputs by rho (normalizes a gain-bound rho to 1)."""
    if rho <= 0:
        raise DataError("rho must be positive")
    return replace(d, outputs=d.outputs / rho)
