"""Hyperparameter selection by hold-out validation.

The data are split into a training prefix and a validation remainder.  For
each (lambda, decay) candidate the model is fitted on the training part and
scored by the mean squared prediction error on the validation part; the grid
minimizer wins, with ties broken toward stronger regularization (larger
lambda, then larger decay).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .identify import IdentifyError, identify, predict
from .kernels import CONTINUOUS, DISCRETE, KernelSpec
from .problem import FrequencyPartition
from .qcqp import SolverConfig
from .signals import Dataset


class TuneError(RuntimeError):
    pass


def default_lambdas() -> np.ndarray:
    return np.logspace(-4.0, 2.0, 8)


def default_decays(axis: str) -> np.ndarray:
    if axis == DISCRETE:
        return np.linspace(0.5, 0.99, 8)
    return np.logspace(-1.0, 1.0, 8)


@dataclass(frozen=True)
class TuneConfig:
    """Hold-out split plus the candidate grid.

    Exactly one of ``train_count`` / ``train_fraction`` / explicit index
    pair (``train_idx``, ``val_idx``) fixes the split.  Empty grids fall
    back to the module defaults for the dataset's axis.
    """

    train_count: int | None = None
    train_fraction: float | None = None
    train_idx: np.ndarray | None = None
    val_idx: np.ndarray | None = None
    lambdas: np.ndarray | None = None
    decays: np.ndarray | None = None
    n_random: int = 0
    seed: int | None = None

    def __post_init__(self) -> None:
        explicit = self.train_idx is not None or self.val_idx is not None
        modes = sum([self.train_count is not None,
                     self.train_fraction is not None, explicit])
        if modes != 1:
            raise TuneError("specify exactly one split mode")
        if explicit and (self.train_idx is None or self.val_idx is None):
            raise TuneError("explicit split needs both index sets")
        if self.train_fraction is not None and not 0 < self.train_fraction < 1:
            raise TuneError("train_fraction must be in (0, 1)")
        if self.n_random < 0:
            raise TuneError("n_random must be >= 0")

    def split(self, n: int):
        """(training indices, validation indices) for an n-point dataset."""
        if self.train_idx is not None:
            it = np.asarray(self.train_idx, dtype=int)
            iv = np.asarray(self.val_idx, dtype=int)
            both = np.concatenate([it, iv])
            if np.intersect1d(it, iv).size:
                raise TuneError("split index sets overlap")
            if not np.array_equal(np.sort(both), np.arange(n)):
                raise TuneError("split must cover the dataset exactly")
            return it, iv
        if self.train_count is not None:
            k = int(self.train_count)
        else:
            k = int(round(self.train_fraction * n))
        if not 0 < k < n:
            raise TuneError(f"training prefix {k} infeasible for {n} samples")
        return np.arange(k), np.arange(k, n)

    def grid(self, axis: str):
        """All candidate (lambda, decay) pairs, grid first, then optional
        seeded random refinement points inside the grid's bounding box."""
        lams = (np.asarray(self.lambdas, dtype=float)
                if self.lambdas is not None else default_lambdas())
        decs = (np.asarray(self.decays, dtype=float)
                if self.decays is not None else default_decays(axis))
        if lams.size == 0 or decs.size == 0:
            raise TuneError("empty candidate grid")
        if np.any(lams <= 0):
            raise TuneError("lambda candidates must be positive")
        pts = [(float(l), float(a)) for l in lams for a in decs]
        if self.n_random:
            rng = np.random.default_rng(self.seed)
            lo_l, hi_l = math.log(lams.min()), math.log(lams.max())
            lo_d, hi_d = float(decs.min()), float(decs.max())
            for _ in range(self.n_random):
                pts.append((math.exp(rng.uniform(lo_l, hi_l)),
                            float(rng.uniform(lo_d, hi_d))))
        return pts


def _subset(d: Dataset, idx: np.ndarray) -> Dataset:
    return Dataset(d.axis, d.input, d.sample_times[idx], d.outputs[idx])


def validation_error(d: Dataset, split: TuneConfig, lam: float, decay: float,
                     p: FrequencyPartition | None, eps: float,
                     cfg: SolverConfig | None = None, rho: float = 1.0,
                     gamma: float = 1.0) -> float:
    """Mean squared hold-out prediction error of the tuned-candidate model."""
    it, iv = split.split(d.n_samples)
    spec = KernelSpec(d.axis, decay, gamma)
    try:
        m = identify(_subset(d, it), spec, p, lam, eps, cfg, rho=rho)
    except Exception as exc:
        raise TuneError(
            f"identification failed at lambda={lam:g}, decay={decay:g}: {exc}"
        ) from exc
    resid = d.outputs[iv] - predict(m, d.sample_times[iv])
    return float(np.mean(resid ** 2))


@dataclass(frozen=True)
class TuneResult:
    """Winning candidate plus the full audit table (lambda, decay, v)."""

    lam: float
    decay: float
    v: float
    table: np.ndarray

    def save_table(self, path) -> None:
        with open(path, "w") as fh:
            fh.write("lambda,decay,v\n")
            for lam, dec, v in self.table:
                fh.write(f"{lam:.17g},{dec:.17g},{v:.17g}\n")


def tune(d: Dataset, cfg: TuneConfig, p: FrequencyPartition | None,
         eps: float, solver_cfg: SolverConfig | None = None,
         rho: float = 1.0, gamma: float = 1.0) -> TuneResult:
    """Exhaustive candidate evaluation; failed candidates score infinity."""
    rows = []
    failures = []
    for lam, dec in cfg.grid(d.axis):
        try:
            v = validation_error(d, cfg, lam, dec, p, eps, solver_cfg,
                                 rho=rho, gamma=gamma)
        except TuneError as exc:
            failures.append(str(exc))
            v = math.inf
        rows.append((lam, dec, v))
    table = np.array(rows)
    if not np.any(np.isfinite(table[:, 2])):
        raise TuneError("all candidates failed: " + "; ".join(failures))
    # minimize v; break ties toward larger lambda, then larger decay
    best = min(range(len(rows)),
               key=lambda i: (rows[i][2], -rows[i][0], -rows[i][1]))
    lam, dec, v = rows[best]
    return TuneResult(lam=lam, decay=dec, v=v, table=table)
