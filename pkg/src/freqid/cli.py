"""Command-line front end: simulate benchmark data, identify gain-bounded
models, and tune hyperparameters.

Outputs are plot-ready CSV files plus JSON model/report documents; an
optional ``--gnuplot`` flag emits a ready-to-run plot script.  A TOML config
file may provide any flag's value (tables named after the subcommands);
explicit command-line flags win.

Exit codes: 0 success, 2 usage/config error, 3 data error, 4 numeric
failure.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # pragma: no cover - python < 3.11
    import tomli as tomllib

from .identify import (IdentifyError, SupplyRate, delta_reduce,
                       dissipativity_reduce, fit, frequency_response,
                       hinf_grid_sup, identify, impulse_response,
                       model_from_json, model_to_json, weighted_reduce)
from .kernels import CONTINUOUS, DISCRETE, KernelError, KernelSpec
from .problem import (ProblemError, build_partition, mesh_bound,
                      omega_max_ct)
from .qcqp import SolverConfig, SolverError
from .signals import (DataError, Dataset, DiscreteInput,
                      PiecewiseConstantInput, load_dataset, save_dataset)
from .sim import (RationalTF, SimError, add_noise_snr, example_continuous_tf,
                  example_discrete_tf, impulse_response_of, simulate)
from .tuning import TuneConfig, TuneError, tune

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_NUMERIC = 4


class ConfigError(ValueError):
    pass


def _fail(code: int, message: str) -> int:
    sys.stderr.write(json.dumps({"error": message, "exit_code": code}) + "\n")
    return code


def _float_list(text: str) -> np.ndarray:
    try:
        return np.array([float(p) for p in text.split(",") if p.strip()])
    except ValueError as exc:
        raise ConfigError(f"bad numeric list {text!r}: {exc}") from None


def _merge_config(args: argparse.Namespace, parser: argparse.ArgumentParser):
    """Fill unset flags from the TOML config table for this subcommand."""
    if not args.config:
        return
    try:
        with open(args.config, "rb") as fh:
            doc = tomllib.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"bad config file: {exc}") from None
    table = doc.get(args.command, {})
    if not isinstance(table, dict):
        raise ConfigError(f"config table [{args.command}] must be a table")
    known = set(vars(args))
    for key, value in table.items():
        attr = key.replace("-", "_")
        if attr not in known:
            raise ConfigError(f"unknown config key {key!r}")
        if getattr(args, attr) is None or getattr(args, attr) is False:
            setattr(args, attr, value)


# values applied after config merging, so a config file can override them
FALLBACKS = {
    "simulate": {"n": 150, "snr": "inf", "seed": 0, "segments": 50,
                 "t_end": 10.0},
    "identify": {"gamma": 1.0, "eps": 1e-5, "rho": 1.0, "n_p": 314},
    "tune": {"eps": 1e-5, "rho": 1.0, "n_p": 314},
}


def _apply_fallbacks(args) -> None:
    for attr, value in FALLBACKS.get(args.command, {}).items():
        if getattr(args, attr) is None:
            setattr(args, attr, value)


def _axis_of(args) -> str:
    if args.axis not in (DISCRETE, CONTINUOUS):
        raise ConfigError("axis must be 'discrete' or 'continuous'")
    return args.axis


def _write_csv(path: str, header: str, rows) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(header + "\n")
        for row in rows:
            fh.write(",".join(f"{v:.17g}" for v in row) + "\n")


# ---------------------------------------------------------------------------
# simulate
# ---------------------------------------------------------------------------

def _builtin_system(name: str) -> RationalTF:
    if name == "example1":
        return example_discrete_tf()
    if name == "example3":
        return example_continuous_tf()
    raise ConfigError(f"unknown system {name!r} (use example1 or example3)")


def cmd_simulate(args) -> int:
    if args.system:
        tf = _builtin_system(args.system)
    else:
        if args.num is None or args.den is None or args.axis is None:
            raise ConfigError("need --system or --axis/--num/--den")
        tf = RationalTF(_axis_of(args), _float_list(args.num),
                        _float_list(args.den))
    if not tf.is_stable:
        sys.stderr.write(json.dumps({"warning": "unstable system"}) + "\n")
    n = int(args.n)
    if n < 1:
        raise ConfigError("need n >= 1 samples")
    seed = int(args.seed)
    snr = float(args.snr) if args.snr != "inf" else math.inf
    rng = np.random.default_rng(seed)
    if tf.axis == DISCRETE:
        u = DiscreteInput(rng.standard_normal(n))
        times = np.arange(n, dtype=float)
    else:
        n_seg = int(args.segments)
        t_end = float(args.t_end)
        if n_seg < 1 or t_end <= 0:
            raise ConfigError("need segments >= 1 and t-end > 0")
        if args.input_out is None:
            raise ConfigError("continuous simulation needs --input-out")
        u = PiecewiseConstantInput(np.linspace(0.0, t_end, n_seg + 1),
                                   rng.standard_normal(n_seg))
        times = np.linspace(t_end / n, t_end, n)
    y = simulate(tf, u, times)
    # noise stream derived from seed + 1 so input and noise are independent
    y = add_noise_snr(y, snr, seed + 1)
    d = Dataset(tf.axis, u, times, y)
    save_dataset(d, args.out, input_path=args.input_out)
    return EXIT_OK


# ---------------------------------------------------------------------------
# identify
# ---------------------------------------------------------------------------

def _load_data(args) -> Dataset:
    axis = _axis_of(args)
    try:
        return load_dataset(args.data, axis, input_path=args.input)
    except FileNotFoundError:
        raise DataError("dataset not found: " + str(args.data)) from None


def _make_partition(args, d: Dataset, spec: KernelSpec, lam: float):
    if args.unconstrained:
        return None
    if args.omega_max is not None:
        omega_max = float(args.omega_max)
    elif d.axis == DISCRETE:
        omega_max = math.pi
    else:
        omega_max = omega_max_ct(spec, d.outputs, lam)
    if omega_max <= 0:
        return build_partition(0.0, 1.0)
    if args.mesh is not None:
        mesh = float(args.mesh)
    else:
        mesh = omega_max / int(args.n_p)
    return build_partition(omega_max, mesh)


def _reduction_of(args, d: Dataset):
    """Apply the configured problem reduction; returns (dataset, impulse
    post-map or None)."""
    modes = [args.supply_rate is not None, args.reference_model is not None,
             args.weight_num is not None or args.weight_den is not None]
    if sum(modes) > 1:
        raise ConfigError("choose at most one reduction mode")
    if args.supply_rate is not None:
        vals = _float_list(args.supply_rate)
        if vals.size != 3:
            raise ConfigError("--supply-rate needs 'qu,quy,qy'")
        try:
            q = SupplyRate(*vals)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        dn, back = dissipativity_reduce(d, q)
        return dn, lambda g, t: back.apply_impulse(g, t)
    if args.reference_model is not None:
        with open(args.reference_model, "r", encoding="utf-8") as fh:
            ref = model_from_json(fh.read())
        gbar = lambda t: impulse_response(ref, t)
        return delta_reduce(d, gbar), None
    if args.weight_num is not None or args.weight_den is not None:
        if args.weight_num is None or args.weight_den is None:
            raise ConfigError("need both --weight-num and --weight-den")
        w = RationalTF(DISCRETE, _float_list(args.weight_num),
                       _float_list(args.weight_den))
        dn, back = weighted_reduce(d, w)
        return dn, lambda g, t: back.apply_impulse(g)
    return d, None


def _impulse_grid(d: Dataset) -> np.ndarray:
    if d.axis == DISCRETE:
        return np.arange(int(d.sample_times.max()) + 1, dtype=float)
    return np.linspace(0.0, float(d.sample_times.max()), 500)


def cmd_identify(args) -> int:
    d = _load_data(args)
    lam = float(args.lam)
    eps = float(args.eps)
    rho = float(args.rho)
    if not 0 < eps < 1:
        raise ConfigError("eps must lie in (0, 1)")
    if rho <= 0:
        raise ConfigError("rho must be positive")
    spec = KernelSpec(d.axis, float(args.decay), float(args.gamma))
    d_fit, post = _reduction_of(args, d)
    p = _make_partition(args, d_fit, spec, lam)
    t0 = time.perf_counter()
    model = identify(d_fit, spec, p, lam, eps, rho=rho)
    elapsed = time.perf_counter() - t0

    with open(args.model_out, "w", encoding="utf-8") as fh:
        fh.write(model_to_json(model))

    grid_fine = None
    check = None
    if p is not None and p.n_intervals > 0:
        grid_fine = build_partition(p.omega_max, p.mesh / 10.0)
        check = hinf_grid_sup(model, grid_fine)
    if args.freq_out:
        grid = grid_fine if grid_fine is not None else \
            build_partition(math.pi if d.axis == DISCRETE else 10.0, 0.01)
        F = frequency_response(model, grid.omegas)
        _write_csv(args.freq_out, "omega,re,im,mag",
                   zip(grid.omegas, F.real, F.imag,
                       np.hypot(F.real, F.imag)))
    tgrid = _impulse_grid(d)
    g_hat = impulse_response(model, tgrid)
    if post is not None:
        g_hat = post(g_hat, tgrid)
    if args.impulse_out:
        _write_csv(args.impulse_out, "t,g", zip(tgrid, g_hat))

    report = {
        "lambda": lam, "eps": eps, "rho": rho,
        "decay": spec.decay, "gamma": spec.gamma,
        "n_data": int(d_fit.n_samples),
        "n_partition": int(p.n_intervals) if p is not None else 0,
        "mesh": p.mesh if p is not None else None,
        "mesh_certified": model.certified,
        "active_frequencies": len(model.active_omegas),
        "outer_iterations": model.iterations,
        "newton_iterations": model.report.newton_iterations,
        "polished": model.report.polished,
        "rkhs_norm_sq": model.report.rkhs_norm_sq,
        "timing_seconds": elapsed,
    }
    if check is not None:
        report["hinf_sup"] = rho * check.grid_sup
        report["hinf_certified_bound"] = rho * check.certified_bound
    if args.truth_num is not None and args.truth_den is not None:
        tf = RationalTF(d.axis, _float_list(args.truth_num),
                        _float_list(args.truth_den))
        g_true = impulse_response_of(tf, tgrid)
        report["fit"] = fit(g_hat, g_true)
    if args.report_out:
        with open(args.report_out, "w", encoding="utf-8") as fh:
            json.dump(report, fh, indent=2)
            fh.write("\n")
    if args.gnuplot:
        _write_gnuplot(args)
    return EXIT_OK


def _write_gnuplot(args) -> None:
    lines = ["set datafile separator ','", "set key autotitle columnhead"]
    if args.freq_out:
        lines += [f"set terminal png; set output 'freq.png'",
                  f"plot '{args.freq_out}' using 1:4 with lines title 'gain'"]
    if args.impulse_out:
        lines += ["set output 'impulse.png'",
                  f"plot '{args.impulse_out}' using 1:2 with lines "
                  "title 'impulse response'"]
    with open(args.gnuplot, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# tune
# ---------------------------------------------------------------------------

def cmd_tune(args) -> int:
    d = _load_data(args)
    eps = float(args.eps)
    if not 0 < eps < 1:
        raise ConfigError("eps must lie in (0, 1)")
    kwargs = {}
    if args.train_count is not None:
        kwargs["train_count"] = int(args.train_count)
    elif args.train_fraction is not None:
        kwargs["train_fraction"] = float(args.train_fraction)
    else:
        kwargs["train_fraction"] = 2.0 / 3.0
    if args.lambdas is not None:
        kwargs["lambdas"] = _float_list(args.lambdas)
    if args.decays is not None:
        kwargs["decays"] = _float_list(args.decays)
    try:
        cfg = TuneConfig(**kwargs)
        cfg.grid(d.axis)  # validate candidates early
    except TuneError as exc:
        raise ConfigError(str(exc)) from None
    if args.unconstrained:
        p = None
    elif d.axis == DISCRETE:
        p = build_partition(math.pi, math.pi / int(args.n_p))
    else:
        if args.omega_max is None:
            raise ConfigError("continuous tuning needs --omega-max")
        p = build_partition(float(args.omega_max),
                            float(args.omega_max) / int(args.n_p))
    result = tune(d, cfg, p, eps, rho=float(args.rho))
    result.save_table(args.table_out)
    if args.best_out:
        with open(args.best_out, "w", encoding="utf-8") as fh:
            json.dump({"lambda": result.lam, "decay": result.decay,
                       "v": result.v}, fh, indent=2)
            fh.write("\n")
    return EXIT_OK


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="freqid",
        description="Kernel-based LTI identification with a hard gain bound")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="generate benchmark data")
    sim.add_argument("--config")
    sim.add_argument("--system", help="example1 (discrete) or example3 "
                     "(continuous)")
    sim.add_argument("--axis")
    sim.add_argument("--num", help="numerator coefficients a,b,c,...")
    sim.add_argument("--den", help="denominator coefficients")
    sim.add_argument("--n", help="number of output samples")
    sim.add_argument("--snr", help="SNR in dB or 'inf'")
    sim.add_argument("--seed")
    sim.add_argument("--segments",
                     help="piecewise-constant input segments (continuous)")
    sim.add_argument("--t-end",
                     help="input/record end time (continuous)")
    sim.add_argument("--out", required=True, help="output CSV (t,u,y)")
    sim.add_argument("--input-out", help="input CSV (s,xi; continuous)")
    sim.set_defaults(func=cmd_simulate)

    ident = sub.add_parser("identify", help="fit a gain-bounded model")
    ident.add_argument("--config")
    ident.add_argument("--data", required=True)
    ident.add_argument("--input", help="input CSV (continuous data)")
    ident.add_argument("--axis", required=True)
    ident.add_argument("--decay", required=True, type=float,
                       help="kernel decay (alpha or beta)")
    ident.add_argument("--gamma", type=float)
    ident.add_argument("--lam", required=True, type=float)
    ident.add_argument("--eps", type=float)
    ident.add_argument("--rho", type=float,
                       help="gain bound")
    ident.add_argument("--n-p", help="partition intervals")
    ident.add_argument("--mesh", help="partition mesh (overrides --n-p)")
    ident.add_argument("--omega-max", help="partition upper frequency")
    ident.add_argument("--unconstrained", action="store_true",
                       help="skip the gain constraints")
    ident.add_argument("--supply-rate", help="'qu,quy,qy' dissipativity "
                       "reduction")
    ident.add_argument("--reference-model", help="model JSON; identify the "
                       "model-error system")
    ident.add_argument("--weight-num", help="weight numerator (discrete)")
    ident.add_argument("--weight-den", help="weight denominator")
    ident.add_argument("--truth-num", help="ground-truth numerator for fit")
    ident.add_argument("--truth-den", help="ground-truth denominator")
    ident.add_argument("--model-out", required=True)
    ident.add_argument("--freq-out", help="frequency-response CSV")
    ident.add_argument("--impulse-out", help="impulse-response CSV")
    ident.add_argument("--report-out", help="report JSON")
    ident.add_argument("--gnuplot", help="emit a gnuplot script here")
    ident.set_defaults(func=cmd_identify)

    tun = sub.add_parser("tune", help="hyperparameter grid search")
    tun.add_argument("--config")
    tun.add_argument("--data", required=True)
    tun.add_argument("--input")
    tun.add_argument("--axis", required=True)
    tun.add_argument("--train-count")
    tun.add_argument("--train-fraction")
    tun.add_argument("--lambdas", help="comma-separated candidates")
    tun.add_argument("--decays", help="comma-separated candidates")
    tun.add_argument("--eps")
    tun.add_argument("--rho")
    tun.add_argument("--n-p")
    tun.add_argument("--omega-max")
    tun.add_argument("--unconstrained", action="store_true")
    tun.add_argument("--table-out", required=True)
    tun.add_argument("--best-out")
    tun.set_defaults(func=cmd_tune)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code not in (0, None) else 0
    try:
        _merge_config(args, parser)
        _apply_fallbacks(args)
        return args.func(args)
    except (ConfigError, KernelError, ProblemError, TuneError) as exc:
        return _fail(EXIT_CONFIG, str(exc))
    except (DataError, OSError) as exc:
        return _fail(EXIT_DATA, str(exc))
    except (SolverError, IdentifyError, SimError, np.linalg.LinAlgError,
            FloatingPointError) as exc:
        return _fail(EXIT_NUMERIC, str(exc))
    except ValueError as exc:
        return _fail(EXIT_CONFIG, str(exc))


if __name__ == "__main__":
    sys.exit(main())
