"""Kernel-based identification of LTI impulse responses with a hard
frequency-domain gain bound enforced through convex constraints."""

from .kernels import CONTINUOUS, DISCRETE, KernelSpec, kernel_eval, \
    kernel_moments, mu_bound
from .signals import Dataset, DiscreteInput, PiecewiseConstantInput, \
    load_dataset, save_dataset
from .problem import FrequencyPartition, GramProblem, assemble, \
    build_partition, mesh_bound, omega_max_ct
from .qcqp import QuadraticProgram, SolveReport, SolverConfig, solve_qcqp
from .identify import Model, fit, frequency_response, hinf_grid_sup, \
    identify, impulse_response, model_from_json, model_to_json, predict
from .tuning import TuneConfig, TuneResult, tune, validation_error
from .sim import RationalTF, add_noise_snr, example_continuous_tf, \
    example_discrete_tf, impulse_response_of, simulate

__version__ = "0.1.0"
