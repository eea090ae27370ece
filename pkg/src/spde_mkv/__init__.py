"""Simulation of McKean-Vlasov SPDEs and their interacting particle systems
on a spectrally truncated Hilbert space, with propagation-of-chaos checks."""

__version__ = "0.1.0"

from .coefficients import (CoefficientSpec, constant_diffusion, eval_mu, eval_sigma,
                           linear_in_measure, mean_field_ou)
from .errors import ConfigError, DivergenceError, NonConvergenceError
from .mild_solver import SolverGrid, solve_frozen_flow, solve_paths, step
from .mkv_solver import MKVResult, PicardConfig, picard_step, solve_mkv
from .noise import NoiseStream, StreamBundle, gaussian_block
from .particle_system import simulate_system, step_system
from .spectral import (PathSample, SpectralModel, convolution_kernels, make_dirichlet_heat,
                       semigroup_apply)
from .transport import (EmpiricalMeasure, MeasureFlow, PathCloud, coupling_bound, moment,
                        wasserstein_p, wasserstein_path)
