# Functions and classes for the seasonal West Nile virus model with nonlocal dispersal and free boundaries

# Expose submodules:
from . import utils

# Expose commonly-used classes and functions directly:
from .errors import (WNVError, ConfigError, ParameterError, KernelMismatchError, StepSizeError,
                     RootSelectionError, ConvergenceError, BracketError)
from .model import ModelParams, SeasonClock, Phase, validate_params, basic_reproduction_number, load_params
from .kernels import Kernel, make_kernel, check_kernel

from .ode_eigen import lambda1_O, lambda1_O_oracle, spectral_constants, zero_level_residual, sign_bounds, contour_zero
from .nonlocal_eigen import lambda1_star, lambda1_P, lambda1_F, FreeBoundaryIndex
from .periodic_solver import solve_fixed, periodic_from_above, periodic_from_below, ode_periodic
from .fb_sim import FreeBoundarySimulation, SimSettings, simulate, energy_bound
from .classify import Verdict, classify, classify_static, classify_dynamic, mu_threshold, smallness_threshold
from .config import RunConfig, parse_config, emit_config
