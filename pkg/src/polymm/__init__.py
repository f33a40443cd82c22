"""Moment matching for polynomial input-output systems.

Moments are the coefficients ``Y_l`` of the steady-state output map
``y(v) = sum_l Y_l v^[l]`` of a system driven by a polynomial signal
generator.  The package computes them, fits reduced models that reproduce
``Y_1 .. Y_kappa``, and validates the fits in the time domain.
"""
from .errors import PolyMMError
from .kron import CONVENTION, reduced_kron_sum, reduced_power_matrix, reduced_power_vector
from .linear import MatchSpec, canonical_decomposition, method1_fit, method2_fit, order_bound, small_sigma_fit
from .moments import MomentSeries, moment_recursion
from .nonlinear import ReduceConfig, ReductionReport, reduce
from .simulate import estimate_moments_regression, simulate, steady_state_error
from .systems import PolySystem, SignalGenerator

__version__ = "0.1.0"

__all__ = [
    "CONVENTION", "MatchSpec", "MomentSeries", "PolyMMError", "PolySystem", "ReduceConfig",
    "ReductionReport", "SignalGenerator", "canonical_decomposition", "estimate_moments_regression",
    "method1_fit", "method2_fit", "moment_recursion", "order_bound", "reduce", "reduced_kron_sum",
    "reduced_power_matrix", "reduced_power_vector", "simulate", "small_sigma_fit", "steady_state_error",
]
