"""Phase compensation for GHZ-type logical states of colour codes."""

__version__ = "0.1.0"

from .analysis import (
    ConvergenceStats,
    DofCount,
    ExtremaReport,
    count_quasi_local_dof,
    count_until_sufficient,
    mean_amplitude_study,
    monte_carlo_convergence,
    threshold_sweep,
    verify_extrema,
)
from .codes import CodeSpec, ControlVector, PhaseVector, build_code, logical_state, two_plaquette_subcode
from .core_state import SparseState, XProduct, apply_z_rotations, x_expectation
from .errors import CapacityError, DomainError, NumericConsistencyError
from .expectations import closed_form_expectation, expectations, oracle_expectations, sum_objective
from .measurement import NoiseParams, sample_estimates
from .optimizer import ConvergenceReport, ScanPolicy, optimize, optimize_batch

__all__ = [
    "CapacityError", "CodeSpec", "ControlVector", "ConvergenceReport", "ConvergenceStats", "DofCount",
    "DomainError", "ExtremaReport", "NoiseParams", "NumericConsistencyError", "PhaseVector", "ScanPolicy",
    "SparseState", "XProduct", "apply_z_rotations", "build_code", "closed_form_expectation",
    "count_quasi_local_dof", "count_until_sufficient", "expectations", "logical_state",
    "mean_amplitude_study", "monte_carlo_convergence", "optimize", "optimize_batch", "oracle_expectations",
    "sample_estimates", "sum_objective", "threshold_sweep", "two_plaquette_subcode", "verify_extrema",
    "x_expectation",
]
