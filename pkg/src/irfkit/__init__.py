"""Intrinsic random functions of order d on the real line.

Allowable measures, spectral simulation of I(d) processes, generalized
covariances, universal kriging and a Monte Carlo harness relating the two
process classes.
"""

from .covariance import (
    IntrinsicCovariance,
    brownian_cov,
    cov_between_measures,
    gram_matrix,
    icf_eval,
    psd_check,
    structure_from_icf,
    variogram_brownian,
)
from .equivalence import (
    InvarianceReport,
    differenced_stationarity_test,
    negative_control,
    replicate_seeds,
    shift_invariance_test,
)
from .errors import (
    AlignmentError,
    EvaluationError,
    InfeasibleSupportError,
    IrfError,
    ModelError,
    NumericalError,
    OrderError,
    PathLengthError,
    QuadratureError,
    RangeError,
    SingularSystemError,
    ValidationError,
)
from .kriging import KrigingProblem, KrigingSolution, predict, predict_many, solve_closed_form, solve_kkt
from .measure import (
    AllowabilityReport,
    Measure,
    annihilation_defect,
    apply_measure,
    construct_allowable,
    finite_difference_measure,
    is_allowable,
    kriging_measure,
    max_order,
    shift_measure,
)
from .process import (
    PolynomialTrend,
    SampledPath,
    StructureEstimate,
    apply_measure_to_path,
    difference,
    empirical_structure_function,
    eval_trend,
    read_paths_csv,
    sample_trend,
    write_path_csv,
    write_paths_csv,
)
from .spectral import (
    DEFAULT_GRID,
    FrequencyGrid,
    ModelReport,
    SpectralModel,
    TimeGrid,
    brownian_model,
    kernel_g,
    simulate_id_path,
    simulate_id_paths,
    simulate_stationary_path,
    simulate_stationary_paths,
    theoretical_stationary_cov,
    theoretical_structure_function,
    validate_model,
)

__version__ = "0.1.0"

__all__ = [
    "AlignmentError",
    "AllowabilityReport",
    "DEFAULT_GRID",
    "EvaluationError",
    "FrequencyGrid",
    "InfeasibleSupportError",
    "IntrinsicCovariance",
    "InvarianceReport",
    "IrfError",
    "KrigingProblem",
    "KrigingSolution",
    "Measure",
    "ModelError",
    "ModelReport",
    "NumericalError",
    "OrderError",
    "PathLengthError",
    "PolynomialTrend",
    "QuadratureError",
    "RangeError",
    "SampledPath",
    "SingularSystemError",
    "SpectralModel",
    "StructureEstimate",
    "TimeGrid",
    "ValidationError",
    "annihilation_defect",
    "apply_measure",
    "apply_measure_to_path",
    "brownian_cov",
    "brownian_model",
    "construct_allowable",
    "cov_between_measures",
    "difference",
    "differenced_stationarity_test",
    "empirical_structure_function",
    "eval_trend",
    "finite_difference_measure",
    "gram_matrix",
    "icf_eval",
    "is_allowable",
    "kernel_g",
    "kriging_measure",
    "max_order",
    "negative_control",
    "predict",
    "predict_many",
    "psd_check",
    "read_paths_csv",
    "replicate_seeds",
    "sample_trend",
    "shift_invariance_test",
    "shift_measure",
    "simulate_id_path",
    "simulate_id_paths",
    "simulate_stationary_path",
    "simulate_stationary_paths",
    "solve_closed_form",
    "solve_kkt",
    "structure_from_icf",
    "theoretical_stationary_cov",
    "theoretical_structure_function",
    "validate_model",
    "variogram_brownian",
    "write_path_csv",
    "write_paths_csv",
]
