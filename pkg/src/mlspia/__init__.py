"""Least-squares B-spline fitting by progressive iterative approximation with memory."""

from .iterate import (
    ConvergenceRecord,
    DivergenceError,
    FitProblem,
    IterationState,
    RunResult,
    curve_problem,
    direct_ls,
    error_E,
    init_state,
    lspia_step,
    max_deviation,
    mlspia_step,
    mlspia_step_per_point,
    mlspia_surface_step,
    run,
    surface_problem,
)
from .params import chord_params, grid_params
from .spectral import (
    SpectralSummary,
    WeightSet,
    extreme_singular_values,
    iteration_matrix,
    optimal_weights,
    optimal_weights_surface,
    theoretical_radius,
    validate_weights,
)
from .splines import KnotVector, collocate, eval_basis, eval_curve, eval_surface, make_knots

__version__ = "0.1.0"
