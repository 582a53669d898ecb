"""
Visual-to-semantic regressors.
"""

from .base import EmbeddingModel, FitProblem, HyperParams, Variant
from .objective import loss_and_gradient
from .solvers import (
    assemble_problem,
    fit_augmented,
    fit_iterative,
    fit_manifold,
    fit_ridge,
    project,
    project_raw,
    solve_problem,
)
from .serialization import dump_model, load_model
from .factory import RegressorFactory

__all__ = [
    'EmbeddingModel',
    'FitProblem',
    'HyperParams',
    'Variant',
    'loss_and_gradient',
    'assemble_problem',
    'fit_augmented',
    'fit_iterative',
    'fit_manifold',
    'fit_ridge',
    'project',
    'project_raw',
    'solve_problem',
    'dump_model',
    'load_model',
    'RegressorFactory',
]
