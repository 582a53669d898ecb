"""
Transductive regression loss and its gradient with respect to A.

    loss(A) = (1/n_l) ||Z~ - A K J||^2 + gamma_a Tr(A K A^T) + (gamma_i / n^2) Tr(A K L K A^T)
"""
from __future__ import annotations

from typing import Optional, Tuple

import numpy as np

from ..error_handler import ParameterError
from ..graph import laplacian_quadratic
from .base import FitProblem


def loss_and_gradient(
    problem: FitProblem,
    A: np.ndarray,
    gamma_a: Optional[float] = None,
    gamma_i: Optional[float] = None,
) -> Tuple[float, np.ndarray]:
    """Loss value and exact gradient; the weights default to the problem's hyperparams."""
    gamma_a = problem.hyperparams.gamma_a if gamma_a is None else gamma_a
    gamma_i = problem.hyperparams.gamma_i if gamma_i is None else gamma_i
    A = np.asarray(A, dtype=np.float64)
    if A.shape != (problem.d_z, problem.n_basis):
        raise ParameterError(
            f"A must be {problem.d_z}x{problem.n_basis}, got {A.shape[0]}x{A.shape[1]}"
        )

    K, n_l, n = problem.kernel, problem.n_labeled, problem.n_basis
    AK = A @ K
    residual = problem.targets - AK * problem.labeled_mask

    loss = float(np.sum(residual**2)) / n_l + gamma_a * float(np.sum(AK * A))
    grad = (-2.0 / n_l) * (residual * problem.labeled_mask) @ K + 2.0 * gamma_a * AK

    if problem.laplacian is not None and gamma_i > 0:
        scale = gamma_i / n**2
        loss += scale * laplacian_quadratic(AK, problem.laplacian)
        AKL = np.asarray(problem.laplacian @ AK.T).T
        grad += 2.0 * scale * AKL @ K
    return loss, grad
