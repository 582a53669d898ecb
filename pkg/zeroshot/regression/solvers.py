"""
Closed-form and iterative solvers for the visual-to-semantic map.

Ridge:     A = Z (K + gamma_a n_l I)^-1
Manifold:  A = Z~ (K J + gamma_a n_l I + (gamma_i n_l / n^2) K L)^-1
"""
from __future__ import annotations

import warnings
from typing import Callable, Optional, Sequence, Tuple

import numpy as np
import structlog
from scipy import linalg
from scipy.linalg import lapack
from scipy.optimize import minimize

from ..dataio.augment import build_augmented
from ..dataio.base import Dataset, ZeroShotSplit
from ..error_handler import ParameterError, SolverError
from ..graph import build_knn_graph_from_kernel
from ..kernels import linear_kernel
from .base import EmbeddingModel, FitProblem, HyperParams, Variant
from .objective import loss_and_gradient

logger = structlog.get_logger(__name__)

CONDITION_WARNING = 1e12


def _as_inputs(X_tr: np.ndarray, Z_tr: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    X_tr = np.atleast_2d(np.asarray(X_tr, dtype=np.float64))
    Z_tr = np.asarray(Z_tr, dtype=np.float64)
    if Z_tr.ndim == 1:
        Z_tr = Z_tr[None, :]
    if X_tr.shape[0] < 1:
        raise ParameterError("need at least one labeled instance")
    if Z_tr.shape[1] != X_tr.shape[0]:
        raise ParameterError(
            f"{X_tr.shape[0]} labeled rows but {Z_tr.shape[1]} target columns"
        )
    return X_tr, Z_tr


def _check_condition(rcond: float, system: str) -> float:
    condition = np.inf if rcond == 0 else 1.0 / rcond
    logger.debug("system_condition", system=system, condition=condition)
    if not np.isfinite(condition) or rcond < np.finfo(np.float64).eps:
        raise SolverError(
            f"{system} system is numerically singular (condition estimate {condition:.3g})",
            condition=float(condition),
        )
    if condition > CONDITION_WARNING:
        logger.warning("ill_conditioned_system", system=system, condition=condition)
    return float(condition)


def _solve_symmetric(M: np.ndarray, rhs: np.ndarray, system: str) -> Tuple[np.ndarray, float]:
    """Solve M X = rhs with Cholesky, falling back to pivoted LU."""
    anorm = np.linalg.norm(M, 1)
    try:
        c, lower = linalg.cho_factor(M, check_finite=False)
    except linalg.LinAlgError:
        logger.debug("cholesky_failed", system=system)
        return _solve_general(M, rhs, system)
    rcond, _ = lapack.dpocon(c, anorm, uplo="L" if lower else "U")
    condition = _check_condition(rcond, system)
    return linalg.cho_solve((c, lower), rhs, check_finite=False), condition


def _solve_general(M: np.ndarray, rhs: np.ndarray, system: str,
                   transposed: bool = False) -> Tuple[np.ndarray, float]:
    """Solve M X = rhs (or M^T X = rhs) with pivoted LU."""
    anorm = np.linalg.norm(M, 1)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", linalg.LinAlgWarning)
        lu, piv = linalg.lu_factor(M, check_finite=False)
    rcond, _ = lapack.dgecon(lu, anorm, norm="1")
    condition = _check_condition(rcond, system)
    return linalg.lu_solve((lu, piv), rhs, trans=1 if transposed else 0, check_finite=False), condition


def _ridge_coefficients(K: np.ndarray, Z: np.ndarray, gamma_a: float) -> Tuple[np.ndarray, float]:
    n_l = K.shape[0]
    M = K + gamma_a * n_l * np.eye(n_l)
    At, condition = _solve_symmetric(M, Z.T, "ridge")
    return At.T, condition


def fit_ridge(
    X_tr: np.ndarray,
    Z_tr: np.ndarray,
    gamma_a: float,
    hyperparams: Optional[HyperParams] = None,
    variant: Variant = Variant.RIDGE,
) -> EmbeddingModel:
    """Kernel ridge regression from visual features to class embeddings."""
    X_tr, Z_tr = _as_inputs(X_tr, Z_tr)
    hyperparams = (hyperparams or HyperParams(gamma_i=0.0)).with_updates(gamma_a=gamma_a).validate()
    K = linear_kernel(X_tr)
    A, condition = _ridge_coefficients(K, Z_tr, gamma_a)
    logger.debug("ridge_fitted", n_labeled=X_tr.shape[0], d_z=Z_tr.shape[0])
    return EmbeddingModel(A=A, basis=X_tr, hyperparams=hyperparams, variant=variant,
                          n_labeled=X_tr.shape[0], condition=condition)


def assemble_problem(
    X_tr: np.ndarray,
    Z_tr: np.ndarray,
    X_te: np.ndarray,
    hyperparams: HyperParams,
    variant: Variant = Variant.MANIFOLD,
) -> FitProblem:
    """Stack labeled and unlabeled rows into one basis and build K, Z~ and L."""
    X_tr, Z_tr = _as_inputs(X_tr, Z_tr)
    X_te = np.asarray(X_te, dtype=np.float64).reshape(-1, X_tr.shape[1])
    n_l, n_u = X_tr.shape[0], X_te.shape[0]
    if n_u == 0 and hyperparams.gamma_i > 0:
        raise ParameterError("manifold regression with gamma_i > 0 needs unlabeled instances")

    basis = np.vstack([X_tr, X_te])
    K = linear_kernel(basis)
    targets = np.hstack([Z_tr, np.zeros((Z_tr.shape[0], n_u))])
    laplacian = None
    if hyperparams.gamma_i > 0:
        graph = build_knn_graph_from_kernel(K, hyperparams.graph_k, hyperparams.graph_weighting,
                                            hyperparams.heat_bandwidth)
        laplacian = graph.laplacian
    return FitProblem(basis=basis, kernel=K, targets=targets, n_labeled=n_l,
                      hyperparams=hyperparams, variant=variant, laplacian=laplacian)


def solve_problem(problem: FitProblem) -> EmbeddingModel:
    """Closed-form solution of an assembled transductive problem."""
    hp = problem.hyperparams
    n_l, n = problem.n_labeled, problem.n_basis
    K = problem.kernel

    if problem.laplacian is None or hp.gamma_i == 0:
        # K J + gamma_a n_l I is block lower-triangular: unlabeled coefficients vanish.
        A_l, condition = _ridge_coefficients(K[:n_l, :n_l], problem.targets[:, :n_l], hp.gamma_a)
        A = np.hstack([A_l, np.zeros((problem.d_z, n - n_l))])
    else:
        KL = np.asarray(problem.laplacian @ K).T
        M = K * problem.labeled_mask + hp.gamma_a * n_l * np.eye(n) + (hp.gamma_i * n_l / n**2) * KL
        At, condition = _solve_general(M, problem.targets.T, "manifold", transposed=True)
        A = At.T

    logger.debug("manifold_fitted", n_labeled=n_l, n_unlabeled=n - n_l, gamma_i=hp.gamma_i)
    return EmbeddingModel(A=A, basis=problem.basis, hyperparams=hp, variant=problem.variant,
                          n_labeled=n_l, condition=condition)


def fit_manifold(
    X_tr: np.ndarray,
    Z_tr: np.ndarray,
    X_te: np.ndarray,
    gamma_a: float,
    gamma_i: float,
    graph_k: int,
    hyperparams: Optional[HyperParams] = None,
    variant: Variant = Variant.MANIFOLD,
) -> EmbeddingModel:
    """Manifold-regularized kernel regression over labeled and unlabeled instances."""
    hyperparams = (hyperparams or HyperParams()).with_updates(
        gamma_a=gamma_a, gamma_i=gamma_i, graph_k=graph_k
    ).validate()
    problem = assemble_problem(X_tr, Z_tr, X_te, hyperparams, variant)
    return solve_problem(problem)


def fit_augmented(
    target: Dataset,
    split: ZeroShotSplit,
    aux: Sequence[Dataset],
    X_te: np.ndarray,
    hyperparams: HyperParams,
    class_matrix_builder: Callable[[Sequence[str]], np.ndarray],
    train_rows: Optional[np.ndarray] = None,
    train_classes: Optional[Sequence[int]] = None,
) -> EmbeddingModel:
    """Fit on target-train rows pooled with auxiliary rows.

    With gamma_i = 0 this is augmented ridge over the labeled rows only.
    """
    train_set = build_augmented(target, split, aux, class_matrix_builder,
                                train_rows=train_rows, train_classes=train_classes)
    logger.info("augmented_train_set", split_id=split.split_id,
                n_target=train_set.n_target, n_aux=train_set.n_aux)
    if hyperparams.gamma_i == 0:
        return fit_ridge(train_set.X_tr, train_set.Z_tr, hyperparams.gamma_a,
                         hyperparams=hyperparams, variant=Variant.AUGMENTED_RIDGE)
    return fit_manifold(train_set.X_tr, train_set.Z_tr, X_te, hyperparams.gamma_a,
                        hyperparams.gamma_i, hyperparams.graph_k, hyperparams=hyperparams,
                        variant=Variant.AUGMENTED_MANIFOLD)


def fit_iterative(
    problem: FitProblem,
    A0: Optional[np.ndarray] = None,
    max_iter: int = 5000,
    tol: float = 1e-12,
) -> EmbeddingModel:
    """Minimise the same loss with L-BFGS-B, for systems too large to factorize."""
    shape = (problem.d_z, problem.n_basis)
    x0 = np.zeros(shape).ravel() if A0 is None else np.asarray(A0, dtype=np.float64).ravel()

    def objective(flat: np.ndarray) -> Tuple[float, np.ndarray]:
        loss, grad = loss_and_gradient(problem, flat.reshape(shape))
        return loss, grad.ravel()

    result = minimize(objective, x0, jac=True, method="L-BFGS-B",
                      options={"maxiter": max_iter, "ftol": tol, "gtol": tol})
    if not result.success:
        logger.warning("iterative_solver_not_converged", message=str(result.message),
                       iterations=int(result.nit))
    logger.debug("iterative_fitted", iterations=int(result.nit), loss=float(result.fun))
    A = result.x.reshape(shape)
    if not problem.variant.transductive:
        A = A[:, : problem.n_labeled]
        basis = problem.basis[: problem.n_labeled]
    else:
        basis = problem.basis
    return EmbeddingModel(A=A, basis=basis, hyperparams=problem.hyperparams,
                          variant=problem.variant, n_labeled=problem.n_labeled)


def project_raw(model: EmbeddingModel, X: np.ndarray) -> np.ndarray:
    """f(x) = sum_j a_j k(x, x_j) for each row of X, as columns (d_z x m)."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    if X.shape[1] != model.d_x:
        raise ParameterError(f"instances have d_x={X.shape[1]}, model basis has {model.d_x}")
    return model.A @ linear_kernel(model.basis, X)


def normalize_columns(F: np.ndarray) -> np.ndarray:
    """Unit-norm columns; all-zero columns stay zero with a warning."""
    norms = np.linalg.norm(F, axis=0)
    zero = norms == 0
    if np.any(zero):
        logger.warning("zero_norm_projection", columns=np.flatnonzero(zero).tolist())
    return F / np.where(zero, 1.0, norms)


def project(model: EmbeddingModel, X: np.ndarray) -> np.ndarray:
    """Projections of X into semantic space, L2-normalized per column."""
    return normalize_columns(project_raw(model, X))
