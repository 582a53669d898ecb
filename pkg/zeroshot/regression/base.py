"""
Regression variants, hyperparameters and fitted-model structures.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Optional

import numpy as np

from ..config import check_gamma_a
from ..error_handler import NumericalError, ParameterError
from ..graph import GraphWeighting


class Variant(Enum):
    """Types of visual-to-semantic regressors."""
    RIDGE = "ridge"
    MANIFOLD = "manifold"
    AUGMENTED_RIDGE = "augmented-ridge"
    AUGMENTED_MANIFOLD = "augmented-manifold"

    @property
    def transductive(self) -> bool:
        return self in (Variant.MANIFOLD, Variant.AUGMENTED_MANIFOLD)


@dataclass(frozen=True)
class HyperParams:
    """Regularization weights and neighbourhood sizes."""
    gamma_a: float = 1e-6
    gamma_i: float = 40.0
    graph_k: int = 5
    self_train_k: int = 100
    graph_weighting: GraphWeighting = GraphWeighting.BINARY
    heat_bandwidth: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "graph_weighting", GraphWeighting(self.graph_weighting))

    def validate(self) -> "HyperParams":
        check_gamma_a(self.gamma_a)
        if self.gamma_i < 0:
            raise ParameterError(f"gamma_i must be >= 0, got {self.gamma_i}")
        if self.graph_k < 1:
            raise ParameterError(f"graph_k must be >= 1, got {self.graph_k}")
        if self.self_train_k < 1:
            raise ParameterError(f"self_train_k must be >= 1, got {self.self_train_k}")
        if self.heat_bandwidth <= 0:
            raise ParameterError(f"heat_bandwidth must be > 0, got {self.heat_bandwidth}")
        return self

    def with_updates(self, **changes) -> "HyperParams":
        return replace(self, **changes)


@dataclass(frozen=True)
class FitProblem:
    """Kernel system over the basis: labeled rows first, then unlabeled rows.

    targets holds Z~ (d_z x n) whose unlabeled columns are zero; laplacian is
    None when the manifold term is off.
    """
    basis: np.ndarray = field(repr=False)
    kernel: np.ndarray = field(repr=False)
    targets: np.ndarray = field(repr=False)
    n_labeled: int
    hyperparams: HyperParams
    variant: Variant
    laplacian: Optional[object] = field(default=None, repr=False)

    @property
    def n_basis(self) -> int:
        return self.basis.shape[0]

    @property
    def n_unlabeled(self) -> int:
        return self.n_basis - self.n_labeled

    @property
    def d_z(self) -> int:
        return self.targets.shape[0]

    @property
    def labeled_mask(self) -> np.ndarray:
        """Diagonal of J."""
        mask = np.zeros(self.n_basis)
        mask[: self.n_labeled] = 1.0
        return mask

    @property
    def J(self) -> np.ndarray:
        return np.diag(self.labeled_mask)


@dataclass(frozen=True)
class EmbeddingModel:
    """Fitted map f(x) = A k(basis, x)."""
    A: np.ndarray = field(repr=False)
    basis: np.ndarray = field(repr=False)
    hyperparams: HyperParams
    variant: Variant
    n_labeled: int
    condition: Optional[float] = None

    def __post_init__(self):
        if self.A.shape[1] != self.basis.shape[0]:
            raise ParameterError(
                f"coefficient matrix has {self.A.shape[1]} columns for {self.basis.shape[0]} basis rows"
            )
        if not np.all(np.isfinite(self.A)):
            raise NumericalError("fitted coefficients contain NaN or Inf", variant=self.variant.value)
        if not self.variant.transductive and self.A.shape[1] != self.n_labeled:
            raise ParameterError(f"{self.variant.value} model must use only labeled basis rows")

    @property
    def d_z(self) -> int:
        return self.A.shape[0]

    @property
    def d_x(self) -> int:
        return self.basis.shape[1]

    @property
    def n_unlabeled(self) -> int:
        return self.basis.shape[0] - self.n_labeled
