"""
Factory for fitting regressors based on the configured variant.
"""

from typing import Optional

import numpy as np

from ..error_handler import ParameterError
from .base import EmbeddingModel, HyperParams, Variant
from .solvers import fit_manifold, fit_ridge


class RegressorFactory:
    """Factory for fitting visual-to-semantic regressors."""

    @staticmethod
    def fit(
        variant: Variant,
        X_tr: np.ndarray,
        Z_tr: np.ndarray,
        X_te: Optional[np.ndarray],
        hyperparams: HyperParams,
    ) -> EmbeddingModel:
        """Fit a model of the given variant on target-only training data."""
        variant = Variant(variant)

        if variant == Variant.RIDGE:
            return fit_ridge(X_tr, Z_tr, hyperparams.gamma_a, hyperparams=hyperparams)

        elif variant == Variant.MANIFOLD:
            if X_te is None:
                X_te = np.empty((0, np.atleast_2d(X_tr).shape[1]))
            return fit_manifold(X_tr, Z_tr, X_te, hyperparams.gamma_a, hyperparams.gamma_i,
                                hyperparams.graph_k, hyperparams=hyperparams)

        else:
            # Augmented variants need the datasets themselves; see fit_augmented.
            raise ParameterError(f"Unknown regression variant for target-only fitting: {variant}")

    @staticmethod
    def determine_variant(transductive: bool, has_aux: bool, gamma_i: float) -> Variant:
        """Determine the variant tag from the configured pipeline."""
        manifold = transductive and gamma_i > 0
        if has_aux:
            return Variant.AUGMENTED_MANIFOLD if manifold else Variant.AUGMENTED_RIDGE
        return Variant.MANIFOLD if transductive else Variant.RIDGE
