"""
Factory for matchers based on configuration.
"""

from typing import Callable

from .base import DistanceMatrix, Matcher, Prediction
from .matching import gc_predict, nn_from_distances, nrm_predict


class MatcherFactory:
    """Factory for prototype matchers."""

    @staticmethod
    def create_matcher(matcher: Matcher) -> Callable[[DistanceMatrix, bool], Prediction]:
        """Create the matching function for the specified type."""
        matcher = Matcher(matcher)

        if matcher == Matcher.NN:
            return nn_from_distances

        elif matcher == Matcher.NRM:
            return nrm_predict

        elif matcher == Matcher.GC:
            return gc_predict

        else:
            raise ValueError(f"Unknown matcher type: {matcher}")

    @staticmethod
    def predict(matcher: Matcher, distances: DistanceMatrix, self_trained: bool = False) -> Prediction:
        return MatcherFactory.create_matcher(matcher)(distances, self_trained)
