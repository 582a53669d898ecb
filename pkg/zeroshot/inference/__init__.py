"""
Zero-shot matching in the semantic space.
"""

from .base import DistanceMatrix, Matcher, Prediction
from .matching import distance_matrix, gc_predict, nn_predict, nrm_predict, write_predictions
from .self_training import AdaptedPrototypes, self_train
from .hubness import hubness_skewness, k_occurrence
from .factory import MatcherFactory

__all__ = [
    'DistanceMatrix',
    'Matcher',
    'Prediction',
    'distance_matrix',
    'gc_predict',
    'nn_predict',
    'nrm_predict',
    'write_predictions',
    'AdaptedPrototypes',
    'self_train',
    'hubness_skewness',
    'k_occurrence',
    'MatcherFactory',
]
