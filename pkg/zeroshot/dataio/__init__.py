"""
Dataset ingestion, zero-shot splits, augmentation and synthetic data.
"""

from .base import AugmentedTrainSet, Dataset, SyntheticSpec, ZeroShotSplit
from .loaders import load_dataset, read_feature_file, write_dataset, write_feature_file
from .splits import class_test_counts, generate_splits, subsample_test
from .augment import build_augmented
from .synthetic import SyntheticData, generate_synthetic

__all__ = [
    'AugmentedTrainSet',
    'Dataset',
    'SyntheticSpec',
    'ZeroShotSplit',
    'load_dataset',
    'read_feature_file',
    'write_dataset',
    'write_feature_file',
    'class_test_counts',
    'generate_splits',
    'subsample_test',
    'build_augmented',
    'SyntheticData',
    'generate_synthetic',
]
