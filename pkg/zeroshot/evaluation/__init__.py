"""
Metrics, split runner and report output.
"""

from .metrics import (
    accuracy,
    auc_with_distractors,
    average_precision,
    class_balanced_accuracy,
    mean_auc,
    mean_average_precision,
)
from .runner import ExperimentConfig, ExperimentReport, SplitResult, evaluate_split, run_experiment
from .reports import read_report, write_report

__all__ = [
    'accuracy',
    'auc_with_distractors',
    'average_precision',
    'class_balanced_accuracy',
    'mean_auc',
    'mean_average_precision',
    'ExperimentConfig',
    'ExperimentReport',
    'SplitResult',
    'evaluate_split',
    'run_experiment',
    'read_report',
    'write_report',
]
