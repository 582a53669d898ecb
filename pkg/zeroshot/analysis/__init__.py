"""
Transferability analytics and projection export.
"""

from .transfer import SplitOutcomeRecord, TransferCorrelationMatrix, records_from_report, transfer_correlation
from .affinity import (
    AffinityReport,
    affinity_matrix,
    affinity_report,
    classname_affinity,
    correlation_affinity_agreement,
    percentile_rank_affinity,
)
from .subsets import SubsetCurve, related_subset_curve
from .export import export_projections, read_projections

__all__ = [
    'SplitOutcomeRecord',
    'TransferCorrelationMatrix',
    'records_from_report',
    'transfer_correlation',
    'AffinityReport',
    'affinity_matrix',
    'affinity_report',
    'classname_affinity',
    'correlation_affinity_agreement',
    'percentile_rank_affinity',
    'SubsetCurve',
    'related_subset_curve',
    'export_projections',
    'read_projections',
]
