"""
Initial responsibilities from AHC (or an RTTM) followed by label smoothing
"""

from .ahc import HardLabels, ahc_cluster, cosine_distances, labels_from_rttm, relabel_by_first_occurrence
from .smoothing import smooth_labels

__all__ = [
    "HardLabels",
    "ahc_cluster",
    "cosine_distances",
    "labels_from_rttm",
    "relabel_by_first_occurrence",
    "smooth_labels",
]
