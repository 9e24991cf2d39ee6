#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Initial speaker labels: average-linkage AHC on cosine similarity, or an external RTTM
"""

import logging
from dataclasses import dataclass

import numpy as np
from scipy.cluster.hierarchy import cut_tree, linkage
from scipy.spatial.distance import squareform

from src.app.plda.transform import TransformedSequence, XVectorSequence
from src.app.scoring.segments import SegmentSet
from src.app.utils.errors import ConfigError, ShapeError

logger = logging.getLogger(__name__)

MERGE_TOL = 1e-12


@dataclass(frozen=True)
class HardLabels:
    """Per-frame cluster index in [0, num_clusters), every index used"""

    labels: np.ndarray
    num_clusters: int

    def __post_init__(self):
        labels = np.asarray(self.labels, dtype=np.int64)
        if labels.ndim != 1 or labels.shape[0] < 1:
            raise ShapeError(f"labels must be a non-empty vector, got shape {labels.shape}")
        if labels.min() < 0 or labels.max() >= self.num_clusters:
            raise ShapeError(f"labels must lie in [0, {self.num_clusters})")
        if np.unique(labels).shape[0] != self.num_clusters:
            raise ShapeError(f"every one of the {self.num_clusters} clusters must be used")
        object.__setattr__(self, "labels", labels)

    @property
    def num_frames(self) -> int:
        return int(self.labels.shape[0])


def relabel_by_first_occurrence(labels: np.ndarray) -> HardLabels:
    mapping = {}
    out = np.empty(len(labels), dtype=np.int64)
    for t, label in enumerate(labels):
        out[t] = mapping.setdefault(int(label), len(mapping))
    return HardLabels(labels=out, num_clusters=len(mapping))


def cosine_distances(x: np.ndarray) -> np.ndarray:
    """Condensed 1 - cosine similarity; zero rows are treated as orthogonal to everything"""
    norms = np.linalg.norm(x, axis=1, keepdims=True)
    unit = x / np.maximum(norms, np.finfo(np.float64).tiny)
    dist = np.clip(1.0 - unit @ unit.T, 0.0, 2.0)
    np.fill_diagonal(dist, 0.0)
    return squareform(0.5 * (dist + dist.T), checks=False)


def ahc_cluster(seq: TransformedSequence, threshold: float = 0.0, max_speakers: int = 10) -> HardLabels:
    """Average-linkage AHC over cosine similarities of the rows

    Merging continues while the best linkage similarity is >= threshold, then
    further until at most max_speakers clusters remain. Pairs with equal
    similarity merge in scipy's deterministic linkage order rather than by
    smallest cluster index; labels are then numbered by first occurrence.
    """
    if max_speakers < 1:
        raise ConfigError(f"max_speakers must be >= 1, got {max_speakers}")
    x = seq.data.detach().numpy()
    num_frames = x.shape[0]
    if num_frames == 1:
        return HardLabels(labels=np.zeros(1, dtype=np.int64), num_clusters=1)

    tree = linkage(cosine_distances(x), method="average")
    merges = int(np.sum(tree[:, 2] <= (1.0 - threshold) + MERGE_TOL))
    clusters = min(max(num_frames - merges, 1), max_speakers)
    labels = cut_tree(tree, n_clusters=clusters).ravel()
    hard = relabel_by_first_occurrence(labels)
    logger.debug("%s: AHC produced %d clusters from %d frames", seq.provenance, hard.num_clusters, num_frames)
    return hard


def labels_from_rttm(ref: SegmentSet, seq: XVectorSequence) -> HardLabels:
    """Dominant-overlap speaker of every x-vector window

    Windows without any overlapping speech take the speaker of the nearest
    segment.
    """
    spans = ref.by_speaker()
    if not spans:
        raise ShapeError(f"{ref.recording_id}: initialization RTTM has no segments")
    names = list(spans)
    starts = seq.segment_starts
    ends = starts + seq.segment_durations

    overlap = np.zeros((seq.num_frames, len(names)))
    gap = np.full((seq.num_frames, len(names)), np.inf)
    for k, name in enumerate(names):
        for s, e in spans[name]:
            overlap[:, k] += np.clip(np.minimum(ends, e) - np.maximum(starts, s), 0.0, None)
            gap[:, k] = np.minimum(gap[:, k], np.maximum(s - ends, starts - e).clip(min=0.0))

    labels = np.where(overlap.max(axis=1) > 0, overlap.argmax(axis=1), gap.argmin(axis=1))
    return relabel_by_first_occurrence(labels)
