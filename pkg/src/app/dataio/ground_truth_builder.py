#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Frame-level speech proportions from reference segments
"""

from typing import List, Tuple

import numpy as np

from src.app.losses.ground_truth import GroundTruth
from src.app.plda.transform import XVectorSequence
from src.app.scoring.segments import SegmentSet, frame_extents
from src.app.utils.errors import ConfigError, DataFormatError

EXTENTS = ("window", "frame")


def _overlap(lo: np.ndarray, hi: np.ndarray, spans: List[Tuple[float, float]]) -> np.ndarray:
    total = np.zeros_like(lo)
    for start, end in spans:
        total += np.clip(np.minimum(hi, end) - np.maximum(lo, start), 0.0, None)
    return total


def _union(spans: List[Tuple[float, float]]) -> List[Tuple[float, float]]:
    out: List[Tuple[float, float]] = []
    for start, end in sorted(spans):
        if out and start <= out[-1][1]:
            out[-1] = (out[-1][0], max(out[-1][1], end))
        else:
            out.append((start, end))
    return out


def build_ground_truth(ref: SegmentSet, seq: XVectorSequence, extent: str = "window") -> GroundTruth:
    """Per frame: speaker speech time / total speech time inside the frame

    extent "window" measures over the full x-vector window, "frame" over the
    non-overlapping frame extent. Frames without speech are dropped and the
    kept frame indices are recorded.
    """
    if extent not in EXTENTS:
        raise ConfigError(f"unknown ground-truth extent {extent!r} (choose from {EXTENTS})")
    if ref.recording_id != seq.utterance_id:
        raise DataFormatError(f"reference {ref.recording_id!r} does not match sequence {seq.utterance_id!r}")

    if extent == "window":
        lo = seq.segment_starts
        hi = seq.segment_starts + seq.segment_durations
    else:
        lo, hi = frame_extents(seq)

    spans = ref.by_speaker()
    names = list(spans)
    speech = _overlap(lo, hi, _union([s for items in spans.values() for s in items]))
    keep = np.nonzero(speech > 0)[0]
    labels = np.zeros((keep.shape[0], len(names)))
    for k, name in enumerate(names):
        labels[:, k] = _overlap(lo[keep], hi[keep], spans[name]) / speech[keep]
    return GroundTruth(labels=np.clip(labels, 0.0, 1.0), speaker_names=names, frame_indices=keep)


def speech_regions(ref: SegmentSet) -> List[Tuple[float, float]]:
    """Union of all reference speech, used as the oracle-VAD UEM"""
    return _union([(seg.onset, seg.end) for seg in ref.segments])
