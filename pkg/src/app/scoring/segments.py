#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Timed speaker segments and conversion from frame responsibilities
"""

import math
from dataclasses import dataclass, field
from typing import Dict, List, NamedTuple, Optional, Tuple

import numpy as np

from src.app.inference.types import Responsibilities
from src.app.plda.transform import XVectorSequence
from src.app.utils.errors import DataFormatError, ShapeError

CONTIGUITY_TOL = 1e-9
SPEAKER_PREFIX = "spk"


class Segment(NamedTuple):
    onset: float
    duration: float
    speaker: str

    @property
    def end(self) -> float:
        return self.onset + self.duration


@dataclass
class SegmentSet:
    """Speaker segments of one recording"""

    recording_id: str
    segments: List[Segment] = field(default_factory=list)

    def __post_init__(self):
        checked = []
        for seg in self.segments:
            seg = Segment(float(seg[0]), float(seg[1]), str(seg[2]))
            if math.isnan(seg.onset) or math.isnan(seg.duration):
                raise DataFormatError(f"{self.recording_id}: NaN segment time for {seg.speaker}")
            if seg.duration <= 0:
                raise DataFormatError(f"{self.recording_id}: non-positive duration {seg.duration} for {seg.speaker}")
            checked.append(seg)
        self.segments = checked

    def __len__(self) -> int:
        return len(self.segments)

    def speakers(self) -> List[str]:
        """Speaker names in order of first appearance"""
        seen: Dict[str, None] = {}
        for seg in self.segments:
            seen.setdefault(seg.speaker, None)
        return list(seen)

    def by_speaker(self) -> Dict[str, List[Tuple[float, float]]]:
        """Per-speaker (start, end) intervals with each speaker's own overlaps merged"""
        spans: Dict[str, List[Tuple[float, float]]] = {}
        for seg in self.segments:
            spans.setdefault(seg.speaker, []).append((seg.onset, seg.end))
        merged = {}
        for speaker, items in spans.items():
            items.sort()
            out = [items[0]]
            for start, end in items[1:]:
                if start <= out[-1][1]:
                    out[-1] = (out[-1][0], max(out[-1][1], end))
                else:
                    out.append((start, end))
            merged[speaker] = out
        return merged

    def total_speech(self) -> float:
        """Duration of the union of all speakers' speech"""
        spans = sorted((seg.onset, seg.end) for seg in self.segments)
        total, cur_start, cur_end = 0.0, None, None
        for start, end in spans:
            if cur_end is None or start > cur_end:
                if cur_end is not None:
                    total += cur_end - cur_start
                cur_start, cur_end = start, end
            else:
                cur_end = max(cur_end, end)
        if cur_end is not None:
            total += cur_end - cur_start
        return total


def frame_extents(seq: XVectorSequence) -> Tuple[np.ndarray, np.ndarray]:
    """Non-overlapping [lo, hi) extent of every frame

    A uniform stride gives each frame [start_t, min(start_t+1, end_t)) and the
    last frame its full window. Non-uniform strides cut overlapping windows at
    the midpoint of their overlap.
    """
    starts = seq.segment_starts
    ends = starts + seq.segment_durations
    lo, hi = starts.copy(), ends.copy()
    if seq.num_frames == 1:
        return lo, hi

    steps = np.diff(starts)
    nxt = starts[1:]
    if np.allclose(steps, steps[0], rtol=0.0, atol=CONTIGUITY_TOL):
        hi[:-1] = np.minimum(nxt, ends[:-1])
    else:
        overlap = ends[:-1] > nxt
        cut = np.where(overlap, 0.5 * (nxt + ends[:-1]), ends[:-1])
        hi[:-1] = cut
        lo[1:] = np.where(overlap, cut, nxt)
    return lo, np.maximum(hi, lo)


def responsibilities_to_segments(
    gamma: Responsibilities,
    seq: XVectorSequence,
    recording_id: Optional[str] = None,
    speaker_names: Optional[List[str]] = None,
) -> SegmentSet:
    """Argmax speaker per frame, contiguous equal labels merged into one segment"""
    if gamma.num_frames != seq.num_frames:
        raise ShapeError(f"{gamma.num_frames} responsibility rows for {seq.num_frames} frames")
    names = speaker_names or [f"{SPEAKER_PREFIX}{k}" for k in range(gamma.num_speakers)]
    if len(names) < gamma.num_speakers:
        raise ShapeError(f"{len(names)} speaker names for {gamma.num_speakers} speakers")

    labels = gamma.hard_labels().numpy()
    lo, hi = frame_extents(seq)
    segments: List[Segment] = []
    cur_label, cur_start, cur_end = None, 0.0, 0.0
    for t in range(seq.num_frames):
        label = int(labels[t])
        if label == cur_label and abs(lo[t] - cur_end) <= CONTIGUITY_TOL:
            cur_end = hi[t]
            continue
        if cur_label is not None and cur_end > cur_start:
            segments.append(Segment(cur_start, cur_end - cur_start, names[cur_label]))
        cur_label, cur_start, cur_end = label, float(lo[t]), float(hi[t])
    if cur_label is not None and cur_end > cur_start:
        segments.append(Segment(cur_start, cur_end - cur_start, names[cur_label]))

    return SegmentSet(recording_id=recording_id or seq.utterance_id, segments=segments)
