#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Diarization error rate with no-score collars, UEM and optimal speaker mapping

The timeline is cut at every reference, hypothesis, UEM and collar edge. Each
elementary interval is either scored or not; scored intervals contribute

    miss        dur * max(0, N_ref - N_hyp)
    false alarm dur * max(0, N_hyp - N_ref)
    confusion   dur * (min(N_ref, N_hyp) - N_correct)

where N_correct counts reference speakers whose mapped hypothesis speaker is
active. The mapping maximizes total overlap (Hungarian method).
"""

import logging
from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import linear_sum_assignment

from src.app.scoring.segments import SegmentSet
from src.app.utils.errors import ConfigError, UndefinedDERError

logger = logging.getLogger(__name__)

Span = Tuple[float, float]


@dataclass(frozen=True)
class DERBreakdown:
    """Error components in seconds"""

    miss: float
    false_alarm: float
    confusion: float
    total_ref_speech: float

    @property
    def der(self) -> float:
        if self.total_ref_speech <= 0:
            raise UndefinedDERError("DER is undefined without reference speech")
        return (self.miss + self.false_alarm + self.confusion) / self.total_ref_speech

    def __add__(self, other: "DERBreakdown") -> "DERBreakdown":
        return DERBreakdown(
            miss=self.miss + other.miss,
            false_alarm=self.false_alarm + other.false_alarm,
            confusion=self.confusion + other.confusion,
            total_ref_speech=self.total_ref_speech + other.total_ref_speech,
        )


ZERO = DERBreakdown(0.0, 0.0, 0.0, 0.0)


def _activity(mids: np.ndarray, spans_by_speaker: Dict[str, List[Span]]) -> np.ndarray:
    """Boolean (n_intervals x n_speakers) activity at interval midpoints"""
    active = np.zeros((mids.shape[0], len(spans_by_speaker)), dtype=bool)
    for k, spans in enumerate(spans_by_speaker.values()):
        for start, end in spans:
            active[:, k] |= (mids >= start) & (mids < end)
    return active


def der(
    ref: SegmentSet,
    hyp: SegmentSet,
    collar: float = 0.0,
    uem: Optional[Sequence[Span]] = None,
) -> DERBreakdown:
    """Score hyp against ref

    Args:
        ref: reference segments (may overlap across speakers)
        hyp: hypothesis segments
        collar: total no-score width around every reference boundary (collar/2 per side)
        uem: optional scored intervals; everything outside is ignored

    Returns:
        DERBreakdown; raises UndefinedDERError when no reference speech is scored
    """
    if collar < 0:
        raise ConfigError(f"collar must be non-negative, got {collar}")
    ref_spans = ref.by_speaker()
    hyp_spans = hyp.by_speaker()

    points = set()
    ref_edges = []
    for spans in ref_spans.values():
        for start, end in spans:
            ref_edges.extend((start, end))
    points.update(ref_edges)
    for spans in hyp_spans.values():
        for start, end in spans:
            points.update((start, end))
    half = 0.5 * collar
    if half > 0:
        for edge in ref_edges:
            points.update((edge - half, edge + half))
    if uem is not None:
        for start, end in uem:
            points.update((start, end))

    if len(points) < 2 or not ref_spans:
        raise UndefinedDERError(f"{ref.recording_id}: reference has no speech")

    bounds = np.array(sorted(points), dtype=np.float64)
    durations = np.diff(bounds)
    mids = 0.5 * (bounds[:-1] + bounds[1:])

    scored = durations > 0
    if uem is not None:
        inside = np.zeros_like(scored)
        for start, end in uem:
            inside |= (mids >= start) & (mids < end)
        scored &= inside
    if half > 0 and ref_edges:
        edges = np.array(ref_edges)
        in_collar = (np.abs(mids[:, None] - edges[None, :]) < half).any(axis=1)
        scored &= ~in_collar

    durations = durations[scored]
    mids = mids[scored]
    ref_active = _activity(mids, ref_spans)
    hyp_active = _activity(mids, hyp_spans)

    n_ref = ref_active.sum(axis=1)
    n_hyp = hyp_active.sum(axis=1)
    total = float(np.dot(durations, n_ref))
    if total <= 0:
        raise UndefinedDERError(f"{ref.recording_id}: no reference speech inside the scored region")

    # overlap-maximizing one-to-one speaker mapping
    overlap = (ref_active * durations[:, None]).T.astype(np.float64) @ hyp_active.astype(np.float64)
    n_correct = np.zeros_like(n_ref)
    if hyp_spans:
        rows, cols = linear_sum_assignment(overlap, maximize=True)
        for i, j in zip(rows, cols):
            n_correct += ref_active[:, i] & hyp_active[:, j]

    miss = float(np.dot(durations, np.maximum(0, n_ref - n_hyp)))
    false_alarm = float(np.dot(durations, np.maximum(0, n_hyp - n_ref)))
    confusion = float(np.dot(durations, np.minimum(n_ref, n_hyp) - n_correct))
    return DERBreakdown(miss=miss, false_alarm=false_alarm, confusion=confusion, total_ref_speech=total)


def score_recordings(
    refs: Dict[str, SegmentSet],
    hyps: Dict[str, SegmentSet],
    collar: float = 0.0,
    uems: Optional[Dict[str, List[Span]]] = None,
) -> List[Tuple[str, DERBreakdown]]:
    """Score every reference recording; a missing hypothesis scores as all miss"""
    rows = []
    for rec, ref in refs.items():
        hyp = hyps.get(rec, SegmentSet(recording_id=rec))
        uem = uems.get(rec) if uems is not None else None
        breakdown = der(ref, hyp, collar=collar, uem=uem)
        logger.debug("%s: DER %.4f", rec, breakdown.der)
        rows.append((rec, breakdown))
    return rows


def total_breakdown(rows: Iterable[Tuple[str, DERBreakdown]]) -> DERBreakdown:
    total = ZERO
    for _, breakdown in rows:
        total = total + breakdown
    return total


def format_der_report(rows: List[Tuple[str, DERBreakdown]]) -> str:
    """TSV with one row per recording and a final TOTAL row"""
    header = "recording\tmiss\tfalse_alarm\tconfusion\ttotal_ref_speech\tder\n"
    lines = [header]
    for rec, b in rows + [("TOTAL", total_breakdown(rows))]:
        lines.append(f"{rec}\t{b.miss:.6f}\t{b.false_alarm:.6f}\t{b.confusion:.6f}\t{b.total_ref_speech:.6f}\t{b.der:.6f}\n")
    return "".join(lines)
