#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
RTTM and UEM text formats

RTTM line: SPEAKER <rec> 1 <onset> <dur> <NA> <NA> <spk> <NA> <NA>
UEM line:  <rec> 1 <onset> <offset>
"""

from pathlib import Path
from typing import Dict, Iterable, List, Tuple, Union

from src.app.scoring.segments import Segment, SegmentSet
from src.app.utils.errors import DataFormatError
from src.app.utils.logging_utils import atomic_write_text

RTTM_FIELDS = 10
UEM_FIELDS = 4

UEM = Dict[str, List[Tuple[float, float]]]


def _float(token: str, what: str, lineno: int, source: str) -> float:
    try:
        return float(token)
    except ValueError:
        raise DataFormatError(f"{source}:{lineno}: cannot parse {what} {token!r}") from None


def parse_rttm(text: str, source: str = "<rttm>") -> Dict[str, SegmentSet]:
    """Parse RTTM text into one SegmentSet per recording (file order kept)"""
    result: Dict[str, SegmentSet] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        fields = line.split()
        if not fields:
            continue
        if len(fields) != RTTM_FIELDS:
            raise DataFormatError(f"{source}:{lineno}: expected {RTTM_FIELDS} fields, got {len(fields)}")
        if fields[0] != "SPEAKER":
            raise DataFormatError(f"{source}:{lineno}: unsupported record type {fields[0]!r}")
        rec = fields[1]
        onset = _float(fields[3], "onset", lineno, source)
        duration = _float(fields[4], "duration", lineno, source)
        if duration <= 0:
            raise DataFormatError(f"{source}:{lineno}: duration must be positive, got {duration}")
        segset = result.setdefault(rec, SegmentSet(recording_id=rec))
        segset.segments.append(Segment(onset, duration, fields[7]))
    return result


def emit_rttm(segset: SegmentSet) -> str:
    lines = [
        f"SPEAKER {segset.recording_id} 1 {seg.onset:.3f} {seg.duration:.3f} <NA> <NA> {seg.speaker} <NA> <NA>\n"
        for seg in segset.segments
    ]
    return "".join(lines)


def read_rttm(path: Union[str, Path]) -> Dict[str, SegmentSet]:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"RTTM file not found: {path}")
    return parse_rttm(path.read_text(encoding="utf-8"), source=str(path))


def write_rttm(path: Union[str, Path], segsets: Iterable[SegmentSet]) -> Path:
    return atomic_write_text(path, "".join(emit_rttm(s) for s in segsets))


def parse_uem(text: str, source: str = "<uem>") -> UEM:
    """Parse UEM text into per-recording scored (onset, offset) intervals"""
    result: UEM = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        fields = line.split()
        if not fields:
            continue
        if len(fields) != UEM_FIELDS:
            raise DataFormatError(f"{source}:{lineno}: expected {UEM_FIELDS} fields, got {len(fields)}")
        onset = _float(fields[2], "onset", lineno, source)
        offset = _float(fields[3], "offset", lineno, source)
        if offset <= onset:
            raise DataFormatError(f"{source}:{lineno}: offset {offset} is not after onset {onset}")
        result.setdefault(fields[0], []).append((onset, offset))
    return result


def emit_uem(uem: UEM) -> str:
    return "".join(f"{rec} 1 {start:.3f} {end:.3f}\n" for rec, spans in uem.items() for start, end in spans)


def read_uem(path: Union[str, Path]) -> UEM:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"UEM file not found: {path}")
    return parse_uem(path.read_text(encoding="utf-8"), source=str(path))


def write_uem(path: Union[str, Path], uem: UEM) -> Path:
    return atomic_write_text(path, emit_uem(uem))
