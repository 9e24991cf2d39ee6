"""
Segments, RTTM/UEM formats and DER scoring
"""

from .der import DERBreakdown, der, format_der_report, score_recordings, total_breakdown
from .rttm import emit_rttm, emit_uem, parse_rttm, parse_uem, read_rttm, read_uem, write_rttm, write_uem
from .segments import Segment, SegmentSet, frame_extents, responsibilities_to_segments

__all__ = [
    "Segment",
    "SegmentSet",
    "DERBreakdown",
    "frame_extents",
    "responsibilities_to_segments",
    "der",
    "score_recordings",
    "total_breakdown",
    "format_der_report",
    "parse_rttm",
    "emit_rttm",
    "read_rttm",
    "write_rttm",
    "parse_uem",
    "emit_uem",
    "read_uem",
    "write_uem",
]
