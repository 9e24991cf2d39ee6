#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
X-vector sequence file

Layout (little-endian):
    bytes 0-7    magic b"DVBXXVEC"
    bytes 8-11   uint32 format version (1)
    bytes 12-15  uint32 reserved (0)
    uint64 T, uint64 d
    float32 raw[T*d] (row-major), float64 starts[T], float64 durations[T]
    uint32 n, utf-8 utterance id (n bytes)
"""

import struct
from pathlib import Path
from typing import Union

import numpy as np

from src.app.plda.transform import XVectorSequence
from src.app.utils.errors import DataFormatError
from src.app.utils.logging_utils import atomic_write_bytes

XVEC_MAGIC = b"DVBXXVEC"
XVEC_VERSION = 1
_HEADER = struct.Struct("<8sII")
_DIMS = struct.Struct("<QQ")
_LEN = struct.Struct("<I")


def encode_xvectors(seq: XVectorSequence) -> bytes:
    name = seq.utterance_id.encode("utf-8")
    return b"".join(
        [
            _HEADER.pack(XVEC_MAGIC, XVEC_VERSION, 0),
            _DIMS.pack(seq.num_frames, seq.dim),
            seq.raw.astype("<f4").tobytes(order="C"),
            seq.segment_starts.astype("<f8").tobytes(),
            seq.segment_durations.astype("<f8").tobytes(),
            _LEN.pack(len(name)),
            name,
        ]
    )


def decode_xvectors(payload: bytes, source: str = "<bytes>") -> XVectorSequence:
    fixed = _HEADER.size + _DIMS.size
    if len(payload) < fixed:
        raise DataFormatError(f"{source}: truncated x-vector header ({len(payload)} bytes)")
    magic, version, _ = _HEADER.unpack_from(payload, 0)
    if magic != XVEC_MAGIC:
        raise DataFormatError(f"{source}: bad x-vector magic {magic!r}")
    if version != XVEC_VERSION:
        raise DataFormatError(f"{source}: unsupported x-vector format version {version}")
    frames, dim = _DIMS.unpack_from(payload, _HEADER.size)

    body = 4 * frames * dim + 16 * frames
    if len(payload) < fixed + body + _LEN.size:
        raise DataFormatError(f"{source}: payload too short for T={frames}, d={dim}")
    offset = fixed
    raw = np.frombuffer(payload, dtype="<f4", count=frames * dim, offset=offset).reshape(frames, dim)
    offset += 4 * frames * dim
    starts = np.frombuffer(payload, dtype="<f8", count=frames, offset=offset)
    offset += 8 * frames
    durations = np.frombuffer(payload, dtype="<f8", count=frames, offset=offset)
    offset += 8 * frames
    (name_len,) = _LEN.unpack_from(payload, offset)
    offset += _LEN.size
    if len(payload) != offset + name_len:
        raise DataFormatError(f"{source}: expected {offset + name_len} bytes, got {len(payload)}")
    try:
        name = payload[offset:].decode("utf-8")
    except UnicodeDecodeError:
        raise DataFormatError(f"{source}: utterance id is not valid UTF-8") from None
    try:
        return XVectorSequence(
            raw=raw.astype(np.float64),
            segment_starts=starts.astype(np.float64),
            segment_durations=durations.astype(np.float64),
            utterance_id=name,
        )
    except ValueError as e:
        raise DataFormatError(f"{source}: {e}") from None


def write_xvectors(seq: XVectorSequence, path: Union[str, Path]) -> Path:
    return atomic_write_bytes(path, encode_xvectors(seq))


def read_xvectors(path: Union[str, Path]) -> XVectorSequence:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"x-vector file not found: {path}")
    return decode_xvectors(path.read_bytes(), source=str(path))
