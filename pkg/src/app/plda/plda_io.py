#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
PLDA model file

Layout (little-endian):
    bytes 0-7    magic b"DVBXPLDA"
    bytes 8-11   uint32 format version (1)
    bytes 12-15  uint32 reserved (0)
    uint64 d, uint64 d'
    float64 mean[d], within_cov[d*d], between_cov[d*d], transform[d*d'], phi[d']
All matrices are row-major. See docs/FILE_FORMATS.md.
"""

import struct
from pathlib import Path
from typing import Tuple, Union

import numpy as np
import torch

from src.app.plda.gevp import TransformedSpace
from src.app.plda.model import PLDAModel
from src.app.utils.errors import DataFormatError
from src.app.utils.logging_utils import atomic_write_bytes

PLDA_MAGIC = b"DVBXPLDA"
PLDA_VERSION = 1
_HEADER = struct.Struct("<8sII")
_DIMS = struct.Struct("<QQ")
_F64 = np.dtype("<f8")


def encode_plda(model: PLDAModel, space: TransformedSpace) -> bytes:
    d, d_out = model.dim, space.out_dim
    parts = [
        _HEADER.pack(PLDA_MAGIC, PLDA_VERSION, 0),
        _DIMS.pack(d, d_out),
        model.mean.astype(_F64).tobytes(),
        model.within_cov.astype(_F64).tobytes(order="C"),
        model.between_cov.astype(_F64).tobytes(order="C"),
        space.transform.detach().numpy().astype(_F64).tobytes(order="C"),
        space.phi.detach().numpy().astype(_F64).tobytes(),
    ]
    return b"".join(parts)


def decode_plda(payload: bytes, source: str = "<bytes>") -> Tuple[PLDAModel, TransformedSpace]:
    if len(payload) < _HEADER.size + _DIMS.size:
        raise DataFormatError(f"{source}: truncated PLDA header ({len(payload)} bytes)")
    magic, version, _ = _HEADER.unpack_from(payload, 0)
    if magic != PLDA_MAGIC:
        raise DataFormatError(f"{source}: bad PLDA magic {magic!r}")
    if version != PLDA_VERSION:
        raise DataFormatError(f"{source}: unsupported PLDA format version {version}")
    d, d_out = _DIMS.unpack_from(payload, _HEADER.size)
    counts = [d, d * d, d * d, d * d_out, d_out]
    expected = _HEADER.size + _DIMS.size + 8 * sum(counts)
    if len(payload) != expected:
        raise DataFormatError(f"{source}: expected {expected} bytes for d={d}, d'={d_out}, got {len(payload)}")

    offset = _HEADER.size + _DIMS.size
    arrays = []
    for count in counts:
        arrays.append(np.frombuffer(payload, dtype=_F64, count=count, offset=offset).astype(np.float64))
        offset += 8 * count
    mean, within, between, transform, phi = arrays
    model = PLDAModel(mean=mean, within_cov=within.reshape(d, d), between_cov=between.reshape(d, d))
    space = TransformedSpace(
        transform=torch.from_numpy(transform.reshape(d, d_out).copy()),
        phi=torch.from_numpy(phi.copy()),
    )
    return model, space


def write_plda(path: Union[str, Path], model: PLDAModel, space: TransformedSpace) -> Path:
    """Write model and space atomically"""
    return atomic_write_bytes(path, encode_plda(model, space))


def read_plda(path: Union[str, Path]) -> Tuple[PLDAModel, TransformedSpace]:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"PLDA model file not found: {path}")
    return decode_plda(path.read_bytes(), source=str(path))
