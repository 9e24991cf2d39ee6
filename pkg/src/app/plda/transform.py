#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
X-vector sequences and their projection into the PLDA inference space
"""

from dataclasses import dataclass

import numpy as np
import torch

from src.app.plda.gevp import DTYPE, TransformedSpace
from src.app.plda.model import PLDAModel
from src.app.utils.errors import NumericError, ShapeError


@dataclass(frozen=True)
class XVectorSequence:
    """One conversation: T x d embeddings with per-row segment timing (seconds)"""

    raw: np.ndarray
    segment_starts: np.ndarray
    segment_durations: np.ndarray
    utterance_id: str

    def __post_init__(self):
        raw = np.asarray(self.raw, dtype=np.float64)
        starts = np.asarray(self.segment_starts, dtype=np.float64)
        durations = np.asarray(self.segment_durations, dtype=np.float64)
        if raw.ndim != 2 or raw.shape[0] < 1:
            raise ShapeError(f"{self.utterance_id}: expected a T x d matrix with T >= 1, got {raw.shape}")
        if starts.shape != (raw.shape[0],) or durations.shape != (raw.shape[0],):
            raise ShapeError(
                f"{self.utterance_id}: {raw.shape[0]} rows but {starts.shape[0]} starts / {durations.shape[0]} durations"
            )
        if np.any(np.diff(starts) < 0):
            raise ShapeError(f"{self.utterance_id}: segment starts must be non-decreasing")
        if np.any(durations <= 0):
            raise ShapeError(f"{self.utterance_id}: all segment durations must be positive")
        object.__setattr__(self, "raw", raw)
        object.__setattr__(self, "segment_starts", starts)
        object.__setattr__(self, "segment_durations", durations)

    @property
    def num_frames(self) -> int:
        return int(self.raw.shape[0])

    @property
    def dim(self) -> int:
        return int(self.raw.shape[1])

    def select(self, frames: np.ndarray) -> "XVectorSequence":
        """Keep only the given frame indices (oracle VAD filtering)"""
        frames = np.asarray(frames, dtype=np.int64)
        return XVectorSequence(
            raw=self.raw[frames],
            segment_starts=self.segment_starts[frames],
            segment_durations=self.segment_durations[frames],
            utterance_id=self.utterance_id,
        )


@dataclass(frozen=True)
class TransformedSequence:
    """T x d' matrix X = (X_hat - 1 m) E, kept as a float64 tensor"""

    data: torch.Tensor
    provenance: str

    @property
    def num_frames(self) -> int:
        return int(self.data.shape[0])


def transform_sequence(seq: XVectorSequence, model: PLDAModel, space: TransformedSpace) -> TransformedSequence:
    """Center on the PLDA mean and project with E (differentiable w.r.t. E)"""
    if seq.dim != model.dim or seq.dim != space.in_dim:
        raise ShapeError(
            f"{seq.utterance_id}: x-vector dim {seq.dim}, PLDA dim {model.dim}, transform input dim {space.in_dim}"
        )
    centered = torch.from_numpy(seq.raw - model.mean[None, :]).to(DTYPE)
    data = centered @ space.transform
    if not bool(torch.isfinite(data.detach()).all()):
        raise NumericError(f"{seq.utterance_id}: transformed x-vectors contain non-finite values")
    return TransformedSequence(data=data, provenance=seq.utterance_id)
