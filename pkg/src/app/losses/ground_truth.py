#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Ground-truth speech proportions per frame
"""

from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np
import torch

from src.app.plda.gevp import DTYPE
from src.app.utils.errors import ShapeError

VALUE_TOL = 1e-12


@dataclass(frozen=True)
class GroundTruth:
    """T x S_gt matrix of speaker proportions

    frame_indices maps each row back to the x-vector frame it labels; frames
    without reference speech are absent (oracle VAD).
    """

    labels: torch.Tensor
    speaker_names: List[str]
    frame_indices: Optional[np.ndarray] = field(default=None)

    def __post_init__(self):
        labels = torch.as_tensor(self.labels, dtype=DTYPE)
        if labels.ndim != 2:
            raise ShapeError(f"ground truth must be T x S, got {tuple(labels.shape)}")
        if labels.shape[1] != len(self.speaker_names):
            raise ShapeError(f"{labels.shape[1]} label columns but {len(self.speaker_names)} speaker names")
        if labels.numel() and (float(labels.min()) < -VALUE_TOL or float(labels.max()) > 1.0 + VALUE_TOL):
            raise ShapeError("ground-truth proportions must lie in [0, 1]")
        frames = self.frame_indices
        if frames is None:
            frames = np.arange(labels.shape[0], dtype=np.int64)
        frames = np.asarray(frames, dtype=np.int64)
        if frames.shape != (labels.shape[0],):
            raise ShapeError(f"{labels.shape[0]} label rows but {frames.shape[0]} frame indices")
        object.__setattr__(self, "labels", labels.clamp(0.0, 1.0))
        object.__setattr__(self, "speaker_names", list(self.speaker_names))
        object.__setattr__(self, "frame_indices", frames)

    @property
    def num_frames(self) -> int:
        return int(self.labels.shape[0])

    @property
    def num_speakers(self) -> int:
        return int(self.labels.shape[1])

    def permute(self, order: List[int]) -> "GroundTruth":
        """Reorder speaker columns (names follow)"""
        return GroundTruth(
            labels=self.labels[:, list(order)],
            speaker_names=[self.speaker_names[k] for k in order],
            frame_indices=self.frame_indices,
        )
