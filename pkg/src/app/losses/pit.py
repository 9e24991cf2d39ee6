#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Permutation-invariant diarization loss

    L = 1 / (T S) * min_phi sum_t H(gamma_t^phi, l_t)

The narrower of gamma / ground truth is padded with zero columns. Costs are
summed per (predicted, reference) speaker pair, the assignment is solved with
the Hungarian method on a detached copy and gradients flow only through the
selected pairs.
"""

import itertools
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import List, Optional, Sequence, Tuple

import numpy as np
import torch
from scipy.optimize import linear_sum_assignment

from src.app.inference.types import InferenceTrace, Responsibilities, Scalar
from src.app.losses.frame_losses import bce_terms, calibrate, ede_terms
from src.app.losses.ground_truth import GroundTruth
from src.app.plda.gevp import DTYPE
from src.app.utils.errors import ConfigError, ShapeError


class FrameLoss(str, Enum):
    BCE = "bce"
    EDE = "ede"


class LossKind(str, Enum):
    """Training loss: frame loss with or without calibration"""

    BCE = "bce"
    BCE_CALIB = "bce-calib"
    EDE = "ede"
    EDE_CALIB = "ede-calib"

    @classmethod
    def parse(cls, value) -> "LossKind":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).strip().lower())
        except ValueError:
            choices = ", ".join(k.value for k in cls)
            raise ConfigError(f"unknown loss kind {value!r} (choose from {choices})") from None

    @property
    def frame_loss(self) -> FrameLoss:
        return FrameLoss.BCE if self in (LossKind.BCE, LossKind.BCE_CALIB) else FrameLoss.EDE

    @property
    def calibrated(self) -> bool:
        return self in (LossKind.BCE_CALIB, LossKind.EDE_CALIB)


@dataclass
class LossReport:
    """value is a plain float; loss keeps the autograd graph when there is one"""

    value: float
    best_permutation: List[int]
    per_iteration_values: List[float] = field(default_factory=list)
    loss: Optional[torch.Tensor] = None


def pad_columns(matrix: torch.Tensor, width: int) -> torch.Tensor:
    missing = width - matrix.shape[1]
    if missing <= 0:
        return matrix
    return torch.cat([matrix, torch.zeros(matrix.shape[0], missing, dtype=matrix.dtype)], dim=1)


def pair_costs(gamma: torch.Tensor, gt: torch.Tensor, frame_loss: FrameLoss) -> torch.Tensor:
    """S x S matrix: entry (i, j) = sum_t loss(gamma_ti, l_tj)"""
    terms = bce_terms if FrameLoss(frame_loss) is FrameLoss.BCE else ede_terms
    width = gamma.shape[1]
    rows = []
    for i in range(width):
        rows.append(torch.stack([terms(gamma[:, i], gt[:, j]).sum() for j in range(width)]))
    return torch.stack(rows)


def assignment_cost(cost: np.ndarray, assignment: Sequence[int]) -> float:
    """Exactly rounded sum of cost[i, assignment[i]]"""
    return math.fsum(float(cost[i, j]) for i, j in enumerate(assignment))


def solve_assignment(cost: np.ndarray) -> List[int]:
    """Hungarian method; returns assignment[i] = reference column of predicted speaker i"""
    rows, cols = linear_sum_assignment(cost)
    assignment = [0] * cost.shape[0]
    for i, j in zip(rows, cols):
        assignment[int(i)] = int(j)
    return assignment


def brute_force_assignment(cost: np.ndarray) -> Tuple[float, List[int]]:
    """Minimum over all permutations (reference oracle for small S)"""
    best_value, best = math.inf, None
    for perm in itertools.permutations(range(cost.shape[0])):
        value = assignment_cost(cost, perm)
        if value < best_value:
            best_value, best = value, list(perm)
    return best_value, best


def pit_loss(
    gamma: Responsibilities,
    gt: GroundTruth,
    frame_loss: FrameLoss = FrameLoss.EDE,
    calib: Optional[Scalar] = None,
) -> LossReport:
    """Permutation-invariant loss of one responsibility matrix

    best_permutation[i] is the (padded) reference column matched to predicted
    speaker i.
    """
    if gamma.num_frames != gt.num_frames:
        raise ShapeError(f"gamma has {gamma.num_frames} frames, ground truth {gt.num_frames}")
    width = max(gamma.num_speakers, gt.num_speakers)
    padded = Responsibilities(gamma=pad_columns(gamma.gamma, width))
    if calib is not None:
        padded = calibrate(padded, calib)
    labels = pad_columns(gt.labels.to(DTYPE), width)

    cost = pair_costs(padded.gamma, labels, frame_loss)
    cost_np = cost.detach().numpy()
    assignment = solve_assignment(cost_np)
    scale = 1.0 / (gamma.num_frames * width)
    loss = torch.stack([cost[i, j] for i, j in enumerate(assignment)]).sum() * scale
    value = assignment_cost(cost_np, assignment) * scale
    return LossReport(value=value, best_permutation=assignment, per_iteration_values=[value], loss=loss)


def averaged_loss(
    trace: InferenceTrace,
    gt: GroundTruth,
    frame_loss: FrameLoss = FrameLoss.EDE,
    calib: Optional[Scalar] = None,
) -> LossReport:
    """Mean of pit_loss over every iteration's responsibilities"""
    if not trace.per_iter_gamma:
        raise ShapeError("cannot average the loss of an empty trace")
    reports = [pit_loss(g, gt, frame_loss, calib) for g in trace.per_iter_gamma]
    values = [r.value for r in reports]
    loss = torch.stack([r.loss for r in reports]).mean()
    return LossReport(
        value=math.fsum(values) / len(values),
        best_permutation=reports[-1].best_permutation,
        per_iteration_values=values,
        loss=loss,
    )


def hard_detection_error(gamma: Responsibilities, gt: GroundTruth) -> float:
    """Miss + false-alarm frame count of argmax decisions under the best permutation

    Confusion frames count twice, matching T * S * EDE for hard decisions.
    """
    hard = torch.nn.functional.one_hot(gamma.hard_labels(), num_classes=gamma.num_speakers).to(DTYPE)
    report = pit_loss(Responsibilities(gamma=hard), gt, FrameLoss.EDE)
    width = max(gamma.num_speakers, gt.num_speakers)
    return report.value * gamma.num_frames * width
