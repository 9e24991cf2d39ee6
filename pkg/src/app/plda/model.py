#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Two-covariance PLDA model and its closed-form generative pre-training
"""

import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from src.app.utils.errors import DegenerateInputError, NumericError, ShapeError

logger = logging.getLogger(__name__)

SYMMETRY_TOL = 1e-10
REGULARIZATION_SCALE = 1e-6


@dataclass(frozen=True)
class PLDAModel:
    """Global mean, within-speaker and between-speaker covariances"""

    mean: np.ndarray
    within_cov: np.ndarray
    between_cov: np.ndarray

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=np.float64)
        within = np.asarray(self.within_cov, dtype=np.float64)
        between = np.asarray(self.between_cov, dtype=np.float64)
        d = mean.shape[0]
        if mean.ndim != 1 or within.shape != (d, d) or between.shape != (d, d):
            raise ShapeError(
                f"PLDA shapes disagree: mean {mean.shape}, within {within.shape}, between {between.shape}"
            )
        if np.max(np.abs(within - within.T), initial=0.0) > SYMMETRY_TOL:
            raise NumericError("within_cov is not symmetric")
        if np.max(np.abs(between - between.T), initial=0.0) > SYMMETRY_TOL:
            raise NumericError("between_cov is not symmetric")
        w_min = float(np.linalg.eigvalsh(within).min())
        if w_min <= 0.0:
            raise NumericError(f"within_cov is not positive definite (smallest eigenvalue {w_min:.3e})")
        b_min = float(np.linalg.eigvalsh(between).min())
        if b_min < -SYMMETRY_TOL:
            raise NumericError(f"between_cov is not positive semi-definite (smallest eigenvalue {b_min:.3e})")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "within_cov", within)
        object.__setattr__(self, "between_cov", between)

    @property
    def dim(self) -> int:
        return int(self.mean.shape[0])


def regularize_within(within_cov: np.ndarray) -> np.ndarray:
    """Add eps*I when the smallest eigenvalue is below eps = 1e-6 * trace / d

    A zero trace falls back to eps = 1e-6.
    """
    d = within_cov.shape[0]
    eps = REGULARIZATION_SCALE * float(np.trace(within_cov)) / d
    if eps <= 0.0:
        eps = REGULARIZATION_SCALE
    smallest = float(np.linalg.eigvalsh(within_cov).min())
    if smallest < eps:
        logger.debug("Regularizing within_cov: smallest eigenvalue %.3e < %.3e", smallest, eps)
        within_cov = within_cov + eps * np.eye(d)
    return within_cov


def pretrain_plda(vectors: np.ndarray, speaker_labels: Sequence) -> PLDAModel:
    """Estimate a PLDA model from speaker-labeled vectors with scatter statistics

    Args:
        vectors: N x d matrix of x-vectors
        speaker_labels: length-N speaker identifiers

    Returns:
        PLDAModel with within_cov = pooled within scatter / (N - #speakers) and
        between_cov = count-weighted scatter of speaker means / N
    """
    x = np.asarray(vectors, dtype=np.float64)
    if x.ndim != 2:
        raise ShapeError(f"Expected an N x d matrix, got shape {x.shape}")
    labels = np.asarray(speaker_labels)
    if labels.shape[0] != x.shape[0]:
        raise ShapeError(f"{x.shape[0]} vectors but {labels.shape[0]} labels")

    speakers, inverse, counts = np.unique(labels, return_inverse=True, return_counts=True)
    if len(speakers) < 2:
        raise DegenerateInputError(f"PLDA pre-training needs at least 2 speakers, got {len(speakers)}")
    if counts.max() < 2:
        raise DegenerateInputError("PLDA pre-training needs at least one speaker with 2 or more vectors")

    n, d = x.shape
    mean = x.mean(axis=0)
    within = np.zeros((d, d))
    between = np.zeros((d, d))
    for idx in range(len(speakers)):
        rows = x[inverse == idx]
        spk_mean = rows.mean(axis=0)
        centered = rows - spk_mean
        within += centered.T @ centered
        offset = (spk_mean - mean)[:, None]
        between += counts[idx] * (offset @ offset.T)

    dof = n - len(speakers)
    within = within / dof
    between = between / n
    # scatter sums are symmetric up to rounding
    within = 0.5 * (within + within.T)
    between = 0.5 * (between + between.T)
    within = regularize_within(within)

    logger.info("PLDA pre-trained on %d vectors from %d speakers (d=%d)", n, len(speakers), d)
    return PLDAModel(mean=mean, within_cov=within, between_cov=between)
