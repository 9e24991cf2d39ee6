#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Generalized eigenvalue diagonalization of a PLDA model

Solves Sigma_b E = Sigma_w E Phi and keeps the leading d' eigenpairs. The
resulting space has identity within-speaker and diagonal between-speaker
covariance.
"""

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np
import torch
from scipy import linalg

from src.app.plda.model import PLDAModel
from src.app.utils.errors import NumericError, ShapeError

logger = logging.getLogger(__name__)

PHI_FLOOR = 1e-6
DTYPE = torch.float64


@dataclass(frozen=True)
class TransformedSpace:
    """Projection E (d x d') and between-speaker diagonal phi (d')

    Both are float64 tensors so that training can attach gradients to them.
    The loading V = sqrt(phi) is never stored.
    """

    transform: torch.Tensor
    phi: torch.Tensor

    def __post_init__(self):
        transform = torch.as_tensor(self.transform, dtype=DTYPE)
        phi = torch.as_tensor(self.phi, dtype=DTYPE)
        if transform.ndim != 2 or phi.ndim != 1 or transform.shape[1] != phi.shape[0]:
            raise ShapeError(f"transform {tuple(transform.shape)} does not match phi {tuple(phi.shape)}")
        if not bool(torch.all(phi.detach() > 0)):
            raise NumericError(f"phi must be strictly positive, min is {float(phi.detach().min()):.3e}")
        object.__setattr__(self, "transform", transform)
        object.__setattr__(self, "phi", phi)

    @property
    def in_dim(self) -> int:
        return int(self.transform.shape[0])

    @property
    def out_dim(self) -> int:
        return int(self.transform.shape[1])

    def loading(self) -> torch.Tensor:
        """Diagonal of V = Phi^(1/2)"""
        return torch.sqrt(self.phi)


def _fix_signs(vectors: np.ndarray) -> np.ndarray:
    # largest-magnitude component of every column becomes positive
    pivot = np.argmax(np.abs(vectors), axis=0)
    signs = np.sign(vectors[pivot, np.arange(vectors.shape[1])])
    signs[signs == 0] = 1.0
    return vectors * signs


def solve_gevp(model: PLDAModel, out_dim: Optional[int] = None) -> TransformedSpace:
    """Diagonalize the PLDA covariances

    Args:
        model: pre-trained PLDA model
        out_dim: number of kept dimensions d' (default: d, no truncation)

    Returns:
        TransformedSpace with phi sorted in non-increasing order and clamped at 1e-6
    """
    d = model.dim
    out_dim = d if out_dim is None else int(out_dim)
    if not 1 <= out_dim <= d:
        raise ShapeError(f"out_dim must lie in [1, {d}], got {out_dim}")

    smallest = float(np.linalg.eigvalsh(model.within_cov).min())
    if smallest <= 0.0:
        raise NumericError(f"within_cov is not positive definite (smallest eigenvalue {smallest:.3e})")

    # eigh normalizes eigenvectors so that E^T Sigma_w E = I
    eigvals, eigvecs = linalg.eigh(model.between_cov, model.within_cov)
    order = np.argsort(eigvals)[::-1][:out_dim]
    eigvals = eigvals[order]
    eigvecs = _fix_signs(eigvecs[:, order])

    clamped = int(np.sum(eigvals < PHI_FLOOR))
    if clamped:
        logger.warning("⚠️  %d generalized eigenvalue(s) clamped at %.0e", clamped, PHI_FLOOR)
    phi = np.maximum(eigvals, PHI_FLOOR)

    return TransformedSpace(
        transform=torch.from_numpy(np.ascontiguousarray(eigvecs)),
        phi=torch.from_numpy(np.ascontiguousarray(phi)),
    )


def perturb_transform(space: TransformedSpace, scale: float, rng: np.random.Generator) -> TransformedSpace:
    """Multiply E by (I + scale * N(0, 1/d)) to mimic a mismatched PLDA"""
    d = space.in_dim
    noise = rng.standard_normal((d, d)) * (scale / np.sqrt(d))
    mixing = torch.from_numpy(np.eye(d) + noise)
    return TransformedSpace(transform=mixing @ space.transform.detach(), phi=space.phi.detach().clone())
