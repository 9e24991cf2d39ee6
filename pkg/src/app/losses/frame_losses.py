#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Per-frame losses and responsibility calibration
"""

import torch

from src.app.inference.types import Responsibilities, Scalar, scalar_value
from src.app.utils.errors import ConfigError, ShapeError

BCE_EPS = 1e-7


def calibrate(gamma: Responsibilities, calib: Scalar) -> Responsibilities:
    """Row-wise softmax(calib * gamma), the same map as label smoothing"""
    if not scalar_value(calib) > 0:
        raise ConfigError(f"calibration must be positive, got {scalar_value(calib)}")
    return Responsibilities(gamma=torch.softmax(calib * gamma.gamma, dim=1))


def _rows(gamma_row, gt_row):
    g = torch.as_tensor(gamma_row, dtype=torch.float64)
    l = torch.as_tensor(gt_row, dtype=torch.float64)
    if g.shape != l.shape:
        raise ShapeError(f"gamma row {tuple(g.shape)} vs gt row {tuple(l.shape)}")
    return g, l


def bce_terms(gamma: torch.Tensor, gt: torch.Tensor) -> torch.Tensor:
    g = gamma.clamp(BCE_EPS, 1.0 - BCE_EPS)
    return -gt * torch.log(g) - (1.0 - gt) * torch.log(1.0 - g)


def ede_terms(gamma: torch.Tensor, gt: torch.Tensor) -> torch.Tensor:
    # expected miss + expected false alarm
    return (1.0 - gamma) * gt + gamma * (1.0 - gt)


def bce_frame(gamma_row, gt_row) -> torch.Tensor:
    g, l = _rows(gamma_row, gt_row)
    return bce_terms(g, l).sum()


def ede_frame(gamma_row, gt_row) -> torch.Tensor:
    g, l = _rows(gamma_row, gt_row)
    return ede_terms(g, l).sum()
