#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Label smoothing: gamma_t = softmax(tau * one_hot(label_t))
"""

import torch

from src.app.init.ahc import HardLabels
from src.app.inference.types import Responsibilities, Scalar, scalar_value
from src.app.plda.gevp import DTYPE
from src.app.utils.errors import ConfigError


def smooth_labels(hard: HardLabels, tau: Scalar) -> Responsibilities:
    """Differentiable in tau when tau is a tensor"""
    if not scalar_value(tau) > 0:
        raise ConfigError(f"smoothing tau must be positive, got {scalar_value(tau)}")
    labels = torch.from_numpy(hard.labels)
    onehot = torch.nn.functional.one_hot(labels, num_classes=hard.num_clusters).to(DTYPE)
    return Responsibilities(gamma=torch.softmax(tau * onehot, dim=1))
