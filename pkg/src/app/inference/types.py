#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Value types of the VB inference loop

Scalars in HyperParams may be plain floats or 0-dim float64 tensors; the
latter lets the training code attach gradients to them.
"""

from dataclasses import dataclass, field, replace
from typing import List, Union

import torch

from src.app.plda.gevp import DTYPE
from src.app.utils.errors import ConfigError, NumericError, ShapeError

Scalar = Union[float, torch.Tensor]

ROW_SUM_TOL = 1e-9
EVAL_MAX_ITERS = 40
TRAIN_MAX_ITERS = 10
DEFAULT_ELBO_TOL = 1e-4


def scalar_value(x: Scalar) -> float:
    """Plain float of a scalar that may carry a graph"""
    if isinstance(x, torch.Tensor):
        return float(x.detach())
    return float(x)


@dataclass(frozen=True)
class HyperParams:
    """Inference hyperparameters (F_A, F_B, P_l, tau, tau_calib) and loop control"""

    fa: Scalar = 1.0
    fb: Scalar = 1.0
    loop_prob: Scalar = 0.0
    smoothing: Scalar = 7.0
    calib: Scalar = 1.0
    max_iters: int = TRAIN_MAX_ITERS
    elbo_tol: float = DEFAULT_ELBO_TOL
    use_elbo_stop: bool = False

    def __post_init__(self):
        for name in ("fa", "fb", "smoothing", "calib"):
            value = scalar_value(getattr(self, name))
            if not value > 0.0:
                raise ConfigError(f"{name} must be positive, got {value}")
        loop = scalar_value(self.loop_prob)
        if not 0.0 <= loop < 1.0:
            raise ConfigError(f"loop_prob must lie in [0, 1), got {loop}")
        if int(self.max_iters) < 1:
            raise ConfigError(f"max_iters must be >= 1, got {self.max_iters}")
        if self.elbo_tol < 0.0:
            raise ConfigError(f"elbo_tol must be non-negative, got {self.elbo_tol}")

    @property
    def is_gmm(self) -> bool:
        return scalar_value(self.loop_prob) == 0.0

    def for_evaluation(self, max_iters: int = EVAL_MAX_ITERS) -> "HyperParams":
        """Evaluation protocol: 40 iterations with ELBO stopping"""
        return replace(self, max_iters=max_iters, use_elbo_stop=True)

    def for_training(self, unroll_iters: int = TRAIN_MAX_ITERS) -> "HyperParams":
        """Fixed unroll depth, no early stopping"""
        return replace(self, max_iters=unroll_iters, use_elbo_stop=False)

    def detached(self) -> "HyperParams":
        return replace(
            self,
            fa=scalar_value(self.fa),
            fb=scalar_value(self.fb),
            loop_prob=scalar_value(self.loop_prob),
            smoothing=scalar_value(self.smoothing),
            calib=scalar_value(self.calib),
        )

    def summary(self) -> dict:
        return {
            "fa": scalar_value(self.fa),
            "fb": scalar_value(self.fb),
            "loop_prob": scalar_value(self.loop_prob),
            "smoothing": scalar_value(self.smoothing),
            "calib": scalar_value(self.calib),
            "max_iters": int(self.max_iters),
            "elbo_tol": float(self.elbo_tol),
            "use_elbo_stop": bool(self.use_elbo_stop),
        }


@dataclass(frozen=True)
class Responsibilities:
    """T x S row-stochastic soft assignment of frames to speakers"""

    gamma: torch.Tensor

    def __post_init__(self):
        gamma = torch.as_tensor(self.gamma, dtype=DTYPE)
        if gamma.ndim != 2 or gamma.shape[1] < 1:
            raise ShapeError(f"responsibilities must be T x S with S >= 1, got {tuple(gamma.shape)}")
        values = gamma.detach()
        if not bool(torch.isfinite(values).all()):
            raise NumericError("responsibilities contain non-finite values")
        if gamma.shape[0] > 0:
            if bool((values < -ROW_SUM_TOL).any()) or bool((values > 1.0 + ROW_SUM_TOL).any()):
                raise NumericError("responsibilities must lie in [0, 1]")
            row_error = float((values.sum(dim=1) - 1.0).abs().max())
            if row_error > ROW_SUM_TOL:
                raise NumericError(f"responsibility rows must sum to 1 (max deviation {row_error:.3e})")
        object.__setattr__(self, "gamma", gamma)

    @property
    def num_frames(self) -> int:
        return int(self.gamma.shape[0])

    @property
    def num_speakers(self) -> int:
        return int(self.gamma.shape[1])

    def hard_labels(self) -> torch.Tensor:
        """Per-frame argmax (ties go to the lower index)"""
        return torch.argmax(self.gamma.detach(), dim=1)


@dataclass(frozen=True)
class SpeakerPosteriors:
    """q(y_s) = N(alpha_s, L_s^-1); L_s is diagonal and stored as S x d'"""

    alpha: torch.Tensor
    precision: torch.Tensor

    def __post_init__(self):
        if self.alpha.shape != self.precision.shape or self.alpha.ndim != 2:
            raise ShapeError(f"alpha {tuple(self.alpha.shape)} and precision {tuple(self.precision.shape)} disagree")
        if bool((self.precision.detach() < 1.0 - 1e-12).any()):
            raise NumericError("posterior precision entries must be >= 1")

    @property
    def num_speakers(self) -> int:
        return int(self.alpha.shape[0])


@dataclass(frozen=True)
class SpeakerPriors:
    """Speaker prior probabilities pi"""

    pi: torch.Tensor

    def __post_init__(self):
        pi = torch.as_tensor(self.pi, dtype=DTYPE)
        if pi.ndim != 1 or pi.shape[0] < 1:
            raise ShapeError(f"priors must be a non-empty vector, got {tuple(pi.shape)}")
        values = pi.detach()
        if bool((values < 0).any()) or abs(float(values.sum()) - 1.0) > ROW_SUM_TOL:
            raise NumericError(f"priors must be a probability vector, got sum {float(values.sum()):.12f}")
        object.__setattr__(self, "pi", pi)

    @classmethod
    def uniform(cls, num_speakers: int) -> "SpeakerPriors":
        return cls(pi=torch.full((num_speakers,), 1.0 / num_speakers, dtype=DTYPE))

    def log(self) -> torch.Tensor:
        # zero priors enter as log(tiny) so that gradients stay finite
        return torch.log(self.pi.clamp_min(torch.finfo(DTYPE).tiny))


@dataclass
class InferenceTrace:
    """Everything one unrolled VB run produced, iteration by iteration"""

    per_iter_gamma: List[Responsibilities] = field(default_factory=list)
    per_iter_elbo: List[float] = field(default_factory=list)
    final_posteriors: SpeakerPosteriors = None
    final_priors: SpeakerPriors = None
    iterations_run: int = 0

    @property
    def final_gamma(self) -> Responsibilities:
        if not self.per_iter_gamma:
            raise ValueError("empty inference trace")
        return self.per_iter_gamma[-1]
