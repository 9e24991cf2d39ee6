#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Training configuration and stage definitions
"""

from dataclasses import asdict, dataclass
from enum import Enum
from typing import List, Tuple

from src.app.diffengine.engine import PipelineConfig
from src.app.inference.types import DEFAULT_ELBO_TOL, EVAL_MAX_ITERS, TRAIN_MAX_ITERS
from src.app.losses.pit import LossKind
from src.app.utils.errors import ConfigError


class Stage(str, Enum):
    HPARAMS = "hparams"
    PLDA_FT = "plda"
    JOINT = "joint"
    TWO_STAGE = "two-stage"

    @classmethod
    def parse(cls, value) -> "Stage":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).strip().lower())
        except ValueError:
            choices = ", ".join(s.value for s in cls)
            raise ConfigError(f"unknown training stage {value!r} (choose from {choices})") from None


@dataclass(frozen=True)
class TrainConfig:
    batch_size: int = 8
    epochs: int = 500
    unroll_iters: int = TRAIN_MAX_ITERS
    loss_kind: LossKind = LossKind.EDE
    stage: Stage = Stage.TWO_STAGE
    lr_fa: float = 5e-4
    lr_hparams: float = 1e-2
    lr_plda: float = 1e-3
    betas: Tuple[float, float] = (0.9, 0.999)
    eps: float = 1e-8
    seed: int = 0
    forced_gmm: bool = True
    threads: int = 1
    eval_max_iters: int = EVAL_MAX_ITERS
    eval_elbo_tol: float = DEFAULT_ELBO_TOL
    ahc_threshold: float = 0.0
    max_speakers: int = 10
    collar: float = 0.0
    prune: bool = True
    gt_extent: str = "window"

    def __post_init__(self):
        object.__setattr__(self, "loss_kind", LossKind.parse(self.loss_kind))
        object.__setattr__(self, "stage", Stage.parse(self.stage))
        object.__setattr__(self, "betas", tuple(float(b) for b in self.betas))
        for name in ("lr_fa", "lr_hparams", "lr_plda", "eps"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be positive, got {getattr(self, name)}")
        if self.batch_size < 1:
            raise ConfigError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.epochs < 1:
            raise ConfigError(f"epochs must be >= 1, got {self.epochs}")
        if self.unroll_iters < 1 or self.eval_max_iters < 1:
            raise ConfigError("unroll_iters and eval_max_iters must be >= 1")
        if len(self.betas) != 2 or not all(0 <= b < 1 for b in self.betas):
            raise ConfigError(f"betas must be two values in [0, 1), got {self.betas}")
        if self.threads < 1:
            raise ConfigError(f"threads must be >= 1, got {self.threads}")
        if self.collar < 0:
            raise ConfigError(f"collar must be non-negative, got {self.collar}")

    def pipeline_config(self) -> PipelineConfig:
        return PipelineConfig(unroll_iters=self.unroll_iters, loss_kind=self.loss_kind, forced_gmm=self.forced_gmm)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["loss_kind"] = self.loss_kind.value
        d["stage"] = self.stage.value
        d["betas"] = list(self.betas)
        return d


def stage_slots(stage: Stage, cfg: TrainConfig) -> List[str]:
    """Slots trained in a stage

    HPARAMS trains fa, fb, log_smoothing, plus log_calib for calibrated losses
    and logit_loop_prob when the GMM path is not forced. PLDA_FT trains the
    transform and log_phi. JOINT trains both groups.
    """
    stage = Stage.parse(stage)
    hparams = ["fa", "fb", "log_smoothing"]
    if cfg.loss_kind.calibrated:
        hparams.append("log_calib")
    if not cfg.forced_gmm:
        hparams.append("logit_loop_prob")
    plda = ["transform", "log_phi"]
    if stage is Stage.HPARAMS:
        return hparams
    if stage is Stage.PLDA_FT:
        return plda
    if stage is Stage.JOINT:
        return hparams + plda
    raise ConfigError("the two-stage schedule is not a single stage")


def learning_rate(slot: str, cfg: TrainConfig) -> float:
    if slot == "fa":
        return cfg.lr_fa
    if slot in ("transform", "log_phi"):
        return cfg.lr_plda
    return cfg.lr_hparams
