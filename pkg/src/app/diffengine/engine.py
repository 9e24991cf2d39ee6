#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Differentiable pipeline: transform -> label smoothing -> unrolled VB -> calibration -> PIT loss

Gradients come from torch reverse mode; finite_difference is the oracle used
to verify them.
"""

import logging
from dataclasses import dataclass
from typing import Callable, Dict, Optional, Tuple

import torch

from src.app.diffengine.params import SLOTS, GradientSet, ParamSet, reparam_to_natural
from src.app.inference.types import TRAIN_MAX_ITERS, HyperParams, InferenceTrace
from src.app.inference.vb import run_inference
from src.app.init.ahc import HardLabels
from src.app.init.smoothing import smooth_labels
from src.app.losses.ground_truth import GroundTruth
from src.app.losses.pit import LossKind, LossReport, averaged_loss
from src.app.plda.model import PLDAModel
from src.app.plda.transform import XVectorSequence, transform_sequence
from src.app.utils.errors import ConfigError, NumericError, ShapeError

logger = logging.getLogger(__name__)

FD_SCALE = 1e-4


@dataclass(frozen=True)
class PipelineConfig:
    """What the differentiated pipeline needs from the training configuration"""

    unroll_iters: int = TRAIN_MAX_ITERS
    loss_kind: LossKind = LossKind.EDE
    forced_gmm: bool = True

    def __post_init__(self):
        object.__setattr__(self, "loss_kind", LossKind.parse(self.loss_kind))
        if int(self.unroll_iters) < 1:
            raise ConfigError(f"unroll_iters must be >= 1, got {self.unroll_iters}")


def _frames_for(seq: XVectorSequence, gt: GroundTruth) -> XVectorSequence:
    if seq.num_frames == gt.num_frames:
        return seq
    if gt.frame_indices.size and int(gt.frame_indices.max()) >= seq.num_frames:
        raise ShapeError(f"{seq.utterance_id}: ground truth references frame {int(gt.frame_indices.max())}")
    return seq.select(gt.frame_indices)


def _forward(
    params: ParamSet,
    leaves: Optional[Dict[str, torch.Tensor]],
    seq: XVectorSequence,
    model: PLDAModel,
    init: HardLabels,
    gt: GroundTruth,
    cfg: PipelineConfig,
) -> Tuple[LossReport, InferenceTrace]:
    seq = _frames_for(seq, gt)
    if init.num_frames != seq.num_frames:
        raise ShapeError(f"{seq.utterance_id}: {init.num_frames} initial labels for {seq.num_frames} frames")
    nat = reparam_to_natural(params, leaves)
    space = nat.space()
    tseq = transform_sequence(seq, model, space)
    init_gamma = smooth_labels(init, nat.smoothing)
    hp = HyperParams(
        fa=nat.fa,
        fb=nat.fb,
        loop_prob=0.0 if cfg.forced_gmm else nat.loop_prob,
        smoothing=nat.smoothing,
        calib=nat.calib,
        max_iters=cfg.unroll_iters,
        use_elbo_stop=False,
    )
    trace = run_inference(tseq, init_gamma, space, hp)
    calib = nat.calib if cfg.loss_kind.calibrated else None
    report = averaged_loss(trace, gt, cfg.loss_kind.frame_loss, calib)
    return report, trace


def forward_loss(
    params: ParamSet,
    seq: XVectorSequence,
    model: PLDAModel,
    init: HardLabels,
    gt: GroundTruth,
    cfg: PipelineConfig,
) -> Tuple[float, InferenceTrace]:
    """Iteration-averaged PIT loss of one conversation (no graph kept)"""
    with torch.no_grad():
        report, trace = _forward(params, None, seq, model, init, gt, cfg)
    return report.value, trace


def value_and_grad(
    params: ParamSet,
    seq: XVectorSequence,
    model: PLDAModel,
    init: HardLabels,
    gt: GroundTruth,
    cfg: PipelineConfig,
) -> Tuple[LossReport, GradientSet]:
    """Loss report and exact reverse-mode gradient for every slot

    Slots that are not trainable, or that the loss does not reach, get 0.
    """
    leaves = {
        slot: params.values[slot].detach().clone().requires_grad_(params.trainable[slot]) for slot in SLOTS
    }
    report, _ = _forward(params, leaves, seq, model, init, gt, cfg)
    if not torch.isfinite(report.loss.detach()):
        raise NumericError(f"{seq.utterance_id}: forward loss is not finite")

    grads = {slot: torch.zeros_like(params.values[slot]) for slot in SLOTS}
    active = params.trainable_slots()
    if active:
        computed = torch.autograd.grad(report.loss, [leaves[s] for s in active], allow_unused=True)
        for slot, grad in zip(active, computed):
            if grad is not None:
                grads[slot] = grad.detach()
    result = GradientSet(grads=grads)
    try:
        result.check_finite()
    except NumericError as e:
        raise NumericError(f"{seq.utterance_id}: {e}") from None
    report.loss = report.loss.detach()
    return report, result


def backward(
    params: ParamSet,
    seq: XVectorSequence,
    model: PLDAModel,
    init: HardLabels,
    gt: GroundTruth,
    cfg: PipelineConfig,
) -> GradientSet:
    return value_and_grad(params, seq, model, init, gt, cfg)[1]


def default_step(params: ParamSet, slot: str, element: int) -> float:
    """1e-4 * max(1, |theta|) for scalar slots, 1e-4 for matrix elements"""
    if params.values[slot].ndim == 0:
        return FD_SCALE * max(1.0, abs(params.get(slot)))
    return FD_SCALE


def finite_difference(
    loss_fn: Callable[[ParamSet], float],
    params: ParamSet,
    slot: str,
    element: int = 0,
    h: Optional[float] = None,
) -> float:
    """Central difference (f(theta + h) - f(theta - h)) / 2h in the trainable space"""
    if slot not in SLOTS:
        raise ConfigError(f"unknown slot {slot!r}")
    if not 0 <= element < params.numel(slot):
        raise ShapeError(f"element {element} out of range for slot {slot} with {params.numel(slot)} entries")
    h = default_step(params, slot, element) if h is None else float(h)
    if not h > 0:
        raise ConfigError(f"finite-difference step must be positive, got {h}")
    upper = loss_fn(params.shifted(slot, element, h))
    lower = loss_fn(params.shifted(slot, element, -h))
    return (upper - lower) / (2.0 * h)
