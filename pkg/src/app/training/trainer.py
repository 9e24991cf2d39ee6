#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Mini-batch Adam training of the differentiable pipeline with DER-based model selection

Each epoch shuffles the training set with a generator seeded by (seed, epoch),
walks it in batches of batch_size, averages per-conversation gradients in a
fixed order and takes one Adam step per batch. Validation DER is measured
before the first epoch and after every epoch; the stage returns the
parameters with the lowest DER (the earliest epoch on ties).
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from src.app.dataio.manifest import Conversation
from src.app.diffengine.engine import PipelineConfig, value_and_grad
from src.app.diffengine.params import GradientSet, ParamSet, reparam_to_natural
from src.app.init.ahc import HardLabels, ahc_cluster
from src.app.plda.model import PLDAModel
from src.app.plda.transform import transform_sequence
from src.app.training.checkpoint import Checkpoint, EpochRecord, write_checkpoint
from src.app.training.config import Stage, TrainConfig, stage_slots
from src.app.training.evaluation import evaluate_der
from src.app.training.optimizer import AdamOptimizer
from src.app.utils.errors import ConfigError

logger = logging.getLogger(__name__)

EpochCallback = Callable[[EpochRecord, Checkpoint], None]


def initial_labels(
    conversations: Sequence[Conversation], params: ParamSet, model: PLDAModel, cfg: TrainConfig
) -> List[HardLabels]:
    """AHC initialization of every conversation's speech frames under the current transform"""
    space = reparam_to_natural(params).space()
    return [
        ahc_cluster(
            transform_sequence(c.speech_sequence(), model, space),
            threshold=cfg.ahc_threshold,
            max_speakers=cfg.max_speakers,
        )
        for c in conversations
    ]


def batch_gradient(
    params: ParamSet,
    batch: Sequence[Conversation],
    inits: Sequence[HardLabels],
    model: PLDAModel,
    cfg: PipelineConfig,
    threads: int = 1,
) -> Tuple[List[float], GradientSet]:
    """Per-conversation losses and the mean gradient of a batch

    Results are combined in batch order whatever the thread count.
    """
    if not batch:
        raise ConfigError("empty batch")

    def one(i: int):
        conv = batch[i]
        return value_and_grad(params, conv.seq, model, inits[i], conv.gt, cfg)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(one, range(len(batch))))
    else:
        results = [one(i) for i in range(len(batch))]
    losses = [report.value for report, _ in results]
    return losses, GradientSet.mean([grads for _, grads in results])


def _validation_der(val_set: Sequence[Conversation], params: ParamSet, model: PLDAModel, cfg: TrainConfig) -> float:
    total, _ = evaluate_der(val_set, params, model, cfg)
    return total.der


def train_stage(
    train_set: Sequence[Conversation],
    val_set: Sequence[Conversation],
    params: ParamSet,
    model: PLDAModel,
    cfg: TrainConfig,
    stage: Union[Stage, str],
    resume: Optional[Checkpoint] = None,
    checkpoint_path: Optional[Union[str, Path]] = None,
    on_epoch: Optional[EpochCallback] = None,
) -> Checkpoint:
    """Train the slots of one stage for cfg.epochs epochs

    With resume, training continues after resume.current_epoch from its
    parameters and optimizer state; the result is identical to an
    uninterrupted run.
    """
    if not train_set or not val_set:
        raise ConfigError("training needs non-empty training and validation sets")
    stage = Stage.parse(stage)
    slots = stage_slots(stage, cfg)
    pipeline = cfg.pipeline_config()

    if resume is not None:
        if resume.stage != stage.value:
            raise ConfigError(f"checkpoint is from stage {resume.stage!r}, not {stage.value!r}")
        current = (resume.current_params or resume.params).with_trainable(slots)
        optimizer = AdamOptimizer(current, cfg, state=resume.optimizer_state or None)
        best = resume
        start = resume.current_epoch + 1
    else:
        current = params.with_trainable(slots)
        optimizer = AdamOptimizer(current, cfg)
        der0 = _validation_der(val_set, current, model, cfg)
        best = Checkpoint(
            params=current.copy(),
            epoch=0,
            val_der=der0,
            stage=stage.value,
            history=[EpochRecord(epoch=0, train_loss=math.nan, val_der=der0)],
            current_params=current.copy(),
            current_epoch=0,
        )
        logger.info("[%s] epoch 0: validation DER %.4f", stage.value, der0)
        start = 1

    # the transform only moves when PLDA slots train
    fixed_inits = None if "transform" in slots else initial_labels(train_set, current, model, cfg)

    for epoch in range(start, cfg.epochs + 1):
        inits = fixed_inits if fixed_inits is not None else initial_labels(train_set, current, model, cfg)
        order = np.random.default_rng([cfg.seed, epoch]).permutation(len(train_set))
        losses: List[float] = []
        for lo in range(0, len(order), cfg.batch_size):
            idx = [int(i) for i in order[lo : lo + cfg.batch_size]]
            batch_losses, grads = batch_gradient(
                current, [train_set[i] for i in idx], [inits[i] for i in idx], model, pipeline, cfg.threads
            )
            losses.extend(batch_losses)
            current = optimizer.step(grads)

        record = EpochRecord(
            epoch=epoch,
            train_loss=math.fsum(losses) / len(losses),
            val_der=_validation_der(val_set, current, model, cfg),
        )
        history = best.history + [record]
        if record.val_der < best.val_der:
            best_params, best_epoch, best_der = current.copy(), epoch, record.val_der
        else:
            best_params, best_epoch, best_der = best.params, best.epoch, best.val_der
        best = Checkpoint(
            params=best_params,
            epoch=best_epoch,
            val_der=best_der,
            stage=stage.value,
            history=history,
            current_params=current.copy(),
            current_epoch=epoch,
            optimizer_state=optimizer.state_dict(),
        )
        logger.info(
            "[%s] epoch %d: train loss %.6f, validation DER %.4f (best %.4f @ %d)",
            stage.value, epoch, record.train_loss, record.val_der, best.val_der, best.epoch,
        )
        if checkpoint_path is not None:
            write_checkpoint(checkpoint_path, best)
        if on_epoch is not None:
            on_epoch(record, best)
    return best


def run_two_stage(
    train_set: Sequence[Conversation],
    val_set: Sequence[Conversation],
    params: ParamSet,
    model: PLDAModel,
    cfg: TrainConfig,
    checkpoint_dir: Optional[Union[str, Path]] = None,
    on_epoch: Optional[EpochCallback] = None,
) -> Dict[str, Checkpoint]:
    """Hyperparameters first, then the PLDA transform starting from the best stage-1 parameters"""
    results: Dict[str, Checkpoint] = {}
    current = params
    for stage in (Stage.HPARAMS, Stage.PLDA_FT):
        path = Path(checkpoint_dir) / f"{stage.value}.ckpt" if checkpoint_dir is not None else None
        results[stage.value] = train_stage(
            train_set, val_set, current, model, cfg, stage, checkpoint_path=path, on_epoch=on_epoch
        )
        current = results[stage.value].params
    return results
