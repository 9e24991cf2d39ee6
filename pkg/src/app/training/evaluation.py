#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Evaluation pipeline - diarize conversations with the 40-iteration protocol and score DER
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import torch

from src.app.dataio.manifest import Conversation
from src.app.diffengine.params import ParamSet, reparam_to_natural
from src.app.inference.types import HyperParams, InferenceTrace, Responsibilities
from src.app.inference.vb import prune_speakers, run_inference
from src.app.init.ahc import HardLabels, ahc_cluster
from src.app.init.smoothing import smooth_labels
from src.app.plda.gevp import TransformedSpace
from src.app.plda.model import PLDAModel
from src.app.plda.transform import XVectorSequence, transform_sequence
from src.app.scoring.der import ZERO, DERBreakdown, der
from src.app.scoring.segments import SegmentSet, responsibilities_to_segments
from src.app.training.config import TrainConfig

logger = logging.getLogger(__name__)


@dataclass
class DiarizationResult:
    segments: SegmentSet
    gamma: Responsibilities
    trace: InferenceTrace
    kept: torch.Tensor


def inference_hyperparams(params: ParamSet, cfg: TrainConfig, evaluation: bool = True) -> HyperParams:
    """Plain-float hyperparameters for the current parameters"""
    nat = reparam_to_natural(params)
    hp = HyperParams(
        fa=float(nat.fa),
        fb=float(nat.fb),
        loop_prob=0.0 if cfg.forced_gmm else float(nat.loop_prob),
        smoothing=float(nat.smoothing),
        calib=float(nat.calib),
        elbo_tol=cfg.eval_elbo_tol,
    )
    return hp.for_evaluation(cfg.eval_max_iters) if evaluation else hp.for_training(cfg.unroll_iters)


def diarize_conversation(
    seq: XVectorSequence,
    model: PLDAModel,
    space: TransformedSpace,
    hp: HyperParams,
    threshold: float = 0.0,
    max_speakers: int = 10,
    init: Optional[HardLabels] = None,
    prune: bool = True,
) -> DiarizationResult:
    """transform -> AHC (unless init is given) -> smoothing -> VB -> prune -> segments"""
    with torch.no_grad():
        tseq = transform_sequence(seq, model, space)
        if init is None:
            init = ahc_cluster(tseq, threshold=threshold, max_speakers=max_speakers)
        trace = run_inference(tseq, smooth_labels(init, hp.smoothing), space, hp)
        gamma = trace.final_gamma
        kept = torch.arange(gamma.num_speakers)
        if prune:
            gamma, _, kept = prune_speakers(gamma, trace.final_priors)
    segments = responsibilities_to_segments(gamma, seq, recording_id=seq.utterance_id)
    return DiarizationResult(segments=segments, gamma=gamma, trace=trace, kept=kept)


def _score_one(
    conv: Conversation, params: ParamSet, model: PLDAModel, cfg: TrainConfig, hp: HyperParams
) -> DERBreakdown:
    result = diarize_conversation(
        conv.speech_sequence(),
        model,
        reparam_to_natural(params).space(),
        hp,
        threshold=cfg.ahc_threshold,
        max_speakers=cfg.max_speakers,
        prune=cfg.prune,
    )
    return der(conv.ref, result.segments, collar=cfg.collar, uem=conv.uem)


def evaluate_der(
    conversations: Sequence[Conversation], params: ParamSet, model: PLDAModel, cfg: TrainConfig
) -> Tuple[DERBreakdown, List[Tuple[str, DERBreakdown]]]:
    """Total DER over a set (errors summed before dividing) and per-recording rows"""
    hp = inference_hyperparams(params, cfg)

    def score(conv: Conversation) -> DERBreakdown:
        return _score_one(conv, params, model, cfg, hp)

    if cfg.threads > 1:
        with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
            breakdowns = list(pool.map(score, conversations))
    else:
        breakdowns = [score(c) for c in conversations]
    rows = [(c.utterance_id, b) for c, b in zip(conversations, breakdowns)]
    logger.debug("Scored %d conversations with %s", len(rows), hp.summary())
    total = ZERO
    for b in breakdowns:
        total = total + b
    return total, rows
