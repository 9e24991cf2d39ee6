#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Infer Tool - diarize every conversation of a split and write RTTM

Evaluation protocol: oracle VAD (reference speech frames), AHC or external
RTTM initialization, up to inference.max_iters VB iterations with ELBO
stopping, pruning of negligible speakers.
"""

from pathlib import Path
from typing import Dict, Optional

from src.app.diffengine.params import reparam_to_natural
from src.app.inference.types import HyperParams
from src.app.init.ahc import labels_from_rttm
from src.app.scoring.rttm import read_rttm, write_rttm
from src.app.scoring.segments import SegmentSet
from src.app.training.checkpoint import read_checkpoint
from src.app.training.evaluation import diarize_conversation, inference_hyperparams
from src.app.utils.config_utils import CliConfig
from src.app.utils.errors import DataFormatError
from src.tools.tool_utils import ToolResult, load_plda_model, load_split, out_dir


def resolve_inference(cfg: CliConfig, space):
    """Hyperparameters and transform: from a checkpoint when given, else from the config"""
    if cfg.paths.checkpoint:
        ckpt = read_checkpoint(cfg.paths.checkpoint)
        print(f"🔧 Parameters from checkpoint {cfg.paths.checkpoint} (stage {ckpt.stage}, epoch {ckpt.epoch})")
        hp = inference_hyperparams(ckpt.params, cfg.training)
        return hp, reparam_to_natural(ckpt.params).space()
    inf = cfg.inference
    hp = HyperParams(
        fa=inf.fa,
        fb=inf.fb,
        loop_prob=inf.loop_prob,
        smoothing=inf.smoothing,
        calib=inf.calib,
        elbo_tol=inf.elbo_tol,
    ).for_evaluation(inf.max_iters)
    return hp, space


def cmd_infer(cfg: CliConfig, split: Optional[str] = None) -> ToolResult:
    split = split or cfg.run.split
    model, space = load_plda_model(cfg)
    hp, space = resolve_inference(cfg, space)
    print(f"🔧 Hyperparameters: {hp.summary()}")
    init_refs: Optional[Dict[str, SegmentSet]] = read_rttm(cfg.paths.init_rttm) if cfg.paths.init_rttm else None

    rttm_dir = out_dir(cfg) / "rttm" / split
    hyps = []
    for conv in load_split(cfg, split):
        seq = conv.speech_sequence()
        init = None
        if init_refs is not None:
            if conv.utterance_id not in init_refs:
                raise DataFormatError(f"{cfg.paths.init_rttm}: no initialization for {conv.utterance_id}")
            init = labels_from_rttm(init_refs[conv.utterance_id], seq)
        result = diarize_conversation(
            seq,
            model,
            space,
            hp,
            threshold=cfg.inference.ahc_threshold,
            max_speakers=cfg.inference.max_speakers,
            init=init,
            prune=cfg.inference.prune,
        )
        write_rttm(rttm_dir / f"{conv.utterance_id}.rttm", [result.segments])
        hyps.append(result.segments)
        print(
            f"  {conv.utterance_id}: {result.trace.iterations_run} iterations, "
            f"{len(result.segments.speakers())} speakers"
        )
    combined = write_rttm(Path(cfg.paths.out_dir) / f"{split}.rttm", hyps)
    print(f"✅ {len(hyps)} conversations diarized -> {combined}")
    return ToolResult(
        message=f"diarized {len(hyps)} {split} conversations",
        metrics={"conversations": len(hyps)},
        outputs=[combined],
    )
