#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Gradient Check Tool - verify reverse-mode gradients on a small synthetic instance
"""

from dataclasses import replace

import numpy as np

from src.app.dataio.manifest import Conversation
from src.app.dataio.synth import generate_plda_corpus, generate_split, split_rngs
from src.app.diffengine.gradcheck import format_gradcheck_table, gradient_check
from src.app.diffengine.params import SLOTS
from src.app.plda.gevp import solve_gevp
from src.app.plda.model import pretrain_plda
from src.app.training.trainer import initial_labels
from src.app.utils.config_utils import CliConfig
from src.app.utils.errors import NumericError
from src.app.utils.logging_utils import atomic_write_text
from src.tools.tool_utils import ToolResult, initial_params, out_dir

PLDA_SPEAKERS = 200
PLDA_PER_SPEAKER = 20


def build_instance(cfg: CliConfig):
    """One synthetic conversation, its PLDA model, parameters and AHC initialization"""
    g = cfg.gradcheck
    synth = replace(
        cfg.synth,
        dim=g.dim,
        min_speakers=g.num_speakers,
        max_speakers=g.num_speakers,
        min_frames=g.num_frames,
        max_frames=g.num_frames,
        raw_space=False,
    )
    seq, gt, ref = generate_split(synth, "train", 1)[0]
    vectors, labels = generate_plda_corpus(synth, split_rngs(synth, "plda", 1)[0], PLDA_SPEAKERS, PLDA_PER_SPEAKER)
    model = pretrain_plda(vectors, labels)
    space = solve_gevp(model)
    params = initial_params(cfg, space)
    conv = Conversation(seq=seq, ref=ref, gt=gt)
    init = initial_labels([conv], params, model, cfg.training)[0]
    return conv, model, params, init


def cmd_grad_check(cfg: CliConfig) -> ToolResult:
    slots = cfg.gradcheck.slots or list(SLOTS)
    conv, model, params, init = build_instance(cfg)
    print(f"🔧 Checking slots {slots} on {conv.seq.num_frames} frames, loss {cfg.training.loss_kind.value}")
    rows = gradient_check(
        params,
        conv.seq,
        model,
        init,
        conv.gt,
        cfg.training.pipeline_config(),
        slots=slots,
        max_elements=cfg.gradcheck.max_elements,
        rng=np.random.default_rng(cfg.run.seed),
    )
    table = format_gradcheck_table(rows)
    print(table)
    path = atomic_write_text(out_dir(cfg) / "gradcheck.txt", table + "\n")
    worst = max(rows, key=lambda r: r.rel_error)
    failed = sorted({r.slot for r in rows if not r.passed})
    metrics = {"max_rel_error": worst.rel_error, "max_abs_error": max(r.abs_error for r in rows), "failed": failed}
    if failed:
        print(f"❌ Gradient check failed for {failed}")
        raise NumericError(f"gradient check exceeded tolerance for slots {failed}")
    print(f"✅ All {len(rows)} checks passed (max relative error {worst.rel_error:.2e} in {worst.slot})")
    return ToolResult(message="gradient check passed", metrics=metrics, outputs=[path])
