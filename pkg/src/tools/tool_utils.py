#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Shared helpers for the subcommand tools
"""

from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Tuple

from src.app.dataio.manifest import Conversation, load_conversations, read_manifest
from src.app.diffengine.params import ParamSet, natural_to_reparam
from src.app.plda.gevp import TransformedSpace
from src.app.plda.model import PLDAModel
from src.app.plda.plda_io import read_plda
from src.app.utils.config_utils import CliConfig


@dataclass
class ToolResult:
    """What a subcommand reports back to main: status line, metrics, files written"""

    message: str
    metrics: Dict[str, Any] = field(default_factory=dict)
    outputs: List[Path] = field(default_factory=list)
    ok: bool = True


def load_plda_model(cfg: CliConfig) -> Tuple[PLDAModel, TransformedSpace]:
    path = cfg.paths.plda_path()
    model, space = read_plda(path)
    print(f"🔧 PLDA model: {path} (d={space.in_dim}, d'={space.out_dim})")
    return model, space


def initial_params(cfg: CliConfig, space: TransformedSpace) -> ParamSet:
    """Starting point from the inference section (fa = fb = calib = 1 by default)"""
    inf = cfg.inference
    return natural_to_reparam(
        fa=inf.fa, fb=inf.fb, loop_prob=inf.loop_prob, smoothing=inf.smoothing, calib=inf.calib, space=space
    )


def load_split(cfg: CliConfig, split: str) -> List[Conversation]:
    manifest = read_manifest(cfg.paths.manifest_path(split), split)
    return load_conversations(manifest, extent=cfg.training.gt_extent)


def out_dir(cfg: CliConfig) -> Path:
    path = Path(cfg.paths.out_dir)
    path.mkdir(parents=True, exist_ok=True)
    return path
