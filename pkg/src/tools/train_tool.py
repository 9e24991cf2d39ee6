#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Train Tool - two-stage (or single-stage) training with per-epoch curves

Writes under paths.out_dir:
    checkpoints/<stage>.ckpt      rewritten after every epoch (best + resume state)
    training_curve_<stage>.csv    epoch, train_loss, val_der
    training_curves.png           loss and validation DER per stage
"""

from typing import Dict, List, Optional

from src.app.training.checkpoint import Checkpoint, EpochRecord, read_checkpoint
from src.app.training.config import Stage
from src.app.training.trainer import train_stage
from src.app.utils.config_utils import CliConfig
from src.app.utils.errors import ConfigError
from src.app.utils.visualization import plot_training_curves, write_training_curve
from src.tools.tool_utils import ToolResult, initial_params, load_plda_model, load_split, out_dir


def stage_schedule(stage: Stage) -> List[Stage]:
    if stage is Stage.TWO_STAGE:
        return [Stage.HPARAMS, Stage.PLDA_FT]
    return [stage]


def _print_epoch(record: EpochRecord, best: Checkpoint) -> None:
    print(
        f"  [{best.stage}] epoch {record.epoch:4d}  loss {record.train_loss:.6f}  "
        f"val DER {100 * record.val_der:6.2f}%  (best {100 * best.val_der:6.2f}% @ {best.epoch})"
    )


def cmd_train(cfg: CliConfig, resume: Optional[str] = None) -> ToolResult:
    tcfg = cfg.training
    model, space = load_plda_model(cfg)
    train_set = load_split(cfg, "train")
    val_set = load_split(cfg, "val")
    print(f"📊 {len(train_set)} training / {len(val_set)} validation conversations, loss {tcfg.loss_kind.value}")

    schedule = stage_schedule(tcfg.stage)
    resumed: Optional[Checkpoint] = None
    if resume:
        resumed = read_checkpoint(resume)
        names = [s.value for s in schedule]
        if resumed.stage not in names:
            raise ConfigError(f"checkpoint stage {resumed.stage!r} is not part of the schedule {names}")
        schedule = schedule[names.index(resumed.stage):]
        print(f"🔧 Resuming stage {resumed.stage} after epoch {resumed.current_epoch}")

    ckpt_dir = out_dir(cfg) / "checkpoints"
    params = initial_params(cfg, space)
    results: Dict[str, Checkpoint] = {}
    outputs = []
    for stage in schedule:
        print(f"🔧 Stage {stage.value}")
        path = ckpt_dir / f"{stage.value}.ckpt"
        best = train_stage(
            train_set,
            val_set,
            params,
            model,
            tcfg,
            stage,
            resume=resumed if resumed is not None and resumed.stage == stage.value else None,
            checkpoint_path=path,
            on_epoch=_print_epoch,
        )
        results[stage.value] = best
        params = best.params
        outputs += [path, write_training_curve(out_dir(cfg) / f"training_curve_{stage.value}.csv", best.history)]
        print(f"✅ Stage {stage.value}: best validation DER {100 * best.val_der:.2f}% at epoch {best.epoch}")

    png = plot_training_curves(
        [results[s].history for s in results], list(results), out_dir(cfg) / "training_curves.png",
        title=f"{tcfg.loss_kind.value} training",
    )
    outputs.append(png)
    final = results[schedule[-1].value]
    final_path = ckpt_dir / f"{schedule[-1].value}.ckpt"
    metrics = {f"{s}_best_val_der": c.val_der for s, c in results.items()}
    metrics.update({f"{s}_initial_val_der": c.history[0].val_der for s, c in results.items()})
    return ToolResult(
        message=f"training finished, best validation DER {100 * final.val_der:.2f}% (use --checkpoint {final_path})",
        metrics=metrics,
        outputs=outputs,
    )
