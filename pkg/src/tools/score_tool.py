#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Score Tool - DER of hypothesis RTTM against reference RTTM

Either explicit --ref/--hyp (and optional --uem) files, or the split's
manifest references against <out_dir>/<split>.rttm.
"""

from pathlib import Path
from typing import Optional

from src.app.dataio.manifest import read_manifest
from src.app.scoring.der import format_der_report, score_recordings, total_breakdown
from src.app.scoring.rttm import read_rttm, read_uem
from src.app.scoring.segments import SegmentSet
from src.app.utils.config_utils import CliConfig
from src.app.utils.logging_utils import atomic_write_text
from src.tools.tool_utils import ToolResult, out_dir


def _from_manifest(cfg: CliConfig, split: str):
    manifest = read_manifest(cfg.paths.manifest_path(split), split)
    refs, uems = {}, {}
    for record in manifest.records:
        refs[record.utterance_id] = read_rttm(record.rttm_path).get(
            record.utterance_id, SegmentSet(recording_id=record.utterance_id)
        )
        uems.update(read_uem(record.uem_path))
    hyps = read_rttm(Path(cfg.paths.out_dir) / f"{split}.rttm")
    return refs, hyps, uems


def cmd_score(
    cfg: CliConfig,
    ref: Optional[str] = None,
    hyp: Optional[str] = None,
    uem: Optional[str] = None,
    split: Optional[str] = None,
) -> ToolResult:
    split = split or cfg.run.split
    if ref and hyp:
        refs, hyps = read_rttm(ref), read_rttm(hyp)
        uems = read_uem(uem) if uem else None
        name = Path(hyp).stem
    else:
        refs, hyps, uems = _from_manifest(cfg, split)
        name = split

    rows = score_recordings(refs, hyps, collar=cfg.scoring.collar, uems=uems)
    report = format_der_report(rows)
    path = atomic_write_text(out_dir(cfg) / f"der_{name}.tsv", report)
    total = total_breakdown(rows)
    print(report, end="")
    print(f"📊 DER {100 * total.der:.2f}% over {len(rows)} recordings (collar {cfg.scoring.collar:g} s) -> {path}")
    return ToolResult(
        message=f"DER {100 * total.der:.2f}%",
        metrics={"der": total.der, "miss": total.miss, "false_alarm": total.false_alarm, "confusion": total.confusion},
        outputs=[path],
    )
