#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Synth Tool - write a seeded synthetic corpus and its pre-trained PLDA model

Layout under paths.data_dir:
    <split>/<utterance>.xvec|.rttm|.uem   for split in train, val, test
    <split>.manifest                        one record per conversation
    plda.bin                                generative PLDA and its GEVP transform
"""

import json
from pathlib import Path

from src.app.dataio.ground_truth_builder import speech_regions
from src.app.dataio.manifest import DatasetManifest, ManifestRecord, write_manifest
from src.app.dataio.synth import RNG_ALGORITHM, generate_plda_corpus, generate_split, split_rngs
from src.app.dataio.xvector_io import write_xvectors
from src.app.plda.gevp import solve_gevp
from src.app.plda.model import pretrain_plda
from src.app.plda.plda_io import write_plda
from src.app.scoring.rttm import write_rttm, write_uem
from src.app.utils.config_utils import CliConfig
from src.tools.tool_utils import ToolResult

SYNTH_SPLITS = ("train", "val", "test")


def cmd_synth(cfg: CliConfig) -> ToolResult:
    synth = cfg.synth
    data_dir = Path(cfg.paths.data_dir)
    header = [
        "dvbx synthetic corpus",
        f"rng: {RNG_ALGORITHM}",
        f"synth: {json.dumps(synth.to_dict(), sort_keys=True)}",
    ]
    outputs, metrics = [], {}
    for split in SYNTH_SPLITS:
        split_dir = data_dir / split
        split_dir.mkdir(parents=True, exist_ok=True)
        records = []
        for seq, _, ref in generate_split(synth, split, threads=cfg.run.threads):
            stem = split_dir / seq.utterance_id
            xvec = write_xvectors(seq, stem.with_suffix(".xvec"))
            rttm = write_rttm(stem.with_suffix(".rttm"), [ref])
            uem = write_uem(stem.with_suffix(".uem"), {seq.utterance_id: speech_regions(ref)})
            records.append(ManifestRecord(seq.utterance_id, xvec, rttm, uem))
        manifest_path = write_manifest(
            cfg.paths.manifest_path(split), DatasetManifest(split=split, records=records, header=header)
        )
        outputs.append(manifest_path)
        metrics[f"{split}_conversations"] = len(records)
        print(f"✅ {split}: {len(records)} conversations -> {manifest_path}")

    rng = split_rngs(synth, "plda", 1)[0]
    vectors, labels = generate_plda_corpus(synth, rng, synth.plda_speakers, synth.plda_per_speaker)
    model = pretrain_plda(vectors, labels)
    space = solve_gevp(model, cfg.inference.out_dim)
    plda_path = write_plda(cfg.paths.plda_path(), model, space)
    outputs.append(plda_path)
    print(f"✅ PLDA model from {synth.plda_speakers} x {synth.plda_per_speaker} vectors -> {plda_path}")
    print(f"📊 between-speaker spectrum: max {float(space.phi.max()):.3f}, min {float(space.phi.min()):.3f}")
    return ToolResult(message=f"synthetic corpus written to {data_dir}", metrics=metrics, outputs=outputs)
