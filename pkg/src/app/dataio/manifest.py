#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Dataset manifests and the in-memory conversation bundle

Manifest: optional "#" header lines, then one tab-separated record per line
    <utterance_id>  <xvector path>  <rttm path>  <uem path>
Relative paths are resolved against the manifest's directory.
"""

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Tuple, Union

from src.app.dataio.ground_truth_builder import build_ground_truth
from src.app.dataio.xvector_io import read_xvectors
from src.app.losses.ground_truth import GroundTruth
from src.app.plda.transform import XVectorSequence
from src.app.scoring.rttm import read_rttm, read_uem
from src.app.scoring.segments import SegmentSet
from src.app.utils.errors import ConfigError, DataFormatError
from src.app.utils.logging_utils import atomic_write_text

logger = logging.getLogger(__name__)

SPLITS = ("train", "val", "test")
MANIFEST_FIELDS = 4


@dataclass(frozen=True)
class ManifestRecord:
    utterance_id: str
    xvector_path: Path
    rttm_path: Path
    uem_path: Path


@dataclass
class DatasetManifest:
    split: str
    records: List[ManifestRecord] = field(default_factory=list)
    header: List[str] = field(default_factory=list)

    def __post_init__(self):
        if self.split not in SPLITS:
            raise ConfigError(f"unknown split {self.split!r} (choose from {SPLITS})")
        ids = [r.utterance_id for r in self.records]
        if len(set(ids)) != len(ids):
            dup = sorted({i for i in ids if ids.count(i) > 1})
            raise DataFormatError(f"duplicate utterance ids in {self.split} manifest: {dup[:5]}")

    def __len__(self) -> int:
        return len(self.records)


@dataclass
class Conversation:
    """One recording with its oracle-VAD ground truth"""

    seq: XVectorSequence
    ref: SegmentSet
    gt: GroundTruth
    uem: Optional[List[Tuple[float, float]]] = None

    @property
    def utterance_id(self) -> str:
        return self.seq.utterance_id

    def speech_sequence(self) -> XVectorSequence:
        """Frames that carry reference speech"""
        return self.seq.select(self.gt.frame_indices)


def format_manifest(manifest: DatasetManifest, base_dir: Union[str, Path]) -> str:
    base = Path(base_dir)
    lines = [f"# {line}\n" for line in manifest.header]
    for r in manifest.records:
        paths = []
        for p in (r.xvector_path, r.rttm_path, r.uem_path):
            p = Path(p)
            try:
                paths.append(p.relative_to(base).as_posix())
            except ValueError:
                paths.append(p.as_posix())
        lines.append("\t".join([r.utterance_id] + paths) + "\n")
    return "".join(lines)


def write_manifest(path: Union[str, Path], manifest: DatasetManifest) -> Path:
    path = Path(path)
    return atomic_write_text(path, format_manifest(manifest, path.parent))


def read_manifest(path: Union[str, Path], split: str, check_paths: bool = True) -> DatasetManifest:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"manifest not found: {path}")
    header, records = [], []
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        if line.startswith("#"):
            header.append(line[1:].strip())
            continue
        fields = line.split("\t")
        if len(fields) != MANIFEST_FIELDS:
            raise DataFormatError(f"{path}:{lineno}: expected {MANIFEST_FIELDS} tab-separated fields, got {len(fields)}")
        resolved = [(path.parent / f.strip()) for f in fields[1:]]
        if check_paths:
            for p in resolved:
                if not p.exists():
                    raise FileNotFoundError(f"{path}:{lineno}: {p} does not exist")
        records.append(ManifestRecord(fields[0].strip(), *resolved))
    return DatasetManifest(split=split, records=records, header=header)


def load_conversation(record: ManifestRecord, extent: str = "window") -> Conversation:
    seq = read_xvectors(record.xvector_path)
    if seq.utterance_id != record.utterance_id:
        raise DataFormatError(f"{record.xvector_path}: holds {seq.utterance_id!r}, manifest says {record.utterance_id!r}")
    refs = read_rttm(record.rttm_path)
    ref = refs.get(record.utterance_id, SegmentSet(recording_id=record.utterance_id))
    uems = read_uem(record.uem_path)
    return Conversation(
        seq=seq,
        ref=ref,
        gt=build_ground_truth(ref, seq, extent=extent),
        uem=uems.get(record.utterance_id),
    )


def load_conversations(manifest: DatasetManifest, extent: str = "window") -> List[Conversation]:
    items = [load_conversation(r, extent) for r in manifest.records]
    logger.info("Loaded %d %s conversations", len(items), manifest.split)
    return items
