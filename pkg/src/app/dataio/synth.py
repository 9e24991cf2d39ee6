#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Seeded synthetic conversations following the VBx generative story

Speaker s has y_s ~ N(0, I); frame t emits x_t = V y_{z_t} + noise with
V = sqrt(Phi). Speaker turns follow P(z_t = s | z_t-1 = s') =
(1 - P_stay) / S + [s == s'] P_stay. All randomness comes from numpy PCG64
generators derived with SeedSequence, one stream per conversation.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from typing import Dict, List, Optional, Tuple

import numpy as np

from src.app.dataio.ground_truth_builder import build_ground_truth
from src.app.losses.ground_truth import GroundTruth
from src.app.plda.transform import XVectorSequence
from src.app.scoring.segments import Segment, SegmentSet, frame_extents
from src.app.utils.errors import ConfigError

logger = logging.getLogger(__name__)

RNG_ALGORITHM = "PCG64"
SPLIT_KEYS = {"train": 1, "val": 2, "test": 3, "plda": 4}
RAW_MAP_KEY = 99
OVERLAP_SHARE = (0.2, 0.5)


@dataclass(frozen=True)
class SynthConfig:
    num_conversations: int = 32
    val_conversations: int = 16
    test_conversations: int = 16
    plda_speakers: int = 400
    plda_per_speaker: int = 20
    min_speakers: int = 2
    max_speakers: int = 4
    dim: int = 16
    phi_start: float = 10.0
    phi_decay: float = 0.8
    min_frames: int = 120
    max_frames: int = 240
    stay_prob: float = 0.9
    overlap_fraction: float = 0.0
    frame_step: float = 0.25
    window: float = 1.5
    noise_scale: float = 1.0
    raw_space: bool = False
    raw_mix_scale: float = 0.5
    raw_mean_scale: float = 2.0
    seed: int = 0

    def __post_init__(self):
        for name in ("stay_prob", "overlap_fraction"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ConfigError(f"{name} must lie in [0, 1], got {value}")
        if self.dim < 1:
            raise ConfigError(f"dim must be >= 1, got {self.dim}")
        if not 1 <= self.min_speakers <= self.max_speakers:
            raise ConfigError(f"need 1 <= min_speakers <= max_speakers, got {self.min_speakers}, {self.max_speakers}")
        if not 1 <= self.min_frames <= self.max_frames:
            raise ConfigError(f"need 1 <= min_frames <= max_frames, got {self.min_frames}, {self.max_frames}")
        for name in ("num_conversations", "val_conversations", "test_conversations"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be >= 0, got {getattr(self, name)}")
        if self.plda_speakers < 2 or self.plda_per_speaker < 2:
            raise ConfigError("plda_speakers and plda_per_speaker must be >= 2")
        if not (self.frame_step > 0 and self.window > 0):
            raise ConfigError("frame_step and window must be positive")
        if not (self.phi_start > 0 and 0 < self.phi_decay <= 1):
            raise ConfigError("phi_start must be positive and phi_decay in (0, 1]")
        if self.noise_scale < 0:
            raise ConfigError(f"noise_scale must be non-negative, got {self.noise_scale}")

    def split_size(self, split: str) -> int:
        """Conversation count of a split; num_conversations is the training count"""
        sizes = {"train": self.num_conversations, "val": self.val_conversations, "test": self.test_conversations}
        if split not in sizes:
            raise ConfigError(f"unknown split {split!r}")
        return sizes[split]

    def phi(self) -> np.ndarray:
        """Geometric between-speaker spectrum, non-increasing"""
        return self.phi_start * self.phi_decay ** np.arange(self.dim, dtype=np.float64)

    def to_dict(self) -> dict:
        return asdict(self)


def raw_space_map(cfg: SynthConfig) -> Tuple[np.ndarray, np.ndarray]:
    """Corpus-wide invertible map M and mean m0 (x_raw = x M + m0)"""
    rng = np.random.default_rng([cfg.seed, RAW_MAP_KEY])
    mix = np.eye(cfg.dim) + cfg.raw_mix_scale * rng.standard_normal((cfg.dim, cfg.dim)) / np.sqrt(cfg.dim)
    mean = cfg.raw_mean_scale * rng.standard_normal(cfg.dim)
    return mix, mean


def _to_output_space(x: np.ndarray, cfg: SynthConfig) -> np.ndarray:
    if cfg.raw_space:
        mix, mean = raw_space_map(cfg)
        x = x @ mix + mean[None, :]
    # files hold float32; quantize now so memory and disk agree
    return x.astype(np.float32).astype(np.float64)


def _turns(rng: np.random.Generator, num_frames: int, num_speakers: int, stay_prob: float) -> np.ndarray:
    z = np.empty(num_frames, dtype=np.int64)
    z[0] = rng.integers(num_speakers)
    for t in range(1, num_frames):
        z[t] = z[t - 1] if rng.random() < stay_prob else rng.integers(num_speakers)
    return z


def _segments_from_frames(
    utterance_id: str,
    lo: np.ndarray,
    hi: np.ndarray,
    owner: np.ndarray,
    second: np.ndarray,
    share: np.ndarray,
    names: List[str],
) -> SegmentSet:
    """Owner speaks over the whole frame extent, an overlapping speaker over its leading share"""
    pieces: List[Tuple[float, float, int]] = []
    for t in range(lo.shape[0]):
        pieces.append((float(lo[t]), float(hi[t]), int(owner[t])))
        if second[t] >= 0:
            pieces.append((float(lo[t]), float(lo[t] + share[t] * (hi[t] - lo[t])), int(second[t])))

    # merge touching pieces per speaker, then order by onset
    merged: Dict[int, List[List[float]]] = {}
    for start, end, spk in pieces:
        runs = merged.setdefault(spk, [])
        if runs and abs(runs[-1][1] - start) <= 1e-12:
            runs[-1][1] = end
        else:
            runs.append([start, end])
    segments = [
        Segment(start, end - start, names[spk]) for spk, runs in merged.items() for start, end in runs if end > start
    ]
    segments.sort(key=lambda s: (s.onset, s.speaker))
    return SegmentSet(recording_id=utterance_id, segments=segments)


def generate_conversation(
    cfg: SynthConfig, rng: np.random.Generator, utterance_id: str = "conv0000"
) -> Tuple[XVectorSequence, GroundTruth, SegmentSet]:
    """One synthetic conversation with its proportion labels and reference RTTM"""
    num_speakers = int(rng.integers(cfg.min_speakers, cfg.max_speakers + 1))
    num_frames = int(rng.integers(cfg.min_frames, cfg.max_frames + 1))
    loading = np.sqrt(cfg.phi())
    means = rng.standard_normal((num_speakers, cfg.dim)) * loading[None, :]

    owner = _turns(rng, num_frames, num_speakers, cfg.stay_prob)
    second = np.full(num_frames, -1, dtype=np.int64)
    share = np.zeros(num_frames)
    if num_speakers > 1 and cfg.overlap_fraction > 0:
        overlapped = rng.random(num_frames) < cfg.overlap_fraction
        for t in np.nonzero(overlapped)[0]:
            other = int(rng.integers(num_speakers - 1))
            second[t] = other + 1 if other >= owner[t] else other
            share[t] = rng.uniform(*OVERLAP_SHARE)

    centers = means[owner].copy()
    mixed = second >= 0
    if mixed.any():
        w = share[mixed][:, None]
        centers[mixed] = (means[owner[mixed]] + w * means[second[mixed]]) / (1.0 + w)
    noise = cfg.noise_scale * rng.standard_normal((num_frames, cfg.dim))
    x = _to_output_space(centers + noise, cfg)

    seq = XVectorSequence(
        raw=x,
        segment_starts=np.arange(num_frames, dtype=np.float64) * cfg.frame_step,
        segment_durations=np.full(num_frames, cfg.window),
        utterance_id=utterance_id,
    )
    names = [f"S{k}" for k in range(num_speakers)]
    lo, hi = frame_extents(seq)
    ref = _segments_from_frames(utterance_id, lo, hi, owner, second, share, names)
    gt = build_ground_truth(ref, seq, extent="frame")
    return seq, gt, ref


def split_rngs(cfg: SynthConfig, split: str, count: int) -> List[np.random.Generator]:
    """Independent per-conversation generators for one split"""
    if split not in SPLIT_KEYS:
        raise ConfigError(f"unknown split {split!r}")
    root = np.random.SeedSequence(entropy=cfg.seed, spawn_key=(SPLIT_KEYS[split],))
    return [np.random.Generator(np.random.PCG64(child)) for child in root.spawn(count)]


def generate_split(
    cfg: SynthConfig, split: str, count: Optional[int] = None, threads: int = 1
) -> List[Tuple[XVectorSequence, GroundTruth, SegmentSet]]:
    """Conversations <split>_0000 ... in order; identical for any thread count"""
    count = cfg.split_size(split) if count is None else count
    rngs = split_rngs(cfg, split, count)
    ids = [f"{split}_{i:04d}" for i in range(count)]

    def make(i: int):
        return generate_conversation(cfg, rngs[i], ids[i])

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            items = list(pool.map(make, range(count)))
    else:
        items = [make(i) for i in range(count)]
    logger.info("Generated %d %s conversations (%s, seed %d)", count, split, RNG_ALGORITHM, cfg.seed)
    return items


def generate_plda_corpus(
    cfg: SynthConfig, rng: np.random.Generator, num_speakers: int, per_speaker: int
) -> Tuple[np.ndarray, np.ndarray]:
    """Single-speaker vectors for generative PLDA pre-training

    Returns:
        (N x d vectors in the output space, length-N integer speaker labels)
    """
    if num_speakers < 1 or per_speaker < 1:
        raise ConfigError("num_speakers and per_speaker must be >= 1")
    loading = np.sqrt(cfg.phi())
    means = rng.standard_normal((num_speakers, cfg.dim)) * loading[None, :]
    labels = np.repeat(np.arange(num_speakers), per_speaker)
    x = means[labels] + cfg.noise_scale * rng.standard_normal((labels.shape[0], cfg.dim))
    return _to_output_space(x, cfg), labels


