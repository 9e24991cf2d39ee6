#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Training checkpoints

Layout: 8-byte magic "DVBXCKPT", uint32 version, uint32 reserved, then a
torch.save payload holding the parameter tensors, histories and optimizer
state. Written atomically.
"""

import io
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Union

import torch

from src.app.diffengine.params import ParamSet
from src.app.utils.errors import DataFormatError
from src.app.utils.logging_utils import atomic_write_bytes

CKPT_MAGIC = b"DVBXCKPT"
CKPT_VERSION = 1
_HEADER = struct.Struct("<8sII")


@dataclass
class EpochRecord:
    epoch: int
    train_loss: float
    val_der: float


@dataclass
class Checkpoint:
    """Best parameters of a stage plus what is needed to resume it

    params / epoch / val_der describe the best epoch (ties keep the earlier
    one); current_params / current_epoch / optimizer_state the latest.
    """

    params: ParamSet
    epoch: int
    val_der: float
    stage: str
    history: List[EpochRecord] = field(default_factory=list)
    current_params: Optional[ParamSet] = None
    current_epoch: int = 0
    optimizer_state: dict = field(default_factory=dict)

    def loss_history(self) -> List[float]:
        return [r.train_loss for r in self.history]

    def der_history(self) -> List[float]:
        return [r.val_der for r in self.history]


def _pack_params(params: ParamSet) -> dict:
    return {"values": dict(params.values), "trainable": dict(params.trainable)}


def _unpack_params(d: dict) -> ParamSet:
    return ParamSet(values=d["values"], trainable=d["trainable"])


def encode_checkpoint(ckpt: Checkpoint) -> bytes:
    payload = {
        "params": _pack_params(ckpt.params),
        "epoch": int(ckpt.epoch),
        "val_der": float(ckpt.val_der),
        "stage": ckpt.stage,
        "history": [[r.epoch, r.train_loss, r.val_der] for r in ckpt.history],
        "current_params": _pack_params(ckpt.current_params) if ckpt.current_params is not None else None,
        "current_epoch": int(ckpt.current_epoch),
        "optimizer_state": ckpt.optimizer_state,
    }
    buffer = io.BytesIO()
    torch.save(payload, buffer)
    return _HEADER.pack(CKPT_MAGIC, CKPT_VERSION, 0) + buffer.getvalue()


def decode_checkpoint(payload: bytes, source: str = "<bytes>") -> Checkpoint:
    if len(payload) < _HEADER.size:
        raise DataFormatError(f"{source}: truncated checkpoint header")
    magic, version, _ = _HEADER.unpack_from(payload, 0)
    if magic != CKPT_MAGIC:
        raise DataFormatError(f"{source}: bad magic {magic!r}, expected {CKPT_MAGIC!r}")
    if version != CKPT_VERSION:
        raise DataFormatError(f"{source}: unsupported checkpoint version {version}")
    try:
        d = torch.load(io.BytesIO(payload[_HEADER.size :]), map_location="cpu", weights_only=True)
    except Exception as e:
        raise DataFormatError(f"{source}: unreadable checkpoint payload ({e})") from e
    try:
        return Checkpoint(
            params=_unpack_params(d["params"]),
            epoch=int(d["epoch"]),
            val_der=float(d["val_der"]),
            stage=str(d["stage"]),
            history=[EpochRecord(int(e), float(l), float(v)) for e, l, v in d["history"]],
            current_params=_unpack_params(d["current_params"]) if d["current_params"] is not None else None,
            current_epoch=int(d["current_epoch"]),
            optimizer_state=d["optimizer_state"],
        )
    except (KeyError, TypeError, ValueError) as e:
        raise DataFormatError(f"{source}: malformed checkpoint ({e})") from e


def write_checkpoint(path: Union[str, Path], ckpt: Checkpoint) -> Path:
    return atomic_write_bytes(Path(path), encode_checkpoint(ckpt))


def read_checkpoint(path: Union[str, Path]) -> Checkpoint:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"checkpoint not found: {path}")
    return decode_checkpoint(path.read_bytes(), str(path))
