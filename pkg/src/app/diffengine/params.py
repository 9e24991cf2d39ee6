#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Trainable parameter slots and their reparametrizations

    fa, fb            trained directly
    logit_loop_prob   P_l = sigmoid(.)
    log_smoothing     tau = exp(.)
    log_calib         tau_calib = exp(.)
    transform         E, trained directly
    log_phi           Phi = exp(.) elementwise
"""

import math
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, NamedTuple, Optional

import torch

from src.app.plda.gevp import DTYPE, TransformedSpace
from src.app.utils.errors import ConfigError, NumericError, ShapeError

SCALAR_SLOTS = ("fa", "fb", "logit_loop_prob", "log_smoothing", "log_calib")
MATRIX_SLOTS = ("transform", "log_phi")
SLOTS = SCALAR_SLOTS + MATRIX_SLOTS
HPARAM_SLOTS = ("fa", "fb", "logit_loop_prob", "log_smoothing", "log_calib")
PLDA_SLOTS = MATRIX_SLOTS

LOOP_PROB_CLIP = 1e-6


class NaturalParams(NamedTuple):
    fa: torch.Tensor
    fb: torch.Tensor
    loop_prob: torch.Tensor
    smoothing: torch.Tensor
    calib: torch.Tensor
    transform: torch.Tensor
    phi: torch.Tensor

    def space(self) -> TransformedSpace:
        return TransformedSpace(transform=self.transform, phi=self.phi)


@dataclass
class ParamSet:
    """Reparametrized values of every slot plus a trainable flag per slot"""

    values: Dict[str, torch.Tensor]
    trainable: Dict[str, bool] = field(default_factory=dict)

    def __post_init__(self):
        missing = [s for s in SLOTS if s not in self.values]
        unknown = [s for s in self.values if s not in SLOTS]
        if missing or unknown:
            raise ConfigError(f"ParamSet slots missing {missing}, unknown {unknown}")
        values = {}
        for slot in SLOTS:
            tensor = torch.as_tensor(self.values[slot], dtype=DTYPE)
            if slot in SCALAR_SLOTS and tensor.ndim != 0:
                raise ShapeError(f"slot {slot} must be a scalar, got shape {tuple(tensor.shape)}")
            values[slot] = tensor.detach().clone()
        if values["transform"].ndim != 2 or values["log_phi"].shape != (values["transform"].shape[1],):
            raise ShapeError(
                f"transform {tuple(values['transform'].shape)} and log_phi {tuple(values['log_phi'].shape)} disagree"
            )
        self.values = values
        self.trainable = {slot: bool(self.trainable.get(slot, False)) for slot in SLOTS}

    def copy(self) -> "ParamSet":
        return ParamSet(values={s: v.clone() for s, v in self.values.items()}, trainable=dict(self.trainable))

    def with_trainable(self, slots: Iterable[str]) -> "ParamSet":
        slots = set(slots)
        unknown = slots - set(SLOTS)
        if unknown:
            raise ConfigError(f"unknown slots {sorted(unknown)}")
        out = self.copy()
        out.trainable = {s: s in slots for s in SLOTS}
        return out

    def trainable_slots(self) -> List[str]:
        return [s for s in SLOTS if self.trainable[s]]

    def numel(self, slot: str) -> int:
        return int(self.values[slot].numel())

    def get(self, slot: str, element: int = 0) -> float:
        return float(self.values[slot].reshape(-1)[element])

    def shifted(self, slot: str, element: int, delta: float) -> "ParamSet":
        """Copy with one element of one slot moved by delta"""
        out = self.copy()
        flat = out.values[slot].reshape(-1).clone()
        flat[element] += delta
        out.values[slot] = flat.reshape(self.values[slot].shape)
        return out

    def summary(self) -> dict:
        nat = reparam_to_natural(self)
        return {
            "fa": float(nat.fa),
            "fb": float(nat.fb),
            "loop_prob": float(nat.loop_prob),
            "smoothing": float(nat.smoothing),
            "calib": float(nat.calib),
            "phi_max": float(nat.phi.max()),
            "phi_min": float(nat.phi.min()),
            "trainable": self.trainable_slots(),
        }


@dataclass
class GradientSet:
    """Per-slot partial derivatives, shape-congruent with a ParamSet"""

    grads: Dict[str, torch.Tensor]

    @classmethod
    def zeros_like(cls, params: ParamSet) -> "GradientSet":
        return cls(grads={s: torch.zeros_like(v) for s, v in params.values.items()})

    def __getitem__(self, slot: str) -> torch.Tensor:
        return self.grads[slot]

    def check_finite(self) -> None:
        for slot in SLOTS:
            if not bool(torch.isfinite(self.grads[slot]).all()):
                raise NumericError(f"non-finite gradient in slot {slot}")

    def scaled(self, factor: float) -> "GradientSet":
        return GradientSet(grads={s: g * factor for s, g in self.grads.items()})

    def __add__(self, other: "GradientSet") -> "GradientSet":
        return GradientSet(grads={s: self.grads[s] + other.grads[s] for s in SLOTS})

    @classmethod
    def mean(cls, items: List["GradientSet"]) -> "GradientSet":
        """Arithmetic mean, summed in list order"""
        if not items:
            raise ValueError("cannot average an empty list of gradients")
        total = items[0]
        for item in items[1:]:
            total = total + item
        return total.scaled(1.0 / len(items))

    def max_abs(self) -> Dict[str, float]:
        return {s: float(g.abs().max()) if g.numel() else 0.0 for s, g in self.grads.items()}


def reparam_to_natural(params: ParamSet, leaves: Optional[Dict[str, torch.Tensor]] = None) -> NaturalParams:
    """Map trainable storage to model values (sigmoid / exp where declared)

    leaves, when given, replaces params.values (used to attach autograd leaves).
    """
    v = leaves if leaves is not None else params.values
    return NaturalParams(
        fa=v["fa"],
        fb=v["fb"],
        loop_prob=torch.sigmoid(v["logit_loop_prob"]),
        smoothing=torch.exp(v["log_smoothing"]),
        calib=torch.exp(v["log_calib"]),
        transform=v["transform"],
        phi=torch.exp(v["log_phi"]),
    )


def natural_to_reparam(
    fa: float,
    fb: float,
    loop_prob: float,
    smoothing: float,
    calib: float,
    space: TransformedSpace,
    trainable: Optional[Iterable[str]] = None,
) -> ParamSet:
    """Inverse of reparam_to_natural

    loop_prob is clipped into [1e-6, 1 - 1e-6] so that its logit is finite;
    with the GMM path forced the value is never used.
    """
    for name, value in (("smoothing", smoothing), ("calib", calib)):
        if not value > 0:
            raise ConfigError(f"{name} must be positive, got {value}")
    p = min(max(float(loop_prob), LOOP_PROB_CLIP), 1.0 - LOOP_PROB_CLIP)
    values = {
        "fa": torch.tensor(float(fa), dtype=DTYPE),
        "fb": torch.tensor(float(fb), dtype=DTYPE),
        "logit_loop_prob": torch.tensor(math.log(p) - math.log1p(-p), dtype=DTYPE),
        "log_smoothing": torch.tensor(math.log(smoothing), dtype=DTYPE),
        "log_calib": torch.tensor(math.log(calib), dtype=DTYPE),
        "transform": space.transform.detach().clone(),
        "log_phi": torch.log(space.phi.detach()),
    }
    flags = {s: True for s in (trainable or ())}
    return ParamSet(values=values, trainable=flags)
