#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Adam over ParamSet slots with one parameter group (and learning rate) per slot
"""

from typing import Dict, Optional

import torch

from src.app.diffengine.params import GradientSet, ParamSet
from src.app.training.config import TrainConfig, learning_rate
from src.app.utils.errors import NumericError

# F_A and F_B are trained directly; keep them strictly positive
POSITIVE_SLOTS = ("fa", "fb")
POSITIVE_FLOOR = 1e-6


class AdamOptimizer:
    """torch.optim.Adam on detached copies of the trainable slots"""

    def __init__(self, params: ParamSet, cfg: TrainConfig, state: Optional[dict] = None):
        self.params = params.copy()
        self.slots = params.trainable_slots()
        self.leaves: Dict[str, torch.Tensor] = {
            slot: self.params.values[slot].clone().requires_grad_(True) for slot in self.slots
        }
        groups = [{"params": [self.leaves[s]], "lr": learning_rate(s, cfg), "name": s} for s in self.slots]
        self.optimizer = torch.optim.Adam(groups, betas=cfg.betas, eps=cfg.eps) if groups else None
        if state is not None and self.optimizer is not None:
            self.optimizer.load_state_dict(state)

    def step(self, grads: GradientSet) -> ParamSet:
        """Apply one update and return the new parameters"""
        for slot in self.slots:
            if not bool(torch.isfinite(grads[slot]).all()):
                raise NumericError(f"non-finite gradient in slot {slot}")
        if self.optimizer is None:
            return self.params.copy()
        for slot in self.slots:
            self.leaves[slot].grad = grads[slot].detach().clone().reshape(self.leaves[slot].shape)
        self.optimizer.step()
        with torch.no_grad():
            for slot in self.slots:
                if slot in POSITIVE_SLOTS:
                    self.leaves[slot].clamp_(min=POSITIVE_FLOOR)
                self.params.values[slot] = self.leaves[slot].detach().clone()
        return self.params.copy()

    def state_dict(self) -> dict:
        return self.optimizer.state_dict() if self.optimizer is not None else {}

    def moments(self, slot: str) -> Dict[str, torch.Tensor]:
        """First and second moment estimates of a slot (empty before the first step)"""
        state = self.optimizer.state.get(self.leaves[slot], {}) if self.optimizer is not None else {}
        return {k: v.detach().clone() for k, v in state.items() if k in ("exp_avg", "exp_avg_sq")}


def adam_step(params: ParamSet, grads: GradientSet, optimizer: AdamOptimizer) -> ParamSet:
    """One Adam update of params (which must be the optimizer's current parameters)"""
    optimizer.params = params.copy()
    with torch.no_grad():
        for slot in optimizer.slots:
            optimizer.leaves[slot].copy_(params.values[slot])
    return optimizer.step(grads)
