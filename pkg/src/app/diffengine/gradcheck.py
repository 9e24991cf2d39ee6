#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Gradient check: reverse-mode gradients against central finite differences
"""

from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np

from src.app.diffengine.engine import PipelineConfig, default_step, finite_difference, forward_loss, value_and_grad
from src.app.diffengine.params import SLOTS, ParamSet
from src.app.init.ahc import HardLabels
from src.app.losses.ground_truth import GroundTruth
from src.app.plda.model import PLDAModel
from src.app.plda.transform import XVectorSequence
from src.app.utils.errors import ConfigError

REL_TOL = 1e-4
ABS_TOL = 1e-7


@dataclass(frozen=True)
class GradCheckRow:
    slot: str
    element: int
    analytic: float
    numeric: float
    step: float

    @property
    def abs_error(self) -> float:
        return abs(self.analytic - self.numeric)

    @property
    def rel_error(self) -> float:
        scale = max(abs(self.analytic), abs(self.numeric))
        return self.abs_error / scale if scale > 0 else 0.0

    @property
    def passed(self) -> bool:
        return self.rel_error <= REL_TOL or self.abs_error <= ABS_TOL


def gradient_check(
    params: ParamSet,
    seq: XVectorSequence,
    model: PLDAModel,
    init: HardLabels,
    gt: GroundTruth,
    cfg: PipelineConfig,
    slots: Optional[Sequence[str]] = None,
    max_elements: Optional[int] = None,
    rng: Optional[np.random.Generator] = None,
) -> List[GradCheckRow]:
    """Compare backward() with finite_difference() element by element

    Args:
        slots: slots to check (default: every trainable slot)
        max_elements: per-slot cap; a random subset is drawn from rng when exceeded
    """
    slots = list(slots) if slots else params.trainable_slots()
    unknown = [s for s in slots if s not in SLOTS]
    if unknown:
        raise ConfigError(f"unknown slots {unknown}")
    params = params.with_trainable(set(params.trainable_slots()) | set(slots))
    _, grads = value_and_grad(params, seq, model, init, gt, cfg)

    def loss_fn(p: ParamSet) -> float:
        return forward_loss(p, seq, model, init, gt, cfg)[0]

    rows = []
    for slot in slots:
        count = params.numel(slot)
        elements = np.arange(count)
        if max_elements is not None and count > max_elements:
            rng = rng if rng is not None else np.random.default_rng(0)
            elements = np.sort(rng.choice(count, size=max_elements, replace=False))
        flat = grads[slot].reshape(-1)
        for element in elements:
            element = int(element)
            step = default_step(params, slot, element)
            numeric = finite_difference(loss_fn, params, slot, element, step)
            rows.append(GradCheckRow(slot, element, float(flat[element]), numeric, step))
    return rows


def format_gradcheck_table(rows: List[GradCheckRow]) -> str:
    lines = [f"{'slot':<16}{'elem':>6}{'analytic':>16}{'numeric':>16}{'rel_err':>12}  ok"]
    for r in rows:
        mark = "✅" if r.passed else "❌"
        lines.append(
            f"{r.slot:<16}{r.element:>6}{r.analytic:>16.8e}{r.numeric:>16.8e}{r.rel_error:>12.2e}  {mark}"
        )
    return "\n".join(lines)
