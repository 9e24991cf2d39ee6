#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Visualization - training curves

Figures are rendered with the non-interactive Agg backend and saved as PNG.
"""

from pathlib import Path
from typing import Optional, Sequence, Union

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from src.app.training.checkpoint import EpochRecord  # noqa: E402
from src.app.utils.logging_utils import atomic_write_text  # noqa: E402

CSV_HEADER = "epoch,train_loss,val_der"


def format_training_curve(history: Sequence[EpochRecord]) -> str:
    """CSV with one row per epoch; epoch 0 has no training loss"""
    lines = [CSV_HEADER]
    for r in history:
        loss = "" if np.isnan(r.train_loss) else f"{r.train_loss:.8f}"
        lines.append(f"{r.epoch},{loss},{r.val_der:.6f}")
    return "\n".join(lines) + "\n"


def write_training_curve(path: Union[str, Path], history: Sequence[EpochRecord]) -> Path:
    return atomic_write_text(Path(path), format_training_curve(history))


def plot_training_curves(
    histories: Sequence[Sequence[EpochRecord]],
    labels: Sequence[str],
    output_path: Union[str, Path],
    title: Optional[str] = None,
) -> Path:
    """Training loss and validation DER over epochs, one line per run"""
    fig, (ax_loss, ax_der) = plt.subplots(2, 1, figsize=(8, 7), sharex=True)
    for history, label in zip(histories, labels):
        epochs = [r.epoch for r in history]
        losses = [r.train_loss for r in history]
        ders = [100.0 * r.val_der for r in history]
        ax_loss.plot(epochs, losses, label=label)
        ax_der.plot(epochs, ders, label=label)
    ax_loss.set_ylabel("training loss")
    ax_der.set_ylabel("validation DER (%)")
    ax_der.set_xlabel("epoch")
    for ax in (ax_loss, ax_der):
        ax.grid(True, alpha=0.3)
        ax.legend(loc="best")
    if title:
        fig.suptitle(title)

    output_path = Path(output_path)
    output_path.parent.mkdir(parents=True, exist_ok=True)
    plt.tight_layout()
    plt.savefig(output_path, dpi=150, bbox_inches="tight")
    plt.close(fig)
    return output_path

