"""
Two-stage training, evaluation protocol and checkpoints
"""

from .checkpoint import Checkpoint, EpochRecord, read_checkpoint, write_checkpoint
from .config import Stage, TrainConfig, learning_rate, stage_slots
from .evaluation import DiarizationResult, diarize_conversation, evaluate_der, inference_hyperparams
from .optimizer import AdamOptimizer, adam_step
from .trainer import batch_gradient, initial_labels, run_two_stage, train_stage

__all__ = [
    "TrainConfig",
    "Stage",
    "stage_slots",
    "learning_rate",
    "AdamOptimizer",
    "adam_step",
    "Checkpoint",
    "EpochRecord",
    "read_checkpoint",
    "write_checkpoint",
    "DiarizationResult",
    "diarize_conversation",
    "evaluate_der",
    "inference_hyperparams",
    "batch_gradient",
    "initial_labels",
    "train_stage",
    "run_two_stage",
]
