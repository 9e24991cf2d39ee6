"""
Calibration, BCE / EDE frame losses and permutation-invariant wrapping
"""

from .frame_losses import BCE_EPS, bce_frame, bce_terms, calibrate, ede_frame, ede_terms
from .ground_truth import GroundTruth
from .pit import (
    FrameLoss,
    LossKind,
    LossReport,
    assignment_cost,
    averaged_loss,
    brute_force_assignment,
    hard_detection_error,
    pad_columns,
    pair_costs,
    pit_loss,
    solve_assignment,
)

__all__ = [
    "BCE_EPS",
    "GroundTruth",
    "FrameLoss",
    "LossKind",
    "LossReport",
    "calibrate",
    "bce_frame",
    "bce_terms",
    "ede_frame",
    "ede_terms",
    "pad_columns",
    "pair_costs",
    "assignment_cost",
    "solve_assignment",
    "brute_force_assignment",
    "pit_loss",
    "averaged_loss",
    "hard_detection_error",
]
