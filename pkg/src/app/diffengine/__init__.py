"""
Reverse-mode gradients through the unrolled diarization pipeline
"""

from .engine import (
    FD_SCALE,
    PipelineConfig,
    backward,
    default_step,
    finite_difference,
    forward_loss,
    value_and_grad,
)
from .gradcheck import ABS_TOL, REL_TOL, GradCheckRow, format_gradcheck_table, gradient_check
from .params import (
    HPARAM_SLOTS,
    MATRIX_SLOTS,
    PLDA_SLOTS,
    SCALAR_SLOTS,
    SLOTS,
    GradientSet,
    NaturalParams,
    ParamSet,
    natural_to_reparam,
    reparam_to_natural,
)

__all__ = [
    "SLOTS",
    "SCALAR_SLOTS",
    "MATRIX_SLOTS",
    "HPARAM_SLOTS",
    "PLDA_SLOTS",
    "FD_SCALE",
    "REL_TOL",
    "ABS_TOL",
    "ParamSet",
    "GradientSet",
    "NaturalParams",
    "PipelineConfig",
    "GradCheckRow",
    "reparam_to_natural",
    "natural_to_reparam",
    "forward_loss",
    "value_and_grad",
    "backward",
    "default_step",
    "finite_difference",
    "gradient_check",
    "format_gradcheck_table",
]
