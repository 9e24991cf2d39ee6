"""
PLDA model, generalized eigenvalue diagonalization and x-vector projection
"""

from .gevp import DTYPE, PHI_FLOOR, TransformedSpace, perturb_transform, solve_gevp
from .model import PLDAModel, pretrain_plda, regularize_within
from .plda_io import decode_plda, encode_plda, read_plda, write_plda
from .transform import TransformedSequence, XVectorSequence, transform_sequence

__all__ = [
    "DTYPE",
    "PHI_FLOOR",
    "PLDAModel",
    "TransformedSpace",
    "XVectorSequence",
    "TransformedSequence",
    "pretrain_plda",
    "regularize_within",
    "solve_gevp",
    "perturb_transform",
    "transform_sequence",
    "encode_plda",
    "decode_plda",
    "read_plda",
    "write_plda",
]
