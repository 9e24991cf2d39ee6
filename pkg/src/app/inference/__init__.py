"""
Unrolled variational Bayes inference for one conversation
"""

from .forward_backward import (
    ForwardBackwardResult,
    forward_backward,
    gmm_responsibilities,
    hmm_prior_update,
    hmm_responsibilities,
)
from .types import (
    EVAL_MAX_ITERS,
    TRAIN_MAX_ITERS,
    HyperParams,
    InferenceTrace,
    Responsibilities,
    SpeakerPosteriors,
    SpeakerPriors,
    scalar_value,
)
from .vb import (
    compute_elbo,
    expected_log_lik,
    kl_divergence,
    prune_speakers,
    run_inference,
    update_priors,
    update_speaker_posteriors,
    vb_iteration,
)

__all__ = [
    "EVAL_MAX_ITERS",
    "TRAIN_MAX_ITERS",
    "HyperParams",
    "Responsibilities",
    "SpeakerPosteriors",
    "SpeakerPriors",
    "InferenceTrace",
    "ForwardBackwardResult",
    "scalar_value",
    "update_speaker_posteriors",
    "expected_log_lik",
    "forward_backward",
    "hmm_responsibilities",
    "gmm_responsibilities",
    "update_priors",
    "hmm_prior_update",
    "kl_divergence",
    "compute_elbo",
    "vb_iteration",
    "run_inference",
    "prune_speakers",
]
