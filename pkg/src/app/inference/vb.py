#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Variational Bayes updates for HMM/GMM clustering of x-vectors

One iteration: speaker posteriors q(y_s) from the current responsibilities,
expected per-frame log-likelihoods, new responsibilities, the lower bound
(evaluated with the priors the responsibilities used) and finally the priors.
All operations are torch functions of their inputs.
"""

import logging
from typing import Tuple

import torch

from src.app.inference.forward_backward import (
    check_loglik,
    forward_backward,
    gmm_responsibilities,
    hmm_prior_update,
)
from src.app.inference.types import (
    HyperParams,
    InferenceTrace,
    Responsibilities,
    Scalar,
    SpeakerPosteriors,
    SpeakerPriors,
    scalar_value,
)
from src.app.plda.gevp import TransformedSpace
from src.app.plda.transform import TransformedSequence
from src.app.utils.errors import NumericError, ShapeError

logger = logging.getLogger(__name__)

PRUNE_SCALE = 1e-3


def _require_finite(name: str, value: torch.Tensor) -> None:
    if not bool(torch.isfinite(value.detach()).all()):
        raise NumericError(f"{name} contains non-finite values")


def update_speaker_posteriors(
    gamma: Responsibilities,
    seq: TransformedSequence,
    space: TransformedSpace,
    fa: Scalar,
    fb: Scalar,
) -> SpeakerPosteriors:
    """L_s = I + (F_A/F_B) N_s Phi and alpha_s = (F_A/F_B) L_s^-1 V sum_t gamma_ts x_t"""
    x = seq.data
    if gamma.num_frames != x.shape[0]:
        raise ShapeError(f"{gamma.num_frames} responsibility rows for {x.shape[0]} frames")
    if x.shape[1] != space.out_dim:
        raise ShapeError(f"sequence dim {x.shape[1]} does not match space dim {space.out_dim}")
    _require_finite("transformed sequence", x)

    ratio = fa / fb
    counts = gamma.gamma.sum(dim=0)
    precision = 1.0 + ratio * counts[:, None] * space.phi[None, :]
    stats = gamma.gamma.T @ x
    alpha = ratio * stats * space.loading()[None, :] / precision
    _require_finite("speaker posterior mean", alpha)
    return SpeakerPosteriors(alpha=alpha, precision=precision)


def expected_log_lik(
    seq: TransformedSequence, post: SpeakerPosteriors, space: TransformedSpace, fa: Scalar
) -> torch.Tensor:
    """F_A [alpha_s' V x_t - 1/2 tr(Phi (L_s^-1 + alpha_s alpha_s'))], no constant term"""
    if post.alpha.shape[1] != seq.data.shape[1]:
        raise ShapeError(f"posterior dim {post.alpha.shape[1]} vs sequence dim {seq.data.shape[1]}")
    cross = (seq.data * space.loading()[None, :]) @ post.alpha.T
    penalty = 0.5 * (space.phi[None, :] * (1.0 / post.precision + post.alpha**2)).sum(dim=1)
    loglik = fa * (cross - penalty[None, :])
    _require_finite("expected log-likelihood", loglik)
    return loglik


def update_priors(gamma: Responsibilities) -> SpeakerPriors:
    """pi_s = responsibility mass of s / total mass"""
    mass = gamma.gamma.sum(dim=0)
    return SpeakerPriors(pi=mass / mass.sum())


def kl_divergence(post: SpeakerPosteriors) -> torch.Tensor:
    """Sum over speakers of KL(q(y_s) || N(0, I))"""
    p = post.precision
    return 0.5 * (1.0 / p + post.alpha**2 - 1.0 + torch.log(p)).sum()


def _data_term(loglik: torch.Tensor, priors: SpeakerPriors, loop_prob: Scalar) -> torch.Tensor:
    if scalar_value(loop_prob) == 0.0:
        check_loglik(loglik, priors)
        return torch.logsumexp(loglik + priors.log()[None, :], dim=1).sum()
    return forward_backward(loglik, priors, loop_prob).total_log_lik


def compute_elbo(
    seq: TransformedSequence,
    gamma: Responsibilities,
    post: SpeakerPosteriors,
    priors: SpeakerPriors,
    space: TransformedSpace,
    hp: HyperParams,
) -> float:
    """Scaled lower bound: data term minus F_B * KL(q(Y) || p(Y))

    The data term is the log evidence of the responsibility model (GMM
    log-sum-exp or HMM forward pass) under the expected log-likelihoods, which
    is the bound's value when gamma is the exact responsibility update for
    (post, priors).
    """
    if gamma.num_speakers != post.num_speakers or gamma.num_frames != seq.num_frames:
        raise ShapeError(
            f"gamma {gamma.num_frames}x{gamma.num_speakers} vs {seq.num_frames} frames, {post.num_speakers} speakers"
        )
    loglik = expected_log_lik(seq, post, space, hp.fa)
    elbo = _data_term(loglik, priors, hp.loop_prob) - hp.fb * kl_divergence(post)
    return scalar_value(elbo)


def vb_iteration(
    seq: TransformedSequence,
    gamma: Responsibilities,
    priors: SpeakerPriors,
    space: TransformedSpace,
    hp: HyperParams,
) -> Tuple[Responsibilities, SpeakerPosteriors, SpeakerPriors, float]:
    """One coordinate-ascent sweep; returns (gamma, posteriors, new priors, elbo)"""
    post = update_speaker_posteriors(gamma, seq, space, hp.fa, hp.fb)
    loglik = expected_log_lik(seq, post, space, hp.fa)
    kl = kl_divergence(post)
    if hp.is_gmm:
        new_gamma = gmm_responsibilities(loglik, priors)
        data = torch.logsumexp(loglik + priors.log()[None, :], dim=1).sum()
        elbo = scalar_value(data - hp.fb * kl)
        new_priors = update_priors(new_gamma)
    else:
        result = forward_backward(loglik, priors, hp.loop_prob)
        new_gamma = Responsibilities(gamma=result.gamma)
        elbo = scalar_value(result.total_log_lik - hp.fb * kl)
        new_priors = hmm_prior_update(loglik, priors, hp.loop_prob, result)
    return new_gamma, post, new_priors, elbo


def run_inference(
    seq: TransformedSequence,
    init_gamma: Responsibilities,
    space: TransformedSpace,
    hp: HyperParams,
) -> InferenceTrace:
    """Unrolled VB starting from init_gamma and uniform priors

    Runs hp.max_iters sweeps, or fewer when hp.use_elbo_stop is set and the
    lower bound improves by less than hp.elbo_tol. Columns are never removed.
    """
    if init_gamma.num_frames != seq.num_frames:
        raise ShapeError(f"init has {init_gamma.num_frames} rows for {seq.num_frames} frames")

    trace = InferenceTrace()
    gamma = init_gamma
    priors = SpeakerPriors.uniform(init_gamma.num_speakers)
    for iteration in range(int(hp.max_iters)):
        gamma, post, priors, elbo = vb_iteration(seq, gamma, priors, space, hp)
        trace.per_iter_gamma.append(gamma)
        trace.per_iter_elbo.append(elbo)
        trace.final_posteriors = post
        trace.final_priors = priors
        trace.iterations_run = iteration + 1

        if iteration > 0:
            improvement = elbo - trace.per_iter_elbo[-2]
            if improvement < 0 and abs(improvement) > 1e-8 * max(1.0, abs(elbo)):
                logger.warning("ELBO decreased by %.3e at iteration %d (%s)", -improvement, iteration, seq.provenance)
            if hp.use_elbo_stop and improvement < hp.elbo_tol:
                break

    logger.debug("%s: %d VB iterations, final ELBO %.6f", seq.provenance, trace.iterations_run, trace.per_iter_elbo[-1])
    return trace


def prune_speakers(
    gamma: Responsibilities, priors: SpeakerPriors, scale: float = PRUNE_SCALE
) -> Tuple[Responsibilities, SpeakerPriors, torch.Tensor]:
    """Drop speakers with pi_s < scale / S (evaluation only, not differentiable)

    Rows are renormalized over the kept speakers; a row with no mass left goes
    to the kept speaker with the largest prior.

    Returns:
        (pruned gamma, renormalized priors, kept column indices)
    """
    with torch.no_grad():
        pi = priors.pi.detach()
        num = pi.shape[0]
        keep = torch.nonzero(pi >= scale / num).flatten()
        if keep.numel() == 0:
            keep = torch.argmax(pi).reshape(1)
        kept = gamma.gamma.detach()[:, keep].clone()
        rows = kept.sum(dim=1)
        empty = rows <= 0
        if bool(empty.any()):
            kept[empty] = 0.0
            kept[empty, int(torch.argmax(pi[keep]))] = 1.0
            rows = kept.sum(dim=1)
        kept = kept / rows[:, None]
        kept_pi = pi[keep] / pi[keep].sum()
    if keep.numel() < num:
        logger.debug("Pruned %d of %d speakers", num - keep.numel(), num)
    return Responsibilities(gamma=kept), SpeakerPriors(pi=kept_pi), keep
