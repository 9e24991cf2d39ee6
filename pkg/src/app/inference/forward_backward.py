#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Log-domain forward-backward for the speaker-turn HMM

Transition probability from s' to s is (1 - P_l) * pi_s + [s == s'] * P_l and
the initial distribution is pi. Everything stays in torch so gradients flow
through the recursions.
"""

from typing import NamedTuple

import torch

from src.app.inference.types import Responsibilities, Scalar, SpeakerPriors, scalar_value
from src.app.plda.gevp import DTYPE
from src.app.utils.errors import NumericError, ShapeError

TINY = torch.finfo(DTYPE).tiny


class ForwardBackwardResult(NamedTuple):
    gamma: torch.Tensor
    total_log_lik: torch.Tensor
    log_forward: torch.Tensor
    log_backward: torch.Tensor


def check_loglik(loglik: torch.Tensor, priors: SpeakerPriors) -> None:
    if loglik.ndim != 2 or loglik.shape[1] != priors.pi.shape[0]:
        raise ShapeError(f"loglik {tuple(loglik.shape)} does not match {priors.pi.shape[0]} priors")
    values = loglik.detach()
    if bool(torch.isnan(values).any()) or bool((values == float("inf")).any()):
        raise NumericError("loglik contains NaN or +inf")
    dead = torch.isneginf(values).all(dim=1)
    if bool(dead.any()):
        raise NumericError(f"loglik row {int(torch.nonzero(dead)[0])} is -inf for every speaker")


def log_transitions(priors: SpeakerPriors, loop_prob: Scalar) -> torch.Tensor:
    """S x S log transition matrix, rows indexed by the previous speaker"""
    num = priors.pi.shape[0]
    trans = (1.0 - loop_prob) * priors.pi[None, :] + loop_prob * torch.eye(num, dtype=DTYPE)
    return torch.log(trans.clamp_min(TINY))


def forward_backward(loglik: torch.Tensor, priors: SpeakerPriors, loop_prob: Scalar) -> ForwardBackwardResult:
    """Run both recursions and return state marginals plus the log evidence"""
    check_loglik(loglik, priors)
    log_trans = log_transitions(priors, loop_prob)
    num_frames = loglik.shape[0]

    forward = [loglik[0] + priors.log()]
    for t in range(1, num_frames):
        forward.append(loglik[t] + torch.logsumexp(forward[-1][:, None] + log_trans, dim=0))

    backward = [torch.zeros_like(loglik[0])]
    for t in range(num_frames - 2, -1, -1):
        backward.append(torch.logsumexp(log_trans + (loglik[t + 1] + backward[-1])[None, :], dim=1))
    backward.reverse()

    log_forward = torch.stack(forward)
    log_backward = torch.stack(backward)
    total = torch.logsumexp(log_forward[-1], dim=0)
    if not bool(torch.isfinite(total.detach())):
        raise NumericError("forward pass produced a non-finite total log-likelihood")
    gamma = torch.softmax(log_forward + log_backward, dim=1)
    return ForwardBackwardResult(gamma, total, log_forward, log_backward)


def gmm_responsibilities(loglik: torch.Tensor, priors: SpeakerPriors) -> Responsibilities:
    """Row-wise softmax of loglik + log pi"""
    check_loglik(loglik, priors)
    return Responsibilities(gamma=torch.softmax(loglik + priors.log()[None, :], dim=1))


def hmm_responsibilities(loglik: torch.Tensor, priors: SpeakerPriors, loop_prob: Scalar) -> Responsibilities:
    """Marginal speaker posteriors of the turn HMM

    With loop_prob == 0 the chain is i.i.d. with distribution pi and the GMM
    softmax is returned directly.
    """
    if scalar_value(loop_prob) == 0.0:
        return gmm_responsibilities(loglik, priors)
    return Responsibilities(gamma=forward_backward(loglik, priors, loop_prob).gamma)


def hmm_prior_update(
    loglik: torch.Tensor, priors: SpeakerPriors, loop_prob: Scalar, result: ForwardBackwardResult
) -> SpeakerPriors:
    """Generalized-EM update of pi for the turn HMM

    pi_s is proportional to the first-frame posterior plus the expected number
    of transitions drawn from the (1 - P_l) * pi branch into s.
    """
    log_switch = torch.log(((1.0 - loop_prob) * priors.pi).clamp_min(TINY))
    prev = torch.logsumexp(result.log_forward[:-1], dim=1)[:, None]
    switches = torch.exp(prev + result.log_backward[1:] + loglik[1:] + log_switch[None, :] - result.total_log_lik)
    mass = result.gamma[0] + switches.sum(dim=0)
    return SpeakerPriors(pi=mass / mass.sum())
