#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Test the VB update equations, forward-backward and the unrolled inference loop
"""

from pathlib import Path
import itertools
import math
import sys
project_root = Path(__file__).parent.parent
sys.path.append(str(project_root))

import numpy as np
import pytest
import torch

from src.app.dataio.synth import SynthConfig, generate_split
from src.app.inference.forward_backward import forward_backward, gmm_responsibilities, hmm_responsibilities
from src.app.inference.types import HyperParams, Responsibilities, SpeakerPosteriors, SpeakerPriors
from src.app.inference.vb import (
    compute_elbo,
    expected_log_lik,
    kl_divergence,
    prune_speakers,
    run_inference,
    update_priors,
    update_speaker_posteriors,
    vb_iteration,
)
from src.app.plda.gevp import DTYPE, TransformedSpace
from src.app.plda.transform import TransformedSequence
from src.app.utils.errors import ConfigError, NumericError, ShapeError


def _t(values):
    return torch.tensor(values, dtype=DTYPE)


def _space(phi):
    phi = _t(phi)
    return TransformedSpace(transform=torch.eye(phi.shape[0], dtype=DTYPE), phi=phi)


def _seq(data):
    return TransformedSequence(data=_t(data), provenance="test")


def _two_speaker_data(seed=0, frames=200, dim=4, separation=4.0):
    """Two well-separated speakers in alternating blocks of 20 frames"""
    rng = np.random.default_rng(seed)
    phi = np.array([separation**2 / 2, 1.0, 0.5, 0.25][:dim])
    means = rng.standard_normal((2, dim)) * np.sqrt(phi)
    means[0, 0], means[1, 0] = separation, -separation
    truth = (np.arange(frames) // 20) % 2
    x = means[truth] + 0.3 * rng.standard_normal((frames, dim))
    return _seq(x), _space(phi.tolist()), truth


def _enumerated_posteriors(loglik, pi, loop):
    """Frame marginals and evidence by summing over every state sequence"""
    frames, speakers = loglik.shape
    trans = (1 - loop) * pi[None, :] + loop * np.eye(speakers)
    marginals = np.zeros((frames, speakers))
    evidence = 0.0
    for path in itertools.product(range(speakers), repeat=frames):
        p = pi[path[0]] * np.exp(loglik[0, path[0]])
        for t in range(1, frames):
            p *= trans[path[t - 1], path[t]] * np.exp(loglik[t, path[t]])
        evidence += p
        for t, s in enumerate(path):
            marginals[t, s] += p
    return marginals / evidence, evidence


def test_posterior_update_hand_values():
    print("Test 1: speaker posterior update")
    post = update_speaker_posteriors(Responsibilities(_t([[1.0]])), _seq([[1.0]]), _space([2.0]), 1.0, 1.0)
    assert float(post.precision[0, 0]) == pytest.approx(3.0), f"precision {post.precision}"
    assert float(post.alpha[0, 0]) == pytest.approx(math.sqrt(2.0) / 3.0, abs=1e-12), f"alpha {post.alpha}"


def test_posterior_update_unused_speaker_collapses_to_prior():
    gamma = Responsibilities(_t([[1.0, 0.0], [1.0, 0.0]]))
    post = update_speaker_posteriors(gamma, _seq([[1.0, 2.0], [-1.0, 0.5]]), _space([2.0, 1.0]), 0.4, 3.0)
    assert torch.equal(post.precision[1], torch.ones(2, dtype=DTYPE)), "unused speaker keeps unit precision"
    assert torch.equal(post.alpha[1], torch.zeros(2, dtype=DTYPE)), "unused speaker keeps zero mean"


def test_posterior_update_rejects_bad_input():
    gamma = Responsibilities(_t([[1.0], [1.0]]))
    with pytest.raises(ShapeError):
        update_speaker_posteriors(gamma, _seq([[1.0]]), _space([1.0]), 1.0, 1.0)
    with pytest.raises(NumericError):
        update_speaker_posteriors(gamma, _seq([[1.0], [float("nan")]]), _space([1.0]), 1.0, 1.0)


def test_expected_log_lik_hand_values():
    print("Test 2: expected log-likelihood")
    prior = SpeakerPosteriors(alpha=torch.zeros(1, 1, dtype=DTYPE), precision=torch.ones(1, 1, dtype=DTYPE))
    loglik = expected_log_lik(_seq([[0.3], [-2.0], [5.0]]), prior, _space([2.0]), 1.0)
    assert torch.allclose(loglik, torch.full((3, 1), -1.0, dtype=DTYPE)), f"got {loglik}"
    assert torch.count_nonzero(expected_log_lik(_seq([[0.3]]), prior, _space([2.0]), 0.0)) == 0

    post = SpeakerPosteriors(alpha=_t([[1.0]]), precision=_t([[2.0]]))
    value = float(expected_log_lik(_seq([[3.0]]), post, _space([1.0]), 1.0)[0, 0])
    assert value == pytest.approx(2.25, abs=1e-12), f"expected 2.25, got {value}"


def test_gmm_responsibilities_hand_values():
    print("Test 3: GMM responsibilities")
    rows = gmm_responsibilities(_t([[0.0, 0.0]]), SpeakerPriors(_t([0.75, 0.25]))).gamma
    assert torch.allclose(rows, _t([[0.75, 0.25]]))
    rows = gmm_responsibilities(_t([[1.0, 0.0]]), SpeakerPriors.uniform(2)).gamma
    e = math.e
    assert torch.allclose(rows, _t([[e / (e + 1), 1 / (e + 1)]]), atol=1e-12)
    rows = gmm_responsibilities(torch.full((4, 3), -7.0, dtype=DTYPE), SpeakerPriors.uniform(3)).gamma
    assert torch.allclose(rows, torch.full((4, 3), 1.0 / 3, dtype=DTYPE))


def test_dead_loglik_row_rejected():
    loglik = _t([[0.0, 1.0], [float("-inf"), float("-inf")]])
    with pytest.raises(NumericError):
        gmm_responsibilities(loglik, SpeakerPriors.uniform(2))
    with pytest.raises(NumericError):
        hmm_responsibilities(loglik, SpeakerPriors.uniform(2), 0.5)


def test_hmm_with_zero_loop_equals_gmm():
    print("Test 4: HMM with P_l = 0 is the GMM")
    rng = np.random.default_rng(4)
    loglik = _t(rng.standard_normal((12, 3)) * 3.0)
    priors = SpeakerPriors(_t([0.5, 0.3, 0.2]))
    gmm = gmm_responsibilities(loglik, priors).gamma
    full = forward_backward(loglik, priors, 0.0).gamma
    assert torch.allclose(full, gmm, atol=1e-12), "forward-backward must collapse to the GMM softmax"
    assert torch.equal(hmm_responsibilities(loglik, priors, 0.0).gamma, gmm)


def test_hmm_matches_brute_force_enumeration():
    print("Test 5: forward-backward against all 2^3 state sequences")
    rng = np.random.default_rng(5)
    loglik = rng.standard_normal((3, 2))
    pi = np.array([0.6, 0.4])
    loop = 0.5
    marginals, evidence = _enumerated_posteriors(loglik, pi, loop)

    result = forward_backward(_t(loglik), SpeakerPriors(_t(pi)), loop)
    assert np.allclose(result.gamma.numpy(), marginals, atol=1e-12), f"{result.gamma} vs {marginals}"
    assert float(result.total_log_lik) == pytest.approx(math.log(evidence), abs=1e-12)


def test_hmm_matches_enumeration_on_random_small_instances():
    print("Test 5b: forward-backward against enumeration for T <= 5, S <= 3")
    rng = np.random.default_rng(55)
    worst = 0.0
    for frames in range(1, 6):
        for speakers in range(1, 4):
            for _ in range(4):
                loglik = 2.0 * rng.standard_normal((frames, speakers))
                pi = rng.dirichlet(np.ones(speakers))
                loop = float(rng.uniform(0.0, 0.99))
                marginals, _ = _enumerated_posteriors(loglik, pi, loop)
                gamma = hmm_responsibilities(_t(loglik), SpeakerPriors(_t(pi)), loop).gamma.numpy()
                worst = max(worst, float(np.abs(gamma - marginals).max()))
    print(f"  worst deviation {worst:.3e}")
    assert worst <= 1e-10, f"forward-backward deviates from enumeration by {worst:.3e}"


def test_responsibilities_ignore_per_frame_offsets():
    print("Test 5c: adding a constant to a loglik row changes nothing")
    rng = np.random.default_rng(56)
    for _ in range(10):
        loglik = 2.0 * rng.standard_normal((8, 3))
        shifted = loglik + rng.normal(0.0, 50.0, size=(8, 1))
        priors = SpeakerPriors(_t(rng.dirichlet(np.ones(3))))
        loop = float(rng.uniform(0.0, 0.99))
        base, moved = gmm_responsibilities(_t(loglik), priors).gamma, gmm_responsibilities(_t(shifted), priors).gamma
        assert torch.allclose(base, moved, rtol=0, atol=1e-12), f"GMM gap {(base - moved).abs().max():.3e}"
        base = hmm_responsibilities(_t(loglik), priors, loop).gamma
        moved = hmm_responsibilities(_t(shifted), priors, loop).gamma
        assert torch.allclose(base, moved, rtol=0, atol=1e-12), f"HMM gap {(base - moved).abs().max():.3e}"


def test_hmm_symmetric_input_gives_uniform_rows():
    for loop in (0.0, 0.3, 0.99):
        gamma = hmm_responsibilities(torch.zeros(6, 4, dtype=DTYPE), SpeakerPriors.uniform(4), loop).gamma
        assert torch.allclose(gamma, torch.full((6, 4), 0.25, dtype=DTYPE), atol=1e-12), f"loop {loop}"


def test_update_priors_hand_values():
    print("Test 6: prior update")
    pi = update_priors(Responsibilities(_t([[1.0, 0.0], [1.0, 0.0], [0.0, 1.0]]))).pi
    assert torch.allclose(pi, _t([2 / 3, 1 / 3]))
    pi = update_priors(Responsibilities(torch.full((5, 4), 0.25, dtype=DTYPE))).pi
    assert torch.allclose(pi, torch.full((4,), 0.25, dtype=DTYPE))
    pi = update_priors(Responsibilities(_t([[0.0, 1.0, 0.0]]))).pi
    assert torch.equal(pi, _t([0.0, 1.0, 0.0]))


def test_kl_and_single_speaker_elbo():
    print("Test 7: KL term and single-speaker ELBO")
    prior = SpeakerPosteriors(alpha=torch.zeros(2, 3, dtype=DTYPE), precision=torch.ones(2, 3, dtype=DTYPE))
    assert float(kl_divergence(prior)) == 0.0, "KL of the prior against itself must be exactly 0"

    seq, space = _seq([[1.0, 0.5], [0.8, -0.2], [1.2, 0.1]]), _space([3.0, 1.0])
    gamma = Responsibilities(torch.ones(3, 1, dtype=DTYPE))
    hp = HyperParams(fa=0.7, fb=2.0)
    post = update_speaker_posteriors(gamma, seq, space, hp.fa, hp.fb)
    expected = float(expected_log_lik(seq, post, space, hp.fa).sum() - hp.fb * kl_divergence(post))
    elbo = compute_elbo(seq, gamma, post, SpeakerPriors(_t([1.0])), space, hp)
    assert elbo == pytest.approx(expected, abs=1e-10), f"{elbo} vs {expected}"


def test_single_iteration_contract():
    print("Test 8: max_iters = 1")
    seq, space, truth = _two_speaker_data()
    init = Responsibilities(torch.softmax(7.0 * torch.nn.functional.one_hot(torch.from_numpy(truth)).to(DTYPE), dim=1))
    hp = HyperParams(fa=0.5, fb=2.0, max_iters=1)
    trace = run_inference(seq, init, space, hp)
    assert trace.iterations_run == 1 and len(trace.per_iter_gamma) == 1 and len(trace.per_iter_elbo) == 1
    gamma, _, _, elbo = vb_iteration(seq, init, SpeakerPriors.uniform(2), space, hp)
    assert torch.equal(trace.final_gamma.gamma, gamma.gamma)
    assert trace.per_iter_elbo[0] == elbo


def test_recovers_well_separated_speakers():
    print("Test 9: two well-separated speakers")
    seq, space, truth = _two_speaker_data(seed=9)
    onehot = torch.nn.functional.one_hot(torch.from_numpy(truth), num_classes=2).to(DTYPE)
    init = Responsibilities(torch.softmax(1.0 * onehot, dim=1))
    for loop in (0.0, 0.9):
        trace = run_inference(seq, init, space, HyperParams(fa=1.0, fb=1.0, loop_prob=loop, max_iters=10))
        hard = trace.final_gamma.hard_labels().numpy()
        accuracy = float(np.mean(hard == truth))
        print(f"  loop {loop}: accuracy {accuracy:.4f}")
        assert accuracy >= 0.99, f"accuracy {accuracy:.4f} with loop_prob {loop}"


def test_elbo_non_decreasing_with_stopping():
    print("Test 10: ELBO monotonicity under the evaluation protocol")
    seq, space, _ = _two_speaker_data(seed=10, separation=2.0)
    rng = np.random.default_rng(10)
    init = Responsibilities(torch.softmax(_t(rng.standard_normal((seq.num_frames, 4))), dim=1))
    hp = HyperParams(fa=1.0, fb=1.0, max_iters=40, elbo_tol=0.0, use_elbo_stop=True)
    trace = run_inference(seq, init, space, hp)
    assert 1 <= trace.iterations_run <= 40
    elbo = np.array(trace.per_iter_elbo)
    steps = np.diff(elbo)
    assert np.all(steps >= -1e-8 * np.maximum(1.0, np.abs(elbo[1:]))), f"ELBO decreased: {steps.min():.3e}"


def test_elbo_non_decreasing_on_synthetic_conversations():
    print("Test 10b: ELBO over 40 iterations on 50 synthetic conversations")
    cfg = SynthConfig(num_conversations=50, dim=6, min_frames=40, max_frames=80, seed=31)
    space = TransformedSpace(transform=torch.eye(cfg.dim, dtype=DTYPE), phi=_t(cfg.phi()))
    rng = np.random.default_rng(31)
    hp = HyperParams(fa=1.0, fb=1.0, loop_prob=0.0, max_iters=40, use_elbo_stop=False)
    worst = 0.0
    for seq, _, _ in generate_split(cfg, "train"):
        tseq = TransformedSequence(data=_t(seq.raw), provenance=seq.utterance_id)
        init = Responsibilities(torch.softmax(_t(3.0 * rng.standard_normal((seq.num_frames, 5))), dim=1))
        trace = run_inference(tseq, init, space, hp)
        assert trace.iterations_run == 40, f"{seq.utterance_id}: stopped after {trace.iterations_run}"
        elbo = np.array(trace.per_iter_elbo)
        relative = np.diff(elbo) / np.maximum(1.0, np.abs(elbo[1:]))
        worst = min(worst, float(relative.min()))
    print(f"  largest relative decrease {-worst:.3e}")
    assert worst >= -1e-8, f"ELBO decreased by {-worst:.3e} (relative)"


def test_elbo_stop_ends_early_on_converged_data():
    seq, space, truth = _two_speaker_data(seed=11)
    onehot = torch.nn.functional.one_hot(torch.from_numpy(truth), num_classes=2).to(DTYPE)
    init = Responsibilities(torch.softmax(20.0 * onehot, dim=1))
    trace = run_inference(seq, init, space, HyperParams(max_iters=40, elbo_tol=1e-4, use_elbo_stop=True))
    assert trace.iterations_run < 40, "converged input should stop before the iteration cap"
    fixed = run_inference(seq, init, space, HyperParams(max_iters=5))
    assert fixed.iterations_run == 5, "without ELBO stopping all iterations run"


def test_run_inference_shape_mismatch():
    seq, space, _ = _two_speaker_data()
    with pytest.raises(ShapeError):
        run_inference(seq, Responsibilities(torch.full((3, 2), 0.5, dtype=DTYPE)), space, HyperParams())


def test_hyperparams_validation():
    with pytest.raises(ConfigError):
        HyperParams(fa=0.0)
    with pytest.raises(ConfigError):
        HyperParams(loop_prob=1.0)
    with pytest.raises(ConfigError):
        HyperParams(max_iters=0)
    hp = HyperParams().for_evaluation()
    assert hp.max_iters == 40 and hp.use_elbo_stop


def test_prune_speakers():
    print("Test 11: pruning negligible speakers")
    gamma = Responsibilities(_t([[0.7, 0.2999, 0.0001], [0.1, 0.8999, 0.0001], [0.0, 0.0, 1.0]]))
    priors = SpeakerPriors(_t([0.5, 0.4999, 0.0001]))
    pruned, kept_priors, keep = prune_speakers(gamma, priors)
    assert keep.tolist() == [0, 1], f"kept {keep.tolist()}"
    assert pruned.num_speakers == 2
    assert torch.allclose(pruned.gamma.sum(dim=1), torch.ones(3, dtype=DTYPE))
    assert pruned.gamma[2].tolist() == [1.0, 0.0], "row without mass goes to the largest prior"
    assert float(kept_priors.pi.sum()) == pytest.approx(1.0)


if __name__ == "__main__":
    print("\n" + "=" * 70)
    print("Testing VB inference")
    print("=" * 70 + "\n")
    sys.exit(pytest.main([__file__, "-v"]))
