#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Test the differentiable pipeline: reparametrizations, reverse-mode gradients and finite differences
"""

from pathlib import Path
import sys
project_root = Path(__file__).parent.parent
sys.path.append(str(project_root))

import numpy as np
import pytest
import torch

from src.app.dataio.synth import SynthConfig, generate_plda_corpus, generate_split, split_rngs
from src.app.diffengine.engine import PipelineConfig, finite_difference, forward_loss, value_and_grad
from src.app.diffengine.gradcheck import GradCheckRow, format_gradcheck_table, gradient_check
from src.app.diffengine.params import SLOTS, GradientSet, ParamSet, natural_to_reparam, reparam_to_natural
from src.app.inference.types import HyperParams, Responsibilities
from src.app.inference.vb import run_inference
from src.app.init.ahc import relabel_by_first_occurrence
from src.app.losses.ground_truth import GroundTruth
from src.app.losses.pit import FrameLoss, averaged_loss
from src.app.plda.gevp import DTYPE, TransformedSpace, solve_gevp
from src.app.plda.model import pretrain_plda
from src.app.plda.transform import TransformedSequence, XVectorSequence
from src.app.utils.errors import ConfigError, ShapeError


def _instance(frames=20, speakers=3, dim=4, seed=5):
    """Small conversation, its PLDA model and a slightly wrong 3-cluster initialization"""
    cfg = SynthConfig(dim=dim, min_speakers=speakers, max_speakers=speakers, min_frames=frames,
                      max_frames=frames, stay_prob=0.8, seed=seed)
    seq, gt, _ = generate_split(cfg, "train", 1)[0]
    vectors, labels = generate_plda_corpus(cfg, split_rngs(cfg, "plda", 1)[0], 100, 10)
    model = pretrain_plda(vectors, labels)
    space = solve_gevp(model)
    truth = torch.argmax(gt.labels, dim=1).numpy().copy()
    truth[1] = (truth[1] + 1) % speakers
    truth[frames // 2] = (truth[frames // 2] + 2) % speakers
    init = relabel_by_first_occurrence(truth)
    return seq, gt, model, space, init


def _params(space, trainable=SLOTS):
    return natural_to_reparam(fa=0.6, fb=1.5, loop_prob=0.4, smoothing=3.0, calib=2.0, space=space,
                              trainable=trainable)


def _with_scalar(value):
    space = TransformedSpace(transform=torch.eye(2, dtype=DTYPE), phi=torch.ones(2, dtype=DTYPE))
    params = natural_to_reparam(fa=1.0, fb=1.0, loop_prob=0.5, smoothing=1.0, calib=1.0, space=space)
    params.values["fa"] = torch.tensor(value, dtype=DTYPE)
    return params


def test_reparametrization_examples():
    print("Test 1: reparametrizations")
    space = TransformedSpace(transform=torch.eye(3, dtype=DTYPE), phi=torch.tensor([3.0, 2.0, 1.0], dtype=DTYPE))
    params = natural_to_reparam(fa=0.3, fb=5.0, loop_prob=0.5, smoothing=1.0, calib=1.0, space=space)
    assert float(params.values["logit_loop_prob"]) == pytest.approx(0.0, abs=1e-15)
    assert float(params.values["log_smoothing"]) == 0.0
    nat = reparam_to_natural(params)
    assert float(nat.loop_prob) == 0.5 and float(nat.smoothing) == 1.0
    assert torch.allclose(nat.phi, space.phi, atol=1e-15)


def test_reparametrization_round_trip():
    rng = np.random.default_rng(1)
    space = TransformedSpace(transform=torch.eye(2, dtype=DTYPE), phi=torch.ones(2, dtype=DTYPE))
    for _ in range(200):
        loop = float(rng.uniform(1e-6, 1 - 1e-6))
        smoothing, calib = (float(10 ** rng.uniform(-6, 6)) for _ in range(2))
        nat = reparam_to_natural(natural_to_reparam(0.5, 2.0, loop, smoothing, calib, space))
        assert float(nat.loop_prob) == pytest.approx(loop, abs=1e-12)
        assert float(nat.smoothing) == pytest.approx(smoothing, rel=1e-12)
        assert float(nat.calib) == pytest.approx(calib, rel=1e-12)


def test_loop_prob_is_clipped():
    space = TransformedSpace(transform=torch.eye(1, dtype=DTYPE), phi=torch.ones(1, dtype=DTYPE))
    for loop in (0.0, 1.0):
        value = float(natural_to_reparam(1.0, 1.0, loop, 1.0, 1.0, space).values["logit_loop_prob"])
        assert np.isfinite(value), f"loop_prob {loop} must map to a finite logit"
    with pytest.raises(ConfigError):
        natural_to_reparam(1.0, 1.0, 0.5, 0.0, 1.0, space)


def test_param_set_validation():
    space = TransformedSpace(transform=torch.eye(2, dtype=DTYPE), phi=torch.ones(2, dtype=DTYPE))
    params = natural_to_reparam(1.0, 1.0, 0.5, 1.0, 1.0, space)
    values = dict(params.values)
    values["log_phi"] = torch.zeros(3, dtype=DTYPE)
    with pytest.raises(ShapeError):
        ParamSet(values=values)
    values = dict(params.values)
    del values["fa"]
    with pytest.raises(ConfigError):
        ParamSet(values=values)
    with pytest.raises(ConfigError):
        params.with_trainable(["nope"])
    moved = params.shifted("transform", 3, 0.5)
    assert float(moved.values["transform"][1, 1]) == 1.5 and float(params.values["transform"][1, 1]) == 1.0


def test_gradient_set_mean():
    space = TransformedSpace(transform=torch.eye(2, dtype=DTYPE), phi=torch.ones(2, dtype=DTYPE))
    params = natural_to_reparam(1.0, 1.0, 0.5, 1.0, 1.0, space)
    a = GradientSet.zeros_like(params)
    b = GradientSet(grads={s: torch.ones_like(v) * 3.0 for s, v in params.values.items()})
    mean = GradientSet.mean([a, b])
    assert float(mean["fa"]) == 1.5 and torch.equal(mean["transform"], torch.full((2, 2), 1.5, dtype=DTYPE))
    assert mean.max_abs()["log_phi"] == 1.5


def test_finite_difference_on_analytic_functions():
    print("Test 2: central differences")
    quadratic = finite_difference(lambda p: p.get("fa") ** 2, _with_scalar(3.0), "fa", h=1e-3)
    assert quadratic == pytest.approx(6.0, abs=1e-6)
    linear = finite_difference(lambda p: 4.0 * p.get("fa") - 1.0, _with_scalar(3.0), "fa", h=0.25)
    assert linear == pytest.approx(4.0, abs=1e-12)
    with pytest.raises(ConfigError):
        finite_difference(lambda p: 0.0, _with_scalar(1.0), "gain")
    with pytest.raises(ShapeError):
        finite_difference(lambda p: 0.0, _with_scalar(1.0), "fa", element=1)
    with pytest.raises(ConfigError):
        finite_difference(lambda p: 0.0, _with_scalar(1.0), "fa", h=0.0)


def test_forward_loss_is_deterministic():
    print("Test 3: determinism")
    seq, gt, model, space, init = _instance()
    cfg = PipelineConfig(unroll_iters=4, loss_kind="ede")
    first, _ = forward_loss(_params(space), seq, model, init, gt, cfg)
    second, _ = forward_loss(_params(space), seq, model, init, gt, cfg)
    assert first == second, "identical inputs must give bit-identical losses"
    report, _ = value_and_grad(_params(space), seq, model, init, gt, cfg)
    assert report.value == first


def test_forced_gmm_disconnects_loop_prob():
    print("Test 4: loop probability gradient under the forced GMM path")
    seq, gt, model, space, init = _instance()
    _, grads = value_and_grad(_params(space), seq, model, init, gt, PipelineConfig(unroll_iters=3, forced_gmm=True))
    assert float(grads["logit_loop_prob"]) == 0.0
    assert float(grads["fa"]) != 0.0, "fa should still receive a gradient"


def test_frozen_slots_get_zero_gradient():
    seq, gt, model, space, init = _instance()
    params = _params(space, trainable=["fa", "fb"])
    _, grads = value_and_grad(params, seq, model, init, gt, PipelineConfig(unroll_iters=2))
    for slot in ("logit_loop_prob", "log_smoothing", "log_calib", "transform", "log_phi"):
        assert torch.count_nonzero(grads[slot]) == 0, f"frozen slot {slot} got a gradient"


@pytest.mark.parametrize("loss_kind", ["ede-calib", "bce-calib"])
def test_gradient_check_all_slots(loss_kind):
    print(f"Test 5: gradient check ({loss_kind}, T=20, S=3, d'=4)")
    seq, gt, model, space, init = _instance()
    cfg = PipelineConfig(unroll_iters=3, loss_kind=loss_kind, forced_gmm=False)
    rows = gradient_check(_params(space), seq, model, init, gt, cfg, max_elements=5,
                          rng=np.random.default_rng(0))
    print(format_gradcheck_table(rows))
    assert {r.slot for r in rows} == set(SLOTS)
    failed = [r for r in rows if not r.passed]
    assert not failed, f"gradient check failed: {failed}"


@pytest.mark.slow
@pytest.mark.parametrize("loss_kind", ["bce", "ede", "bce-calib", "ede-calib"])
def test_gradient_check_twenty_seeds(loss_kind):
    print(f"Test 5b: gradient check over 20 seeds ({loss_kind}, 10 unrolled GMM iterations)")
    cfg = PipelineConfig(unroll_iters=10, loss_kind=loss_kind, forced_gmm=True)
    failed = []
    for seed in range(20):
        seq, gt, model, space, init = _instance(frames=20, speakers=3, dim=4, seed=seed)
        rows = gradient_check(_params(space), seq, model, init, gt, cfg, max_elements=5,
                              rng=np.random.default_rng(seed))
        assert {r.slot for r in rows} == set(SLOTS)
        failed += [(seed, r) for r in rows if not r.passed]
    assert not failed, f"gradient check failed: {failed}"


def test_smoothing_gradient_vanishes_at_uniform_start():
    print("Test 5c: loss is stationary in tau at the symmetric start")
    _, _, model, space, _ = _instance(frames=20, speakers=2, dim=4)
    direction = np.array([3.0, -1.0, 0.5, 2.0])
    blocks = (np.arange(20) // 5) % 2
    raw = model.mean[None, :] + np.where(blocks[:, None] == 0, 1.0, -1.0) * direction[None, :]
    seq = XVectorSequence(raw=raw, segment_starts=np.arange(20) * 0.25, segment_durations=np.full(20, 1.5),
                          utterance_id="symmetric")
    onehot = torch.nn.functional.one_hot(torch.from_numpy(blocks), num_classes=2).to(DTYPE)
    gt = GroundTruth(labels=onehot, speaker_names=["A", "B"])
    init = relabel_by_first_occurrence(blocks)
    params = natural_to_reparam(fa=0.6, fb=1.5, loop_prob=0.4, smoothing=1e-12, calib=2.0, space=space)
    for loss_kind in ("ede", "bce-calib"):
        _, grads = value_and_grad(params, seq, model, init, gt, PipelineConfig(unroll_iters=3, loss_kind=loss_kind))
        assert abs(float(grads["log_smoothing"])) <= 1e-9, f"{loss_kind}: {float(grads['log_smoothing']):.3e}"


def test_gradient_check_restricted_slots():
    seq, gt, model, space, init = _instance()
    rows = gradient_check(_params(space, trainable=[]), seq, model, init, gt, PipelineConfig(unroll_iters=2),
                          slots=["fa"])
    assert [r.slot for r in rows] == ["fa"] and rows[0].passed
    with pytest.raises(ConfigError):
        gradient_check(_params(space), seq, model, init, gt, PipelineConfig(), slots=["gain"])


def test_gradcheck_row_tolerances():
    assert GradCheckRow("fa", 0, 1.0, 1.00005, 1e-4).passed
    assert GradCheckRow("fa", 0, 1e-9, 5e-8, 1e-4).passed, "tiny values pass on the absolute tolerance"
    assert not GradCheckRow("fa", 0, 1.0, 1.01, 1e-4).passed
    assert "❌" in format_gradcheck_table([GradCheckRow("fb", 0, 1.0, 2.0, 1e-4)])


def test_unroll_depth_at_fixed_point():
    print("Test 6: extra iterations change nothing at a fixed point")
    rng = np.random.default_rng(6)
    truth = (np.arange(160) // 20) % 2
    means = np.array([[5.0, 0.0, 1.0], [-5.0, 0.5, -1.0]])
    x = means[truth] + 0.2 * rng.standard_normal((160, 3))
    seq_space = TransformedSpace(transform=torch.eye(3, dtype=DTYPE), phi=torch.tensor([12.0, 1.0, 1.0], dtype=DTYPE))
    tseq = TransformedSequence(data=torch.tensor(x, dtype=DTYPE), provenance="fixed")
    onehot = torch.nn.functional.one_hot(torch.from_numpy(truth), num_classes=2).to(DTYPE)
    init = Responsibilities(torch.softmax(2.0 * onehot, dim=1))
    converged = run_inference(tseq, init, seq_space, HyperParams(max_iters=40)).final_gamma

    gt = GroundTruth(labels=onehot, speaker_names=["A", "B"])
    depth1 = averaged_loss(run_inference(tseq, converged, seq_space, HyperParams(max_iters=1)), gt, FrameLoss.EDE)
    depth2 = averaged_loss(run_inference(tseq, converged, seq_space, HyperParams(max_iters=2)), gt, FrameLoss.EDE)
    assert abs(depth1.value - depth2.value) <= 1e-8, f"{depth1.value} vs {depth2.value}"


def test_pipeline_rejects_mismatched_init():
    seq, gt, model, space, init = _instance()
    short = relabel_by_first_occurrence(init.labels[:-1])
    with pytest.raises(ShapeError):
        forward_loss(_params(space), seq, model, short, gt, PipelineConfig())
    with pytest.raises(ConfigError):
        PipelineConfig(unroll_iters=0)


if __name__ == "__main__":
    print("\n" + "=" * 70)
    print("Testing the differentiable pipeline")
    print("=" * 70 + "\n")
    sys.exit(pytest.main([__file__, "-v"]))
