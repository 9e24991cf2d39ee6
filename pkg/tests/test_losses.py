#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Test calibration, frame losses, the permutation-invariant loss and its averaging
"""

from pathlib import Path
import itertools
import sys
project_root = Path(__file__).parent.parent
sys.path.append(str(project_root))

import numpy as np
import pytest
import torch

from src.app.inference.types import InferenceTrace, Responsibilities
from src.app.losses.frame_losses import bce_frame, calibrate, ede_frame
from src.app.losses.ground_truth import GroundTruth
from src.app.losses.pit import (
    FrameLoss,
    LossKind,
    assignment_cost,
    averaged_loss,
    brute_force_assignment,
    hard_detection_error,
    pair_costs,
    pit_loss,
    solve_assignment,
)
from src.app.plda.gevp import DTYPE
from src.app.utils.errors import ConfigError, ShapeError


def _gamma(rows):
    return Responsibilities(torch.tensor(rows, dtype=DTYPE))


def _gt(rows, names=None):
    rows = torch.tensor(rows, dtype=DTYPE)
    return GroundTruth(labels=rows, speaker_names=names or [f"S{k}" for k in range(rows.shape[1])])


def test_calibration_examples():
    print("Test 1: calibration")
    uniform = calibrate(_gamma([[0.9, 0.1], [0.2, 0.8]]), 1e-9).gamma
    assert float((uniform - 0.5).abs().max()) < 1e-9
    row = calibrate(_gamma([[0.9, 0.1]]), 1.0).gamma[0]
    assert row.tolist() == pytest.approx([0.6900, 0.3100], abs=1e-4)
    sharp = calibrate(_gamma([[0.9, 0.1]]), 50.0).gamma[0]
    assert sharp.tolist() == pytest.approx([1.0, 0.0], abs=1e-8)
    with pytest.raises(ConfigError):
        calibrate(_gamma([[0.9, 0.1]]), 0.0)


def test_bce_examples():
    print("Test 2: binary cross-entropy")
    assert float(bce_frame([1.0, 0.0], [1.0, 0.0])) < 1e-6
    assert float(bce_frame([0.5, 0.5], [1.0, 0.0])) == pytest.approx(1.3863, abs=1e-4)
    assert float(bce_frame([0.5, 0.5], [0.5, 0.5])) == pytest.approx(1.3863, abs=1e-4)
    # soft targets are minimized at gamma = gt
    assert float(bce_frame([0.6, 0.4], [0.5, 0.5])) > float(bce_frame([0.5, 0.5], [0.5, 0.5]))
    with pytest.raises(ShapeError):
        bce_frame([0.5, 0.5], [1.0])


def test_ede_examples():
    print("Test 3: expected detection error")
    assert float(ede_frame([1.0, 0.0], [1.0, 0.0])) == 0.0
    assert float(ede_frame([0.9, 0.1], [1.0, 0.0])) == pytest.approx(0.2, abs=1e-12)
    assert float(ede_frame([0.9, 0.1], [0.0, 1.0])) == pytest.approx(1.8, abs=1e-12)


def test_pit_swap_example():
    print("Test 4: PIT chooses the swap")
    report = pit_loss(_gamma([[0.9, 0.1]]), _gt([[0.0, 1.0]]), FrameLoss.EDE)
    assert report.value == pytest.approx(0.1, abs=1e-12), f"value {report.value}"
    assert report.best_permutation == [1, 0]
    assert float(report.loss) == pytest.approx(report.value, abs=1e-15)


def test_pit_permutation_invariance():
    rng = np.random.default_rng(4)
    labels = np.eye(3)[rng.integers(3, size=30)]
    gt = _gt(labels.tolist())
    for perm in itertools.permutations(range(3)):
        report = pit_loss(_gamma(labels[:, perm].tolist()), gt, FrameLoss.EDE)
        assert report.value == 0.0, f"permutation {perm} gave {report.value}"
        assert report.best_permutation == [perm[i] for i in range(3)]


def test_pit_pads_missing_columns():
    print("Test 5: zero-padding the narrower side")
    gamma = _gamma([[0.5, 0.3, 0.2], [0.1, 0.1, 0.8]])
    report = pit_loss(gamma, _gt([[1.0], [0.0]]), FrameLoss.EDE)
    # reference padded to 3 columns: each unmatched predicted column costs its own mass
    expected = min(
        (1 - 0.5) + 0.1 + 0.3 + 0.1 + 0.2 + 0.8,
        0.5 + 0.1 + (1 - 0.3) + 0.1 + 0.2 + 0.8,
        0.5 + 0.1 + 0.3 + 0.1 + (1 - 0.2) + 0.8,
    ) / 6
    assert report.value == pytest.approx(expected, abs=1e-12), f"{report.value} vs {expected}"
    narrow = pit_loss(_gamma([[1.0], [1.0]]), _gt([[1.0, 0.0], [0.0, 1.0]]), FrameLoss.EDE)
    assert narrow.value == pytest.approx(2.0 / 4, abs=1e-12)


def test_hungarian_matches_brute_force():
    print("Test 6: Hungarian against all 120 permutations")
    rng = np.random.default_rng(6)
    for trial in range(20):
        cost = rng.random((5, 5)) * 10
        assignment = solve_assignment(cost)
        best_value, _ = brute_force_assignment(cost)
        assert assignment_cost(cost, assignment) == best_value, f"trial {trial}"

    gamma = Responsibilities(torch.softmax(torch.tensor(rng.standard_normal((25, 5)) * 2, dtype=DTYPE), dim=1))
    gt = _gt(np.eye(5)[rng.integers(5, size=25)].tolist())
    report = pit_loss(gamma, gt, FrameLoss.BCE)
    cost = pair_costs(gamma.gamma, gt.labels, FrameLoss.BCE).numpy()
    best_value, best = brute_force_assignment(cost)
    assert report.best_permutation == best
    assert report.value == pytest.approx(best_value / (25 * 5), rel=1e-12)


def test_pit_frame_mismatch():
    with pytest.raises(ShapeError):
        pit_loss(_gamma([[1.0, 0.0]]), _gt([[1.0, 0.0], [0.0, 1.0]]))


def test_calibration_saturates_towards_detection_error():
    print("Test 7: calibrated EDE approaches the hard detection error")
    rng = np.random.default_rng(7)
    truth = rng.integers(3, size=40)
    logits = 4.0 * np.eye(3)[truth] + rng.standard_normal((40, 3)) * 0.5
    # flip a few frames so the hard error is non-zero
    logits[:4] = np.roll(logits[:4], 1, axis=1)
    gamma = Responsibilities(torch.softmax(torch.tensor(logits, dtype=DTYPE), dim=1))
    gt = _gt(np.eye(3)[truth].tolist())

    hard = hard_detection_error(gamma, gt)
    assert hard == pytest.approx(8.0), f"four confused frames count twice, got {hard}"
    gaps = []
    for calib in (1.0, 10.0, 100.0, 1000.0):
        value = pit_loss(gamma, gt, FrameLoss.EDE, calib=calib).value * 40 * 3
        gaps.append(abs(value - hard))
    assert gaps == sorted(gaps, reverse=True), f"gap must shrink with calibration: {gaps}"
    assert gaps[-1] < 1e-6


def test_averaged_loss():
    print("Test 8: iteration averaging")
    gt = _gt([[1.0, 0.0]])
    trace = InferenceTrace(per_iter_gamma=[_gamma([[a, 1 - a]]) for a in (0.6, 0.8, 0.9)])
    report = averaged_loss(trace, gt, FrameLoss.EDE)
    assert report.per_iteration_values == pytest.approx([0.4, 0.2, 0.1], abs=1e-12)
    assert report.value == pytest.approx(0.7 / 3, abs=1e-12)
    assert float(report.loss) == pytest.approx(report.value, abs=1e-12)

    single = averaged_loss(InferenceTrace(per_iter_gamma=[_gamma([[0.8, 0.2]])]), gt)
    assert single.value == pit_loss(_gamma([[0.8, 0.2]]), gt).value
    with pytest.raises(ShapeError):
        averaged_loss(InferenceTrace(), gt)


def test_ede_gradient_is_one_minus_twice_label():
    print("Test 8b: EDE gradient with respect to gamma")
    gt_row = torch.tensor([1.0, 0.0, 0.5, 0.25], dtype=DTYPE)
    for values in ([0.7, 0.1, 0.1, 0.1], [0.0, 1.0, 0.0, 0.0], [0.25, 0.25, 0.25, 0.25]):
        gamma_row = torch.tensor(values, dtype=DTYPE, requires_grad=True)
        (grad,) = torch.autograd.grad(ede_frame(gamma_row, gt_row), gamma_row)
        assert torch.equal(grad, 1.0 - 2.0 * gt_row), f"gradient {grad.tolist()} at {values}"


@pytest.mark.parametrize("frame_loss,calib", [(FrameLoss.EDE, None), (FrameLoss.BCE, None), (FrameLoss.EDE, 3.0)])
def test_averaged_loss_gradient_is_mean_of_iteration_gradients(frame_loss, calib):
    rng = np.random.default_rng(8)
    logits = torch.tensor(rng.standard_normal((7, 3)), dtype=DTYPE, requires_grad=True)
    gt = _gt([[1.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 0.0], [0.0, 1.0], [0.0, 1.0], [1.0, 0.0]])

    def trace():
        gammas = [Responsibilities(torch.softmax(k * logits, dim=1)) for k in (0.5, 1.0, 2.0, 4.0)]
        return InferenceTrace(per_iter_gamma=gammas)

    (averaged,) = torch.autograd.grad(averaged_loss(trace(), gt, frame_loss, calib).loss, logits)
    per_iteration = [
        torch.autograd.grad(pit_loss(g, gt, frame_loss, calib).loss, logits)[0] for g in trace().per_iter_gamma
    ]
    expected = torch.stack(per_iteration).mean(dim=0)
    assert torch.allclose(averaged, expected, rtol=0, atol=1e-10), f"max gap {(averaged - expected).abs().max():.3e}"


def test_loss_gradient_flows_through_selected_pairs():
    logits = torch.tensor([[2.0, 0.0], [0.0, 2.0]], dtype=DTYPE, requires_grad=True)
    gamma = Responsibilities(torch.softmax(logits, dim=1))
    report = pit_loss(gamma, _gt([[1.0, 0.0], [0.0, 1.0]]), FrameLoss.EDE)
    report.loss.backward()
    assert logits.grad is not None
    assert float(logits.grad[0, 0]) < 0 and float(logits.grad[1, 1]) < 0, "raising the correct logit lowers the loss"


def test_loss_kind_parse():
    assert LossKind.parse("EDE-calib") is LossKind.EDE_CALIB
    assert LossKind.parse("bce").frame_loss is FrameLoss.BCE and not LossKind.BCE.calibrated
    with pytest.raises(ConfigError):
        LossKind.parse("mse")


def test_ground_truth_validation():
    with pytest.raises(ShapeError):
        GroundTruth(labels=torch.ones(2, 2, dtype=DTYPE), speaker_names=["A"])
    with pytest.raises(ShapeError):
        GroundTruth(labels=torch.full((1, 1), 1.5, dtype=DTYPE), speaker_names=["A"])
    gt = _gt([[1.0, 0.0]], names=["A", "B"]).permute([1, 0])
    assert gt.speaker_names == ["B", "A"] and gt.labels.tolist() == [[0.0, 1.0]]


if __name__ == "__main__":
    print("\n" + "=" * 70)
    print("Testing losses")
    print("=" * 70 + "\n")
    sys.exit(pytest.main([__file__, "-v"]))
