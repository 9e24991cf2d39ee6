#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Batch experiment runner for the end-to-end DVBx experiments on synthetic data

Experiments (fixed seed, all in memory):
    improvement   two-stage EDE training from fa = fb = 1 versus the untrained defaults (test DER)
    recovery      PLDA fine-tuning under a perturbed transform versus the unperturbed oracle
    correlation   Spearman rank correlation of per-epoch training loss and validation DER, EDE versus BCE

The corpus is deliberately mismatched: the PLDA model is estimated on vectors
with less within-speaker noise than the conversations, so F_A = F_B = 1 is
overconfident.

Usage:
    python src/scripts/run_dvbx_experiments.py
    python src/scripts/run_dvbx_experiments.py --epochs 10 --only correlation
    python src/scripts/run_dvbx_experiments.py --out-dir output/experiments --threads 4
"""

from pathlib import Path
import argparse
import json
import sys
import time
from dataclasses import replace

project_root = Path(__file__).parent.parent.parent
sys.path.append(str(project_root))

import numpy as np
from scipy.stats import spearmanr

from src.app.dataio.ground_truth_builder import speech_regions
from src.app.dataio.manifest import Conversation
from src.app.dataio.synth import SynthConfig, generate_plda_corpus, generate_split, split_rngs
from src.app.diffengine.params import natural_to_reparam, reparam_to_natural
from src.app.plda.gevp import perturb_transform, solve_gevp
from src.app.plda.model import pretrain_plda
from src.app.training.config import Stage, TrainConfig
from src.app.training.evaluation import evaluate_der
from src.app.training.trainer import run_two_stage, train_stage
from src.app.utils.logging_utils import atomic_write_text, configure_logging
from src.app.utils.visualization import plot_training_curves, write_training_curve

SEED = 20240611
EXPERIMENTS = ("improvement", "recovery", "correlation")

# Acceptance thresholds
MIN_RELATIVE_IMPROVEMENT = 0.20
MIN_RECOVERY = 0.50
MIN_EDE_SPEARMAN = 0.6

CORPUS = SynthConfig(
    num_conversations=64,
    val_conversations=32,
    test_conversations=32,
    min_speakers=2,
    max_speakers=4,
    dim=16,
    stay_prob=0.97,
    noise_scale=1.4,
    seed=SEED,
)
PLDA_NOISE_SCALE = 0.7
PERTURB_SCALE = 0.3


def build_corpus(threads: int):
    """Train / val / test conversations and the mismatched PLDA model"""
    splits = {}
    for split in ("train", "val", "test"):
        splits[split] = [
            Conversation(seq=seq, ref=ref, gt=gt, uem=speech_regions(ref))
            for seq, gt, ref in generate_split(CORPUS, split, threads=threads)
        ]
    plda_cfg = replace(CORPUS, noise_scale=PLDA_NOISE_SCALE)
    vectors, labels = generate_plda_corpus(
        plda_cfg, split_rngs(CORPUS, "plda", 1)[0], plda_cfg.plda_speakers, plda_cfg.plda_per_speaker
    )
    model = pretrain_plda(vectors, labels)
    return splits, model, solve_gevp(model)


def default_params(space):
    return natural_to_reparam(fa=1.0, fb=1.0, loop_prob=0.0, smoothing=7.0, calib=1.0, space=space)


def test_der(splits, params, model, cfg) -> float:
    total, _ = evaluate_der(splits["test"], params, model, cfg)
    return total.der


def run_improvement(splits, model, space, cfg, out_dir):
    print("\n" + "=" * 80)
    print("🔧 Experiment: two-stage EDE training versus untrained defaults")
    print("=" * 80)
    params0 = default_params(space)
    der_default = test_der(splits, params0, model, cfg)
    results = run_two_stage(splits["train"], splits["val"], params0, model, cfg)
    der_trained = test_der(splits, results[Stage.PLDA_FT.value].params, model, cfg)
    relative = (der_default - der_trained) / der_default if der_default > 0 else 0.0

    for stage, ckpt in results.items():
        write_training_curve(out_dir / f"improvement_{stage}.csv", ckpt.history)
    plot_training_curves([c.history for c in results.values()], list(results), out_dir / "improvement.png")
    nat = reparam_to_natural(results[Stage.HPARAMS.value].params)
    print(f"📊 learned fa {float(nat.fa):.4f}, fb {float(nat.fb):.4f}, smoothing {float(nat.smoothing):.4f}")
    print(f"📊 test DER: defaults {100 * der_default:.2f}%, trained {100 * der_trained:.2f}% "
          f"({100 * relative:.1f}% relative)")
    passed = relative >= MIN_RELATIVE_IMPROVEMENT
    print(f"{'✅' if passed else '❌'} relative improvement >= {100 * MIN_RELATIVE_IMPROVEMENT:.0f}%")
    return passed, {"der_default": der_default, "der_trained": der_trained, "relative_improvement": relative}, results


def run_recovery(splits, model, space, cfg, out_dir, hparams_params):
    print("\n" + "=" * 80)
    print("🔧 Experiment: PLDA fine-tuning under a perturbed transform")
    print("=" * 80)
    nat = reparam_to_natural(hparams_params)
    perturbed = perturb_transform(space, PERTURB_SCALE, np.random.default_rng([SEED, 7]))

    def with_space(s):
        return natural_to_reparam(
            fa=float(nat.fa), fb=float(nat.fb), loop_prob=float(nat.loop_prob),
            smoothing=float(nat.smoothing), calib=float(nat.calib), space=s,
        )

    der_oracle = test_der(splits, with_space(space), model, cfg)
    start = with_space(perturbed)
    der_perturbed = test_der(splits, start, model, cfg)
    best = train_stage(splits["train"], splits["val"], start, model, cfg, Stage.PLDA_FT)
    der_tuned = test_der(splits, best.params, model, cfg)
    write_training_curve(out_dir / "recovery_plda.csv", best.history)

    gap = der_perturbed - der_oracle
    recovery = (der_perturbed - der_tuned) / gap if gap > 0 else 1.0
    print(f"📊 test DER: oracle {100 * der_oracle:.2f}%, perturbed {100 * der_perturbed:.2f}%, "
          f"fine-tuned {100 * der_tuned:.2f}%")
    print(f"📊 recovered {100 * recovery:.1f}% of the gap")
    passed = recovery >= MIN_RECOVERY
    print(f"{'✅' if passed else '❌'} recovery >= {100 * MIN_RECOVERY:.0f}%")
    return passed, {
        "der_oracle": der_oracle, "der_perturbed": der_perturbed, "der_tuned": der_tuned, "recovery": recovery,
    }


def run_correlation(splits, model, space, cfg, out_dir, ede_history=None):
    print("\n" + "=" * 80)
    print("🔧 Experiment: training loss / validation DER rank correlation")
    print("=" * 80)
    params0 = default_params(space)
    correlations, histories = {}, {}
    for loss in ("ede", "bce"):
        if loss == "ede" and ede_history is not None:
            history = ede_history
        else:
            history = train_stage(
                splits["train"], splits["val"], params0, model, replace(cfg, loss_kind=loss), Stage.HPARAMS
            ).history
        epochs = [r for r in history if r.epoch > 0]
        rho = spearmanr([r.train_loss for r in epochs], [r.val_der for r in epochs])[0]
        correlations[loss] = 0.0 if np.isnan(rho) else float(rho)
        histories[loss] = history
        write_training_curve(out_dir / f"correlation_{loss}.csv", history)
        print(f"📊 {loss}: Spearman rho {correlations[loss]:.3f} over {len(epochs)} epochs")
    plot_training_curves(list(histories.values()), list(histories), out_dir / "correlation.png")
    passed = correlations["ede"] >= MIN_EDE_SPEARMAN and correlations["ede"] > correlations["bce"]
    print(f"{'✅' if passed else '❌'} EDE rho >= {MIN_EDE_SPEARMAN} and above BCE")
    return passed, {f"spearman_{k}": v for k, v in correlations.items()}


def main():
    """Run the synthetic DVBx experiments and exit non-zero if any check fails"""
    parser = argparse.ArgumentParser(
        description="Run the end-to-end DVBx experiments on a seeded synthetic corpus",
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument("--epochs", type=int, default=30, help="Epochs per training stage")
    parser.add_argument("--threads", type=int, default=1, help="Worker threads per batch / evaluation")
    parser.add_argument("--only", type=str, choices=EXPERIMENTS, default=None, help="Run a single experiment")
    parser.add_argument("--out-dir", type=str, default="output/experiments")
    parser.add_argument("--log-level", type=str, default="WARNING")
    args = parser.parse_args()

    configure_logging(args.log_level)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    cfg = TrainConfig(epochs=args.epochs, loss_kind="ede", seed=SEED, threads=args.threads)

    start = time.time()
    print(f"📝 Building synthetic corpus (seed {SEED})...")
    splits, model, space = build_corpus(args.threads)
    print(f"✅ {', '.join(f'{k}: {len(v)}' for k, v in splits.items())} conversations")

    selected = [args.only] if args.only else list(EXPERIMENTS)
    outcomes, report = {}, {}
    stage_results = None
    if "improvement" in selected or "recovery" in selected:
        passed, metrics, stage_results = run_improvement(splits, model, space, cfg, out_dir)
        if "improvement" in selected:
            outcomes["improvement"], report["improvement"] = passed, metrics
    if "recovery" in selected:
        hparams = stage_results[Stage.HPARAMS.value].params
        outcomes["recovery"], report["recovery"] = run_recovery(splits, model, space, cfg, out_dir, hparams)
    if "correlation" in selected:
        ede_history = stage_results[Stage.HPARAMS.value].history if stage_results is not None else None
        outcomes["correlation"], report["correlation"] = run_correlation(
            splits, model, space, cfg, out_dir, ede_history
        )

    elapsed = time.time() - start
    report["elapsed_seconds"] = round(elapsed, 1)
    atomic_write_text(out_dir / "report.json", json.dumps(report, indent=2) + "\n")
    print("\n" + "=" * 80)
    for name, passed in outcomes.items():
        print(f"  {'✅' if passed else '❌'} {name}")
    print(f"⏱️ {elapsed / 60:.1f} min, report: {out_dir / 'report.json'}")
    print("=" * 80)
    sys.exit(0 if all(outcomes.values()) else 1)


if __name__ == "__main__":
    main()
