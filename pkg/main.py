#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
dvbx Main - single executable for synthetic data, inference, training, scoring and gradient checks

Configuration comes from config.yaml (or --config); command-line flags override
file values. Exit codes: 0 success, 1 usage/config error, 2 data/format error,
3 numeric failure.
"""

from pathlib import Path
import argparse
import sys

# Add project root to path
project_root = Path(__file__).parent
sys.path.append(str(project_root))

from dotenv import load_dotenv
load_dotenv()

from src.app.utils.banner import print_logo
from src.app.utils.config_utils import format_config, load_config_from_yaml, parse_override, resolve_cli_config
from src.app.utils.errors import ConfigError, exit_code_for
from src.app.utils.logging_utils import configure_logging, finalize_logging, setup_logging
from src.app.utils.run_logger import RunLogger
from src.tools.grad_check_tool import cmd_grad_check
from src.tools.infer_tool import cmd_infer
from src.tools.score_tool import cmd_score
from src.tools.synth_tool import cmd_synth
from src.tools.train_tool import cmd_train

# argparse dest -> config key
OVERRIDE_KEYS = {
    "seed": "run.seed",
    "threads": "run.threads",
    "split": "run.split",
    "log_level": "run.log_level",
    "out_dir": "paths.out_dir",
    "data_dir": "paths.data_dir",
    "plda": "paths.plda",
    "checkpoint": "paths.checkpoint",
    "init_rttm": "paths.init_rttm",
    "num_conversations": "synth.num_conversations",
    "val_conversations": "synth.val_conversations",
    "test_conversations": "synth.test_conversations",
    "overlap_fraction": "synth.overlap_fraction",
    "stay_prob": "synth.stay_prob",
    "dim": "synth.dim",
    "raw_space": "synth.raw_space",
    "fa": "inference.fa",
    "fb": "inference.fb",
    "loop_prob": "inference.loop_prob",
    "smoothing": "inference.smoothing",
    "calib": "inference.calib",
    "max_iters": "inference.max_iters",
    "ahc_threshold": "inference.ahc_threshold",
    "prune": "inference.prune",
    "out_dim": "inference.out_dim",
    "stage": "training.stage",
    "loss": "training.loss_kind",
    "epochs": "training.epochs",
    "batch_size": "training.batch_size",
    "unroll_iters": "training.unroll_iters",
    "lr_fa": "training.lr_fa",
    "lr_hparams": "training.lr_hparams",
    "lr_plda": "training.lr_plda",
    "forced_gmm": "training.forced_gmm",
    "gt_extent": "training.gt_extent",
    "collar": "scoring.collar",
    "slot": "gradcheck.slots",
    "max_elements": "gradcheck.max_elements",
}


class CliParser(argparse.ArgumentParser):
    """Usage errors exit with code 1"""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"❌ {self.prog}: error: {message}", file=sys.stderr)
        sys.exit(1)


def _common_flags() -> argparse.ArgumentParser:
    common = CliParser(add_help=False)
    common.add_argument("--config", type=str, default=None, help="YAML config file (default: config.yaml in the project root)")
    common.add_argument("--seed", type=int, default=None, help="Seed for every random stream")
    common.add_argument("--threads", type=int, default=None, help="Worker threads for per-conversation work")
    common.add_argument("--out-dir", type=str, default=None, help="Directory for run outputs")
    common.add_argument("--log", action="store_true", help="Tee console output into logs/console_<timestamp>.log")
    common.add_argument("--log-level", type=str, default=None, help="DEBUG, INFO, WARNING or ERROR")
    common.add_argument("--set", action="append", default=[], metavar="SECTION.KEY=VALUE", help="Override any config key")
    return common


def _hyperparameter_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--fa", type=float, default=None, help="Acoustic scaling factor F_A")
    parser.add_argument("--fb", type=float, default=None, help="Speaker regularization factor F_B")
    parser.add_argument("--loop-prob", type=float, default=None, help="HMM loop probability (0 = GMM)")
    parser.add_argument("--smoothing", type=float, default=None, help="Label smoothing temperature tau")
    parser.add_argument("--calib", type=float, default=None, help="Calibration temperature")


def build_parser() -> argparse.ArgumentParser:
    common = _common_flags()
    parser = CliParser(prog="main.py", description="Discriminatively trained VBx speaker diarization")
    sub = parser.add_subparsers(dest="command", metavar="{synth,infer,train,score,grad-check}")
    sub.required = True

    p = sub.add_parser("synth", parents=[common], help="Generate a seeded synthetic corpus and PLDA model")
    p.add_argument("--data-dir", type=str, default=None)
    p.add_argument("--num-conversations", type=int, default=None, help="Training conversations")
    p.add_argument("--val-conversations", type=int, default=None)
    p.add_argument("--test-conversations", type=int, default=None)
    p.add_argument("--overlap-fraction", type=float, default=None)
    p.add_argument("--stay-prob", type=float, default=None)
    p.add_argument("--dim", type=int, default=None)
    p.add_argument("--raw-space", action="store_const", const=True, default=None)
    p.add_argument("--out-dim", type=int, default=None, help="Projection dimension d' of the PLDA transform")

    p = sub.add_parser("infer", parents=[common], help="Diarize a split and write RTTM")
    p.add_argument("--data-dir", type=str, default=None)
    p.add_argument("--split", type=str, default=None)
    p.add_argument("--plda", type=str, default=None)
    p.add_argument("--checkpoint", type=str, default=None, help="Use trained parameters from a checkpoint")
    p.add_argument("--init-rttm", type=str, default=None, help="Initialize from RTTM instead of AHC")
    p.add_argument("--max-iters", type=int, default=None)
    p.add_argument("--ahc-threshold", type=float, default=None)
    p.add_argument("--no-prune", dest="prune", action="store_const", const=False, default=None)
    _hyperparameter_flags(p)

    p = sub.add_parser("train", parents=[common], help="Two-stage DVBx training")
    p.add_argument("--data-dir", type=str, default=None)
    p.add_argument("--plda", type=str, default=None)
    p.add_argument("--stage", type=str, default=None, help="two-stage, hparams, plda or joint")
    p.add_argument("--loss", type=str, default=None, help="bce, bce-calib, ede or ede-calib")
    p.add_argument("--epochs", type=int, default=None)
    p.add_argument("--batch-size", type=int, default=None)
    p.add_argument("--unroll-iters", type=int, default=None)
    p.add_argument("--lr-fa", type=float, default=None)
    p.add_argument("--lr-hparams", type=float, default=None)
    p.add_argument("--lr-plda", type=float, default=None)
    p.add_argument("--trainable-loop-prob", dest="forced_gmm", action="store_const", const=False, default=None)
    p.add_argument("--gt-extent", type=str, default=None, help="window or frame")
    p.add_argument("--collar", type=float, default=None, help="Collar of the validation DER")
    p.add_argument("--resume", type=str, default=None, help="Continue from a checkpoint")
    _hyperparameter_flags(p)

    p = sub.add_parser("score", parents=[common], help="DER of hypothesis RTTM against reference")
    p.add_argument("--data-dir", type=str, default=None)
    p.add_argument("--split", type=str, default=None)
    p.add_argument("--ref", type=str, default=None)
    p.add_argument("--hyp", type=str, default=None)
    p.add_argument("--uem", type=str, default=None)
    p.add_argument("--collar", type=float, default=None)

    p = sub.add_parser("grad-check", parents=[common], help="Compare gradients with finite differences")
    p.add_argument("--slot", action="append", default=None, help="Slot to check (repeatable)")
    p.add_argument("--max-elements", type=int, default=None)
    p.add_argument("--loss", type=str, default=None)
    p.add_argument("--trainable-loop-prob", dest="forced_gmm", action="store_const", const=False, default=None)
    _hyperparameter_flags(p)
    return parser


def collect_overrides(args: argparse.Namespace) -> dict:
    overrides = {}
    for dest, key in OVERRIDE_KEYS.items():
        value = getattr(args, dest, None)
        if value is not None:
            overrides[key] = value
    for item in args.set:
        overrides.update(parse_override(item))
    return overrides


def dispatch(cfg, args):
    if args.command == "synth":
        return cmd_synth(cfg)
    if args.command == "infer":
        return cmd_infer(cfg)
    if args.command == "train":
        return cmd_train(cfg, resume=args.resume)
    if args.command == "score":
        if bool(args.ref) != bool(args.hyp):
            raise ConfigError("--ref and --hyp must be given together")
        return cmd_score(cfg, ref=args.ref, hyp=args.hyp, uem=args.uem)
    return cmd_grad_check(cfg)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = resolve_cli_config(load_config_from_yaml(args.config), collect_overrides(args))
    except ConfigError as e:
        print(f"❌ Configuration error: {e}", file=sys.stderr)
        return 1

    configure_logging(cfg.run.log_level)
    args.log = args.log or cfg.run.log
    log_file, start_time = setup_logging(args)
    print_logo()
    print("=" * 80)
    print(f"📝 {args.command}: resolved configuration")
    print("=" * 80)
    print(format_config(cfg))

    run_logger = RunLogger()
    run_logger.start_run(args.command, cfg.to_dict())
    interrupted = False
    code = 0
    try:
        result = dispatch(cfg, args)
        for name, value in result.metrics.items():
            run_logger.log_metric(name, value)
        print(f"✅ {result.message}")
        run_logger.end_run("success")
    except KeyboardInterrupt:
        interrupted = True
        code = 130
        print("⚠️ Interrupted")
        run_logger.end_run("interrupted")
    except Exception as e:
        code = exit_code_for(e)
        print(f"❌ {type(e).__name__}: {e}", file=sys.stderr)
        run_logger.end_run("failed", error=f"{type(e).__name__}: {e}")
    finalize_logging(log_file, start_time, interrupted)
    return code


if __name__ == "__main__":
    sys.exit(main())
