#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Test configuration resolution and the main.py subcommands end to end
"""

from pathlib import Path
import sys
project_root = Path(__file__).parent.parent
sys.path.append(str(project_root))

import pytest
import yaml

from main import build_parser, collect_overrides, main
from src.app.training.config import Stage
from src.app.utils.config_utils import (
    CliConfig,
    format_config,
    load_config_from_yaml,
    parse_override,
    resolve_cli_config,
)
from src.app.utils.errors import ConfigError, DataFormatError, NumericError, exit_code_for
from src.app.utils.run_logger import MAX_RECORDS, RunLogger

TINY = [
    "--set", "synth.num_conversations=2",
    "--set", "synth.val_conversations=1",
    "--set", "synth.test_conversations=2",
    "--set", "synth.plda_speakers=60",
    "--set", "synth.plda_per_speaker=10",
    "--set", "synth.min_frames=30",
    "--set", "synth.max_frames=40",
    "--dim", "6",
]


@pytest.fixture
def workspace(tmp_path, monkeypatch):
    """Empty working directory with a config that keeps every output inside it"""
    monkeypatch.chdir(tmp_path)
    config = {
        "paths": {"data_dir": str(tmp_path / "data"), "out_dir": str(tmp_path / "runs")},
        "run": {"seed": 3, "log_level": "WARNING"},
    }
    path = tmp_path / "config.yaml"
    path.write_text(yaml.safe_dump(config))
    return tmp_path, ["--config", str(path)]


def test_defaults_and_derived_keys():
    print("Test 1: configuration defaults")
    cfg = resolve_cli_config({}, {})
    assert isinstance(cfg, CliConfig)
    assert cfg.training.stage is Stage.TWO_STAGE and cfg.training.loss_kind.value == "ede"
    assert cfg.inference.max_iters == 40 and cfg.training.eval_max_iters == 40
    cfg = resolve_cli_config({"run": {"seed": 7}, "scoring": {"collar": 0.25}}, {"inference.max_iters": 20})
    assert cfg.training.seed == 7 and cfg.synth.seed == 7
    assert cfg.training.collar == 0.25 and cfg.training.eval_max_iters == 20
    assert "seed" not in cfg.to_dict()["training"], "derived keys are not repeated"
    assert "stage: two-stage" in format_config(cfg)


def test_override_beats_file():
    cfg = resolve_cli_config({"inference": {"fa": 0.5}}, {"inference.fa": 0.2, "inference.fb": None})
    assert cfg.inference.fa == 0.2 and cfg.inference.fb == 1.0


def test_unknown_and_invalid_keys():
    with pytest.raises(ConfigError):
        resolve_cli_config({"inference": {"gain": 1.0}})
    with pytest.raises(ConfigError):
        resolve_cli_config({"decoder": {}})
    with pytest.raises(ConfigError):
        resolve_cli_config({}, {"training.seed": 4})
    with pytest.raises(ConfigError):
        resolve_cli_config({}, {"fa": 1.0})
    with pytest.raises(ConfigError):
        resolve_cli_config({"synth": {"overlap_fraction": 1.5}})
    with pytest.raises(ConfigError):
        resolve_cli_config({"inference": {"loop_prob": 1.0}})
    with pytest.raises(ConfigError):
        resolve_cli_config({"training": {"loss_kind": "mse"}})


def test_parse_override_values():
    assert parse_override("inference.fa=0.2") == {"inference.fa": 0.2}
    assert parse_override("inference.prune=false") == {"inference.prune": False}
    assert parse_override("gradcheck.slots=[fa, fb]") == {"gradcheck.slots": ["fa", "fb"]}
    with pytest.raises(ConfigError):
        parse_override("inference.fa")


def test_yaml_loading_and_environment(tmp_path, monkeypatch):
    print("Test 2: YAML file and ${VAR} substitution")
    path = tmp_path / "c.yaml"
    path.write_text("inference:\n  fa: ${DVBX_TEST_FA}\n")
    monkeypatch.setenv("DVBX_TEST_FA", "0.25")
    loaded = load_config_from_yaml(path)
    assert loaded == {"inference": {"fa": 0.25}}
    assert resolve_cli_config(loaded).inference.fa == 0.25
    monkeypatch.delenv("DVBX_TEST_FA")
    with pytest.raises(ConfigError):
        load_config_from_yaml(path)
    with pytest.raises(ConfigError):
        load_config_from_yaml(tmp_path / "missing.yaml")
    path.write_text("- just\n- a list\n")
    with pytest.raises(ConfigError):
        load_config_from_yaml(path)


def test_flags_map_to_config_keys():
    args = build_parser().parse_args(["infer", "--fa", "0.2", "--fb", "6", "--smoothing", "7", "--loop-prob", "0",
                                      "--no-prune", "--set", "scoring.collar=0.25"])
    overrides = collect_overrides(args)
    assert overrides["inference.fa"] == 0.2 and overrides["inference.fb"] == 6.0
    assert overrides["inference.loop_prob"] == 0.0 and overrides["inference.prune"] is False
    assert overrides["scoring.collar"] == 0.25
    cfg = resolve_cli_config({}, overrides)
    assert cfg.inference.smoothing == 7.0 and not cfg.training.prune


def test_exit_code_mapping():
    assert exit_code_for(ConfigError("x")) == 1
    assert exit_code_for(DataFormatError("x")) == 2
    assert exit_code_for(FileNotFoundError("x")) == 2
    assert exit_code_for(NumericError("x")) == 3
    assert exit_code_for(RuntimeError("x")) == 1


def test_run_history_is_capped(tmp_path):
    path = tmp_path / "history.json"
    for i in range(MAX_RECORDS + 5):
        run_logger = RunLogger(str(path))
        run_logger.start_run("score", {"run": {"seed": i}})
        run_logger.log_metric("der", 0.1)
        run_logger.end_run("failed" if i % 2 else "success", error="boom" if i % 2 else None)
    history = RunLogger(str(path)).history
    assert len(history) == MAX_RECORDS
    assert history[-1]["config"]["run"]["seed"] == MAX_RECORDS + 4
    assert history[-1]["metrics"] == {"der": 0.1} and history[-1]["status"] == "success"
    assert history[-2]["error"] == "boom"


def test_usage_errors_exit_one(workspace):
    print("Test 3: usage and configuration errors")
    _, common = workspace
    with pytest.raises(SystemExit) as info:
        main(["decode"])
    assert info.value.code == 1
    assert main(["synth", *common, "--overlap-fraction", "1.5"]) == 1
    assert main(["infer", *common, "--set", "inference.gain=2"]) == 1
    assert main(["train", *common, "--set", "bogus"]) == 1


def test_missing_plda_exits_two(workspace):
    tmp_path, common = workspace
    assert main(["infer", *common, "--plda", str(tmp_path / "none.plda")]) == 2


def test_synth_is_deterministic(workspace):
    print("Test 4: seeded synth")
    tmp_path, common = workspace
    assert main(["synth", *common, *TINY, "--data-dir", str(tmp_path / "a")]) == 0
    assert main(["synth", *common, *TINY, "--data-dir", str(tmp_path / "b")]) == 0
    for name in ("train.manifest", "val.manifest", "test.manifest", "plda.bin", "train/train_0001.xvec"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes(), name
    lines = [l for l in (tmp_path / "a" / "test.manifest").read_text().splitlines() if not l.startswith("#")]
    assert len(lines) == 2, "conversation count honored"
    assert (tmp_path / "output" / "logs" / "run_history.json").exists()


def test_end_to_end_pipeline(workspace):
    print("Test 5: synth -> infer -> score -> train -> grad-check")
    tmp_path, common = workspace
    runs = tmp_path / "runs"
    assert main(["synth", *common, *TINY]) == 0
    assert main(["infer", *common, "--fa", "0.2", "--fb", "6", "--smoothing", "7", "--loop-prob", "0"]) == 0
    assert (runs / "test.rttm").exists() and (runs / "rttm" / "test" / "test_0000.rttm").exists()

    assert main(["score", *common, "--collar", "0.25"]) == 0
    report = (runs / "der_test.tsv").read_text().strip().splitlines()
    assert report[-1].startswith("TOTAL") and len(report) == 4

    ref = str(tmp_path / "data" / "test" / "test_0000.rttm")
    assert main(["score", *common, "--ref", ref, "--hyp", ref]) == 0
    assert (runs / "der_test_0000.tsv").read_text().strip().endswith("0.000000")
    assert main(["score", *common, "--ref", ref]) == 1

    assert main(["train", *common, "--epochs", "1", "--batch-size", "2", "--unroll-iters", "2"]) == 0
    ckpt = runs / "checkpoints" / "plda.ckpt"
    assert ckpt.exists() and (runs / "checkpoints" / "hparams.ckpt").exists()
    assert (runs / "training_curve_hparams.csv").read_text().startswith("epoch,train_loss,val_der")
    assert main(["infer", *common, "--checkpoint", str(ckpt), "--split", "val"]) == 0
    assert (runs / "val.rttm").exists()

    assert main(["grad-check", *common, "--slot", "fa", "--slot", "fb"]) == 0
    table = (runs / "gradcheck.txt").read_text()
    assert "fa" in table and "fb" in table and "log_phi" not in table


if __name__ == "__main__":
    print("\n" + "=" * 70)
    print("Testing the command line")
    print("=" * 70 + "\n")
    sys.exit(pytest.main([__file__, "-v"]))
