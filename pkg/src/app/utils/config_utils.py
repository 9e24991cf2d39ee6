#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Config Utils - YAML configuration with environment overrides and typed sections

config.yaml holds one mapping per section (synth, inference, training,
scoring, gradcheck, paths, run). String values of the form ${VAR} are
replaced from the environment after load_dotenv(). Command-line overrides
are applied on top as "section.key" -> value and always win.
"""

import os
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import yaml
from dotenv import load_dotenv

from src.app.dataio.synth import SynthConfig
from src.app.training.config import TrainConfig
from src.app.utils.errors import ConfigError

load_dotenv()

PROJECT_ROOT = Path(__file__).parent.parent.parent.parent
DEFAULT_CONFIG = "config.yaml"


@dataclass(frozen=True)
class InferenceOptions:
    """Hyperparameter defaults for inference and the initial training point"""

    fa: float = 1.0
    fb: float = 1.0
    loop_prob: float = 0.9
    smoothing: float = 7.0
    calib: float = 1.0
    max_iters: int = 40
    elbo_tol: float = 1e-4
    ahc_threshold: float = 0.0
    max_speakers: int = 10
    prune: bool = True
    out_dim: Optional[int] = None

    def __post_init__(self):
        for name in ("fa", "fb", "smoothing", "calib"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"inference.{name} must be positive, got {getattr(self, name)}")
        if not 0.0 <= self.loop_prob < 1.0:
            raise ConfigError(f"inference.loop_prob must lie in [0, 1), got {self.loop_prob}")
        if self.max_iters < 1 or self.max_speakers < 1:
            raise ConfigError("inference.max_iters and inference.max_speakers must be >= 1")
        if self.out_dim is not None and self.out_dim < 1:
            raise ConfigError(f"inference.out_dim must be >= 1, got {self.out_dim}")


@dataclass(frozen=True)
class ScoringOptions:
    collar: float = 0.0

    def __post_init__(self):
        if self.collar < 0:
            raise ConfigError(f"scoring.collar must be non-negative, got {self.collar}")


@dataclass(frozen=True)
class GradCheckOptions:
    slots: List[str] = field(default_factory=list)
    max_elements: int = 4
    num_frames: int = 60
    num_speakers: int = 3
    dim: int = 6

    def __post_init__(self):
        object.__setattr__(self, "slots", [str(s) for s in (self.slots or [])])
        if min(self.max_elements, self.num_frames, self.num_speakers, self.dim) < 1:
            raise ConfigError("gradcheck sizes must be >= 1")


@dataclass(frozen=True)
class PathOptions:
    data_dir: str = "output/data"
    plda: str = ""
    checkpoint: str = ""
    init_rttm: str = ""
    out_dir: str = "output/runs"

    def plda_path(self) -> Path:
        return Path(self.plda) if self.plda else Path(self.data_dir) / "plda.bin"

    def manifest_path(self, split: str) -> Path:
        return Path(self.data_dir) / f"{split}.manifest"


@dataclass(frozen=True)
class RunOptions:
    seed: int = 0
    threads: int = 1
    split: str = "test"
    log: bool = False
    log_level: str = "INFO"

    def __post_init__(self):
        if self.threads < 1:
            raise ConfigError(f"run.threads must be >= 1, got {self.threads}")
        if str(self.log_level).upper() not in ("DEBUG", "INFO", "WARNING", "ERROR"):
            raise ConfigError(f"run.log_level must be DEBUG, INFO, WARNING or ERROR, got {self.log_level}")


# training keys filled from other sections
TRAIN_DERIVED = {
    "seed": ("run", "seed"),
    "threads": ("run", "threads"),
    "collar": ("scoring", "collar"),
    "ahc_threshold": ("inference", "ahc_threshold"),
    "max_speakers": ("inference", "max_speakers"),
    "prune": ("inference", "prune"),
    "eval_max_iters": ("inference", "max_iters"),
    "eval_elbo_tol": ("inference", "elbo_tol"),
}
SYNTH_DERIVED = {"seed": ("run", "seed")}

SECTIONS = {
    "synth": SynthConfig,
    "inference": InferenceOptions,
    "training": TrainConfig,
    "scoring": ScoringOptions,
    "gradcheck": GradCheckOptions,
    "paths": PathOptions,
    "run": RunOptions,
}
DERIVED = {"training": TRAIN_DERIVED, "synth": SYNTH_DERIVED}


def section_keys(section: str) -> List[str]:
    derived = DERIVED.get(section, {})
    return [f.name for f in fields(SECTIONS[section]) if f.name not in derived]


@dataclass(frozen=True)
class CliConfig:
    synth: SynthConfig
    inference: InferenceOptions
    training: TrainConfig
    scoring: ScoringOptions
    gradcheck: GradCheckOptions
    paths: PathOptions
    run: RunOptions

    def to_dict(self) -> Dict[str, Dict[str, Any]]:
        out = {}
        for section in SECTIONS:
            value = getattr(self, section)
            d = value.to_dict() if hasattr(value, "to_dict") else asdict(value)
            out[section] = {k: v for k, v in d.items() if k not in DERIVED.get(section, {})}
        return out


def _replace_env_vars(config):
    """Recursively replace ${VAR_NAME} with environment variable values."""
    if isinstance(config, dict):
        return {k: _replace_env_vars(v) for k, v in config.items()}
    if isinstance(config, list):
        return [_replace_env_vars(item) for item in config]
    if isinstance(config, str) and config.startswith("${") and config.endswith("}"):
        value = os.getenv(config[2:-1])
        if value is None:
            raise ConfigError(f"environment variable {config[2:-1]} is not set")
        return yaml.safe_load(value)
    return config


def load_config_from_yaml(config_path: Union[str, Path, None] = None) -> Dict[str, Any]:
    """Load configuration from YAML file.

    Args:
        config_path: explicit path (must exist), or None for config.yaml in the
            project root (optional)

    Returns:
        Dict of sections with environment placeholders resolved
    """
    explicit = config_path is not None
    path = Path(config_path) if explicit else PROJECT_ROOT / DEFAULT_CONFIG
    if not path.exists():
        if explicit:
            raise ConfigError(f"config file not found: {path}")
        print(f"⚠️ Config file {path} not found, using defaults")
        return {}
    try:
        with open(path, "r", encoding="utf-8") as f:
            config = yaml.safe_load(f) or {}
    except yaml.YAMLError as e:
        raise ConfigError(f"{path}: invalid YAML ({e})") from e
    if not isinstance(config, dict):
        raise ConfigError(f"{path}: top level must be a mapping of sections")
    return _replace_env_vars(config)


def _build(section: str, values: Dict[str, Any]):
    cls = SECTIONS[section]
    try:
        return cls(**values)
    except ConfigError:
        raise
    except (TypeError, ValueError) as e:
        raise ConfigError(f"{section}: {e}") from e


def resolve_cli_config(
    yaml_dict: Optional[Dict[str, Any]] = None, overrides: Optional[Dict[str, Any]] = None
) -> CliConfig:
    """Merge file values and "section.key" overrides into typed sections

    Unknown sections or keys raise ConfigError. Overrides whose value is None
    are ignored (flags not given on the command line).
    """
    merged: Dict[str, Dict[str, Any]] = {s: {} for s in SECTIONS}
    for section, values in (yaml_dict or {}).items():
        if section not in SECTIONS:
            raise ConfigError(f"unknown config section {section!r} (known: {', '.join(SECTIONS)})")
        if values is None:
            continue
        if not isinstance(values, dict):
            raise ConfigError(f"config section {section!r} must be a mapping")
        merged[section].update(values)
    for dotted, value in (overrides or {}).items():
        if value is None:
            continue
        section, _, key = dotted.partition(".")
        if section not in SECTIONS or not key:
            raise ConfigError(f"override {dotted!r} must look like section.key")
        merged[section][key] = value

    for section, values in merged.items():
        allowed = set(section_keys(section))
        unknown = sorted(set(values) - allowed)
        if unknown:
            raise ConfigError(f"unknown keys in section {section!r}: {unknown}")

    run = _build("run", merged["run"])
    scoring = _build("scoring", merged["scoring"])
    inference = _build("inference", merged["inference"])
    built = {"run": run, "scoring": scoring, "inference": inference}
    for section, derived in DERIVED.items():
        for key, (src_section, src_key) in derived.items():
            merged[section][key] = getattr(built[src_section], src_key)
    return CliConfig(
        synth=_build("synth", merged["synth"]),
        inference=inference,
        training=_build("training", merged["training"]),
        scoring=scoring,
        gradcheck=_build("gradcheck", merged["gradcheck"]),
        paths=_build("paths", merged["paths"]),
        run=run,
    )


def parse_override(text: str) -> Dict[str, Any]:
    """"section.key=value" with the value parsed as a YAML scalar"""
    key, sep, raw = text.partition("=")
    if not sep or not key.strip():
        raise ConfigError(f"override {text!r} must look like section.key=value")
    return {key.strip(): yaml.safe_load(raw)}


def format_config(cfg: CliConfig) -> str:
    return yaml.safe_dump(cfg.to_dict(), sort_keys=False, default_flow_style=False)
