"""Experiment configuration: one TOML file plus ``section.key=value`` overrides."""

from __future__ import annotations

import hashlib
import json
import sys
from dataclasses import dataclass, field, fields, is_dataclass, replace
from pathlib import Path
from typing import Any

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .predictor import PredictorSpec, SyntheticConfig
from .prosody import ProsodyConfig
from .stimulus import FillerCriteria, StimulusLayout, YnqCriteria
from .synth import SynthConfig


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    corpus: str | None = None
    output_dir: str | None = None
    seed: int = 0
    frame_rate: float = 50.0
    parallelism: int = 1
    threshold: float = 0.5
    exclusion_mode: str = "silence"
    min_cox_events: int = 10
    traces: int = 0
    write_stimuli: bool = False
    predictor: PredictorSpec = field(default_factory=PredictorSpec)
    filler: FillerCriteria = field(default_factory=FillerCriteria)
    ynq: YnqCriteria = field(default_factory=YnqCriteria)
    layout: StimulusLayout = field(default_factory=StimulusLayout)
    prosody: ProsodyConfig = field(default_factory=ProsodyConfig)
    synth: SynthConfig = field(default_factory=SynthConfig)

    def __post_init__(self):
        for name in ("frame_rate", "threshold", "parallelism"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be positive")
        positive = [("filler", self.filler, ("min_duration", "min_pause_after", "listener_isolation", "min_context")),
                    ("ynq", self.ynq, ("min_pause_after", "listener_isolation", "min_context", "max_shift_time")),
                    ("layout", self.layout, ("context_len", "silence_len"))]
        for sect, obj, names in positive:
            for n in names:
                if not getattr(obj, n) > 0:
                    raise ConfigError(f"{sect}.{n} must be positive")
        if self.exclusion_mode not in ("silence", "excise"):
            raise ConfigError("exclusion_mode must be 'silence' or 'excise'")
        if self.predictor.frame_rate != self.frame_rate:
            object.__setattr__(self, "predictor", replace(self.predictor, frame_rate=self.frame_rate))


def _plain(obj):
    if is_dataclass(obj):
        return {f.name: _plain(getattr(obj, f.name)) for f in fields(obj)}
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in sorted(obj.items())}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    return obj


def config_dict(cfg: ExperimentConfig) -> dict:
    return _plain(cfg)


def config_hash(cfg: ExperimentConfig) -> str:
    blob = json.dumps(config_dict(cfg), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def _build(cls, data: dict, where: str):
    known = {f.name: f for f in fields(cls)}
    kwargs = {}
    for k, v in data.items():
        if k not in known:
            raise ConfigError(f"unknown config key {where}{k}")
        sub = _NESTED.get((cls, k))
        if sub is not None:
            if not isinstance(v, dict):
                raise ConfigError(f"{where}{k} must be a table")
            v = _build(sub, v, f"{where}{k}.")
        elif isinstance(v, list):
            v = tuple(v)
        kwargs[k] = v
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{where or 'config'}: {exc}") from None


_NESTED = {
    (ExperimentConfig, "predictor"): PredictorSpec,
    (ExperimentConfig, "filler"): FillerCriteria,
    (ExperimentConfig, "ynq"): YnqCriteria,
    (ExperimentConfig, "layout"): StimulusLayout,
    (ExperimentConfig, "prosody"): ProsodyConfig,
    (ExperimentConfig, "synth"): SynthConfig,
    (PredictorSpec, "synthetic"): SyntheticConfig,
}


def _parse_value(text: str) -> Any:
    try:
        return tomllib.loads(f"v = {text}")["v"]
    except tomllib.TOMLDecodeError:
        return text


def apply_overrides(data: dict, overrides) -> dict:
    """Apply ``dotted.key=value`` strings (values parsed as TOML, else kept as strings)."""
    data = json.loads(json.dumps(data))
    for item in overrides or ():
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not key=value")
        key, value = item.split("=", 1)
        parts = key.strip().split(".")
        node = data
        for p in parts[:-1]:
            node = node.setdefault(p, {})
            if not isinstance(node, dict):
                raise ConfigError(f"override {key!r} descends into a non-table")
        node[parts[-1]] = _parse_value(value.strip())
    return data


def config_from_dict(data: dict) -> ExperimentConfig:
    return _build(ExperimentConfig, data, "")


def load_config(path: str | Path | None = None, overrides=()) -> ExperimentConfig:
    data: dict = {}
    if path is not None:
        try:
            data = tomllib.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, tomllib.TOMLDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
    return config_from_dict(apply_overrides(data, overrides))


def dump_config(cfg: ExperimentConfig) -> str:
    """Render a config as TOML (flat scalars first, then tables)."""
    d = config_dict(cfg)
    lines: list[str] = []

    def emit(table: dict, prefix: str):
        scalars = {k: v for k, v in table.items() if not isinstance(v, dict)}
        tables = {k: v for k, v in table.items() if isinstance(v, dict)}
        if prefix and scalars:
            lines.append(f"\n[{prefix}]")
        for k, v in scalars.items():
            if v is None:
                continue
            lines.append(f"{k} = {json.dumps(v)}")
        for k, v in tables.items():
            emit(v, f"{prefix}.{k}" if prefix else k)

    emit(d, "")
    return "\n".join(lines).lstrip("\n") + "\n"


__all__ = ["ConfigError", "ExperimentConfig", "apply_overrides", "config_dict", "config_from_dict",
           "config_hash", "dump_config", "load_config"]
