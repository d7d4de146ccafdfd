"""Model and training configuration with strict JSON loading.

Every field has a default so a config file may specify only what it changes;
unknown keys are rejected rather than silently ignored.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path


class ConfigError(ValueError):
    """Invalid or unknown configuration content."""


@dataclass
class ModelConfig:
    """Architecture hyperparameters.

    `backbone_width` lists the channel width of each stride-2 stage, so its
    length fixes the output stride (2 ** len). `aspp_rates` are the dilation
    rates of the pyramid branches; the reference-scale values are [12, 24, 36]
    but toy inputs want smaller rates.
    """

    image_channels: int = 3
    backbone_width: list[int] = field(default_factory=lambda: [16, 32, 64])
    output_stride: int = 8
    aspp_rates: list[int] = field(default_factory=lambda: [12, 24, 36])
    fusion_dim: int = 256
    lang_dim: int = 768
    vocab_size: int = 64
    max_tokens: int = 20
    lang_layers: int = 2
    lang_heads: int = 4
    fusion_mode: str = "multiply"
    num_output_maps: int = 2

    def validate(self) -> None:
        if self.num_output_maps != 2:
            raise ConfigError("num_output_maps is fixed at 2 (foreground/background)")
        if self.fusion_mode not in ("multiply", "add", "concat"):
            raise ConfigError(f"unknown fusion_mode {self.fusion_mode!r}")
        if self.output_stride < 2 or self.output_stride & (self.output_stride - 1):
            raise ConfigError(f"output_stride must be a power of two >= 2, got {self.output_stride}")
        n_stages = self.output_stride.bit_length() - 1
        if len(self.backbone_width) != n_stages:
            raise ConfigError(
                f"backbone_width needs one entry per stride-2 stage:"
                f" {n_stages} for output_stride {self.output_stride},"
                f" got {len(self.backbone_width)}"
            )
        if self.lang_dim % self.lang_heads:
            raise ConfigError("lang_dim must be divisible by lang_heads")
        if not self.aspp_rates:
            raise ConfigError("aspp_rates must be nonempty")
        for name in ("image_channels", "fusion_dim", "lang_dim", "vocab_size",
                     "max_tokens", "lang_layers", "lang_heads"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1")


@dataclass
class TrainSchedule:
    """Optimization settings for the segmentation fine-tune and the optional
    language-model warm-up that runs strictly before it."""

    steps: int = 200
    lr: float = 0.1
    momentum: float = 0.9
    batch_size: int = 4
    freeze_language: bool = False
    mlm_first: bool = False
    mlm_steps: int = 50
    mlm_lr: float = 0.5
    mask_fraction: float = 0.15
    seed: int = 0

    def validate(self) -> None:
        if self.steps < 0 or self.mlm_steps < 0:
            raise ConfigError("step counts must be >= 0")
        if self.batch_size < 1:
            raise ConfigError("batch_size must be >= 1")
        if not 0 < self.mask_fraction < 1:
            raise ConfigError("mask_fraction must be in (0, 1)")


@dataclass
class TrainingConfig:
    """Full training run description: architecture, schedule, and data."""

    model: ModelConfig = field(default_factory=ModelConfig)
    schedule: TrainSchedule = field(default_factory=TrainSchedule)
    manifest: str | None = None
    out_dir: str = "runs/default"

    def validate(self) -> None:
        self.model.validate()
        self.schedule.validate()


def _from_dict(cls, doc: dict, context: str):
    known = {f.name for f in dataclasses.fields(cls)}
    unknown = set(doc) - known
    if unknown:
        raise ConfigError(f"unknown {context} keys: {sorted(unknown)}")
    return cls(**doc)


def load_training_config(path) -> TrainingConfig:
    """Parse a training config JSON file; unknown keys are an error."""
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    if not isinstance(doc, dict):
        raise ConfigError("training config must be a JSON object")
    known = {"model", "schedule", "manifest", "out_dir"}
    unknown = set(doc) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    config = TrainingConfig(
        model=_from_dict(ModelConfig, doc.get("model", {}), "model"),
        schedule=_from_dict(TrainSchedule, doc.get("schedule", {}), "schedule"),
        manifest=doc.get("manifest"),
        out_dir=doc.get("out_dir", "runs/default"),
    )
    config.validate()
    return config


def config_to_dict(config: ModelConfig) -> dict:
    return dataclasses.asdict(config)


def config_from_dict(doc: dict) -> ModelConfig:
    config = _from_dict(ModelConfig, doc, "model")
    config.validate()
    return config
