"""Configuration: one flat INI-style file, sections per subsystem, with
command-line overrides of the form section.key=value.

`configs/toy.cfg` carries the desk-scale values every pipeline command
defaults to; `configs/paper.cfg` carries the full-scale hyperparameters
for reference and for runs on real hardware.
"""

from __future__ import annotations

import configparser
import dataclasses
from dataclasses import dataclass, field, fields
from pathlib import Path

from .classifier import ClassifierConfig, ClassifierTrainConfig
from .errors import ConfigError
from .generator import GeneratorConfig
from .matcher import MatcherConfig, MatcherTrainConfig
from .policy import PolicyConfig
from .selfplay import RlConfig


@dataclass
class CorpusConfig:
    n_dialogues: int = 240
    min_turns: int = 4
    max_turns: int = 8
    vocab_size: int = 400
    cs_mass: float = 0.22       # context-switch probability mass per transition row
    primary_word_bias: float = 0.6
    train_frac: float = 0.70
    val_frac: float = 0.15


@dataclass
class SlConfig:
    epochs: int = 10
    batch_dialogues: int = 4
    rho: float = 0.95
    epsilon: float = 1e-6
    lr: float = 1.0
    # experiment flag: give the policy the generator's word-embedding table
    # (one table, gradients from both losses; not persisted across bundles)
    share_embeddings: bool = False
    seed: int = 0


@dataclass
class EvalConfig:
    beam_size: int = 5
    episodes: int = 200
    max_response_len: int = 16


@dataclass
class ServiceConfig:
    host: str = "127.0.0.1"
    port: int = 8022
    beam_size: int = 5
    threshold: float = 0.9
    max_response_len: int = 16


@dataclass
class AppConfig:
    corpus: CorpusConfig = field(default_factory=CorpusConfig)
    classifier: ClassifierConfig = field(default_factory=ClassifierConfig)
    classifier_train: ClassifierTrainConfig = field(default_factory=ClassifierTrainConfig)
    policy: PolicyConfig = field(default_factory=PolicyConfig)
    generator: GeneratorConfig = field(default_factory=GeneratorConfig)
    matcher: MatcherConfig = field(default_factory=MatcherConfig)
    matcher_train: MatcherTrainConfig = field(default_factory=MatcherTrainConfig)
    sl: SlConfig = field(default_factory=SlConfig)
    rl: RlConfig = field(default_factory=RlConfig)
    eval: EvalConfig = field(default_factory=EvalConfig)
    service: ServiceConfig = field(default_factory=ServiceConfig)

    def to_dict(self) -> dict:
        return {sec.name: dataclasses.asdict(getattr(self, sec.name))
                for sec in fields(self)}

    @classmethod
    def from_dict(cls, data: dict) -> "AppConfig":
        cfg = cls()
        for sec_name, values in data.items():
            _apply_section(cfg, sec_name, values)
        return cfg


def _coerce(raw, target_type):
    if isinstance(raw, str):
        text = raw.strip()
        if text.lower() in ("none", "null", ""):
            return None
        if target_type is bool or isinstance(target_type, bool):
            return text.lower() in ("1", "true", "yes", "on")
        if target_type is int:
            return int(text)
        if target_type is float:
            return float(text)
        if target_type is None:  # field defaults to None: infer the type
            for caster in (int, float):
                try:
                    return caster(text)
                except ValueError:
                    continue
            return text
        return text
    return raw


def _apply_section(cfg: AppConfig, sec_name: str, values: dict) -> None:
    if not hasattr(cfg, sec_name):
        raise ConfigError(f"unknown config section {sec_name!r}")
    section = getattr(cfg, sec_name)
    valid = {f.name: f for f in fields(section)}
    for key, raw in values.items():
        if key not in valid:
            raise ConfigError(f"unknown config key {sec_name}.{key}")
        current = getattr(section, key)
        target = type(current) if current is not None else None
        if isinstance(current, bool):
            target = bool
        setattr(section, key, _coerce(raw, target))
    # re-run dataclass validation where defined
    post = getattr(type(section), "__post_init__", None)
    if post is not None:
        post(section)


def load_config(path=None, overrides: list[str] | None = None) -> AppConfig:
    """Desk-scale defaults, optionally overlaid with an INI file and then with
    section.key=value override strings."""
    cfg = AppConfig()
    if path is not None:
        parser = configparser.ConfigParser()
        read = parser.read(Path(path))
        if not read:
            raise ConfigError(f"cannot read config file {path}")
        for sec_name in parser.sections():
            _apply_section(cfg, sec_name, dict(parser.items(sec_name)))
    for item in overrides or []:
        if "=" not in item or "." not in item.split("=", 1)[0]:
            raise ConfigError(f"override must look like section.key=value, got {item!r}")
        target, value = item.split("=", 1)
        sec_name, key = target.split(".", 1)
        _apply_section(cfg, sec_name.strip(), {key.strip(): value})
    return cfg
