"""Pipeline configuration file (YAML or JSON).

Everything that affects reproducibility lives here; the command line only
picks the command, the config file and input/output paths. Relative paths
resolve against the config file's directory. ``ABUSECASCADE_CACHE``
overrides the cache location.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import yaml

from .corpus import Language
from .embed.features import FEATURE_DIM
from .embed.providers import EmbeddingProvider, build_provider
from .errors import ConfigError, StorageError
from .evaluation import ROUNDING
from .model import TrainConfig
from .preprocess import PreprocessConfig

CACHE_ENV = "ABUSECASCADE_CACHE"
DEFAULT_SEED = 0


@dataclass
class PipelineConfig:
    language: Language
    providers: tuple[dict, dict]
    model: Path
    train: Optional[Path] = None
    test: Optional[Path] = None
    cache: Optional[Path] = None
    reports: Optional[Path] = None
    feature_dim: int = FEATURE_DIM
    seed: int = DEFAULT_SEED
    training: TrainConfig = field(default_factory=TrainConfig)
    preprocessing: PreprocessConfig = field(default_factory=PreprocessConfig)
    rounding: str = "half-even"

    def build_providers(self) -> list[EmbeddingProvider]:
        providers = [build_provider(spec) for spec in self.providers]
        dims = [p.output_dim for p in providers]
        if sum(dims) != self.feature_dim:
            raise ConfigError(f"provider dims {dims} sum to {sum(dims)}, expected {self.feature_dim}")
        return providers


_KEYS = {
    "language", "data", "providers", "model", "cache", "reports", "feature_dim",
    "seed", "training", "preprocessing", "rounding",
}


def load_config(path) -> PipelineConfig:
    path = Path(path)
    try:
        raw = yaml.safe_load(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise StorageError(f"{path}: no such config file") from None
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: cannot parse config: {exc}") from None
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: config must be a mapping")
    return config_from_mapping(raw, path.parent)


def config_from_mapping(raw: dict, base_dir=".") -> PipelineConfig:
    base = Path(base_dir)
    unknown = set(raw) - _KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")

    def resolve(value):
        if value is None:
            return None
        p = Path(os.path.expanduser(str(value)))
        return p if p.is_absolute() else base / p

    if "language" not in raw:
        raise ConfigError("config is missing 'language'")
    if "model" not in raw:
        raise ConfigError("config is missing 'model'")

    providers = raw.get("providers")
    if isinstance(providers, dict):
        try:
            providers = [providers["transformer"], providers["laser"]]
        except KeyError:
            raise ConfigError("providers mapping needs 'transformer' and 'laser' entries") from None
    if not isinstance(providers, list) or len(providers) != 2:
        raise ConfigError("config needs exactly two providers (transformer first, then laser)")

    data = raw.get("data") or {}
    cache = os.environ.get(CACHE_ENV) or raw.get("cache")
    seed = raw.get("seed")
    rounding = raw.get("rounding", "half-even")
    if rounding not in ROUNDING:
        raise ConfigError(f"unknown rounding {rounding!r}")
    return PipelineConfig(
        language=Language.parse(raw["language"]),
        providers=(dict(providers[0]), dict(providers[1])),
        model=resolve(raw["model"]),
        train=resolve(data.get("train")),
        test=resolve(data.get("test")),
        cache=resolve(cache),
        reports=resolve(raw.get("reports")),
        feature_dim=int(raw.get("feature_dim", FEATURE_DIM)),
        seed=DEFAULT_SEED if seed is None else int(seed),
        training=TrainConfig.from_mapping(raw.get("training")),
        preprocessing=PreprocessConfig.from_mapping(raw.get("preprocessing")),
        rounding=rounding,
    )
