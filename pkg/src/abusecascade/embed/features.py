"""Concatenated 1792-d feature vectors: 768 transformer dims then 1024 LASER dims."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from ..errors import ConfigError, DimensionError
from ..preprocess import PreprocessedText
from .cache import FeatureCache
from .providers import EmbeddingProvider

TRANSFORMER_DIM = 768
LASER_DIM = 1024
FEATURE_DIM = TRANSFORMER_DIM + LASER_DIM


@dataclass(frozen=True, eq=False)
class FeatureVector:
    combined: np.ndarray

    def __post_init__(self):
        vec = np.asarray(self.combined, dtype=np.float32)
        if vec.shape != (FEATURE_DIM,):
            raise DimensionError(f"feature vector must have length {FEATURE_DIM}, got {vec.shape}")
        if not np.all(np.isfinite(vec)):
            raise DimensionError("feature vector contains non-finite values")
        vec.flags.writeable = False
        object.__setattr__(self, "combined", vec)

    @classmethod
    def from_parts(cls, transformer_part, laser_part) -> "FeatureVector":
        t = np.asarray(transformer_part, dtype=np.float32).ravel()
        l = np.asarray(laser_part, dtype=np.float32).ravel()
        if t.size != TRANSFORMER_DIM or l.size != LASER_DIM:
            raise DimensionError(
                f"parts must be {TRANSFORMER_DIM} + {LASER_DIM} long, got {t.size} + {l.size}"
            )
        return cls(np.concatenate([t, l]))

    @property
    def transformer_part(self) -> np.ndarray:
        return self.combined[:TRANSFORMER_DIM]

    @property
    def laser_part(self) -> np.ndarray:
        return self.combined[TRANSFORMER_DIM:]

    def __len__(self):
        return FEATURE_DIM

    def __eq__(self, other):
        return isinstance(other, FeatureVector) and np.array_equal(self.combined, other.combined)


def check_providers(providers: Sequence[EmbeddingProvider]) -> None:
    dims = tuple(p.output_dim for p in providers)
    if dims != (TRANSFORMER_DIM, LASER_DIM):
        raise ConfigError(
            f"provider dims must be ({TRANSFORMER_DIM}, {LASER_DIM}) for a "
            f"{FEATURE_DIM}-d feature vector, got {dims}"
        )


def _require_preprocessed(texts):
    for t in texts:
        if not isinstance(t, PreprocessedText):
            raise TypeError(f"expected PreprocessedText, got {type(t).__name__}; run normalize() first")


def _embed(texts, provider, cache):
    _require_preprocessed(texts)
    if cache is not None:
        return cache.get_or_compute_many(texts, provider)
    return np.asarray(provider([t.text for t in texts]), dtype=np.float32)


def embed_transformer(text: PreprocessedText, provider, cache: Optional[FeatureCache] = None):
    if provider.output_dim != TRANSFORMER_DIM:
        raise ConfigError(f"transformer provider must produce {TRANSFORMER_DIM} dims")
    return _embed([text], provider, cache)[0]


def embed_laser(text: PreprocessedText, provider, cache: Optional[FeatureCache] = None):
    if provider.output_dim != LASER_DIM:
        raise ConfigError(f"LASER provider must produce {LASER_DIM} dims")
    return _embed([text], provider, cache)[0]


def embed_concat(text: PreprocessedText, providers, cache: Optional[FeatureCache] = None) -> FeatureVector:
    check_providers(providers)
    transformer, laser = providers
    return FeatureVector.from_parts(
        _embed([text], transformer, cache)[0], _embed([text], laser, cache)[0]
    )


class Featurizer:
    """Batch featurization through both providers, optionally cache-backed."""

    def __init__(self, providers, cache: Optional[FeatureCache] = None, batch_size: int = 256):
        check_providers(providers)
        self.providers = tuple(providers)
        self.cache = cache
        self.batch_size = batch_size

    def matrix(self, texts: Sequence[PreprocessedText]) -> np.ndarray:
        """``(n, 1792)`` float32 matrix, rows in input order."""
        out = np.empty((len(texts), FEATURE_DIM), dtype=np.float32)
        for start in range(0, len(texts), self.batch_size):
            batch = list(texts[start : start + self.batch_size])
            stop = start + len(batch)
            out[start:stop, :TRANSFORMER_DIM] = _embed(batch, self.providers[0], self.cache)
            out[start:stop, TRANSFORMER_DIM:] = _embed(batch, self.providers[1], self.cache)
        return out

    def features(self, texts: Sequence[PreprocessedText]) -> list[FeatureVector]:
        return [FeatureVector(row) for row in self.matrix(texts)]
