from .cache import FeatureCache, cache_key
from .features import (
    FEATURE_DIM,
    LASER_DIM,
    TRANSFORMER_DIM,
    FeatureVector,
    Featurizer,
    check_providers,
    embed_concat,
    embed_laser,
    embed_transformer,
)
from .pooling import pool_hidden_states
from .providers import (
    EmbeddingProvider,
    HashEmbedder,
    HttpEmbedder,
    LaserEmbedder,
    TransformerEmbedder,
    build_provider,
    test_embedder,
)

__all__ = [
    "FEATURE_DIM",
    "LASER_DIM",
    "TRANSFORMER_DIM",
    "EmbeddingProvider",
    "FeatureCache",
    "FeatureVector",
    "Featurizer",
    "HashEmbedder",
    "HttpEmbedder",
    "LaserEmbedder",
    "TransformerEmbedder",
    "build_provider",
    "cache_key",
    "check_providers",
    "embed_concat",
    "embed_laser",
    "embed_transformer",
    "pool_hidden_states",
    "test_embedder",
]
