"""Multilingual abusive-text classification: preprocessing, sentence-embedding
features, gradient-boosted task models and an A -> B/C cascade."""

__version__ = "0.1.0"

from .corpus import (  # noqa: E402
    Dataset,
    DatasetStats,
    LabelSet,
    Language,
    Post,
    Split,
    Task,
    compute_stats,
    load_dataset,
    slice_for_task,
)
from .errors import (  # noqa: E402
    BackendError,
    ChecksumError,
    ConfigError,
    DataError,
    DimensionError,
    PipelineError,
    StorageError,
)
from .preprocess import PreprocessedText, normalize, normalize_batch  # noqa: E402
