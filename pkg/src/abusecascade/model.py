"""Gradient-boosted task classifiers and the A -> B/C prediction cascade.

Each sub-task gets its own LightGBM model over the 1792-d features.
At prediction time task A gates the others: a NOT decision yields
``(NOT, NONE, NONE)`` and only HOF rows are passed to the B and C models.

Model files::

    b"HMDL" | version u16 | meta_len u32 | canonical JSON metadata
            | payload_len u64 | payload | crc32 u32

The payload is a sequence of ``u64 length | LightGBM model text`` blobs,
one per member model, in the order listed in the metadata.
"""

from __future__ import annotations

import json
import struct
import time
import zlib
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional, Sequence, Union

import lightgbm as lgb
import numpy as np

from . import __version__
from .corpus import NONE, TASK_CLASSES, Language, LabelSet, Task, write_atomic
from .embed.features import FEATURE_DIM, FeatureVector
from .errors import ChecksumError, ConfigError, DataError, DimensionError, StorageError

MAGIC = b"HMDL"
FORMAT_VERSION = 1


@dataclass(frozen=True)
class TrainConfig:
    """Boosting hyperparameters. Unrecognized LightGBM options go in ``extra``."""

    n_estimators: int = 100
    learning_rate: float = 0.1
    num_leaves: int = 31
    min_child_samples: int = 20
    # pinned so results do not depend on the host's core count
    num_threads: int = 1
    extra: dict = field(default_factory=dict)

    @classmethod
    def from_mapping(cls, data: Optional[dict]) -> "TrainConfig":
        data = dict(data or {})
        known = {k: data.pop(k) for k in list(data) if k in cls.__dataclass_fields__ and k != "extra"}
        extra = dict(data.pop("extra", {}) or {})
        extra.update(data)
        try:
            return cls(**known, extra=extra)
        except TypeError as exc:
            raise ConfigError(f"bad training config: {exc}") from None

    def to_dict(self) -> dict:
        return asdict(self)

    def lgb_params(self, n_classes: int, seed: int) -> dict:
        params = {
            "learning_rate": self.learning_rate,
            "num_leaves": self.num_leaves,
            "min_data_in_leaf": self.min_child_samples,
            "num_threads": self.num_threads,
            "seed": seed,
            "deterministic": True,
            "force_col_wise": True,
            "verbosity": -1,
        }
        if n_classes == 2:
            params["objective"] = "binary"
        else:
            params.update(objective="multiclass", num_class=n_classes)
        params.update(self.extra)
        return params


@dataclass(eq=False)
class TrainedTaskModel:
    language: Optional[Language]
    task: Task
    class_list: tuple[str, ...]
    booster: lgb.Booster
    train_config: TrainConfig
    feature_dim: int
    seed: int
    created_at: float = 0.0

    def metadata(self) -> dict:
        return {
            "kind": "task",
            "language": self.language.value if self.language else None,
            "task": self.task.value,
            "class_list": list(self.class_list),
            "seed": self.seed,
            "config": self.train_config.to_dict(),
            "feature_dim": self.feature_dim,
            "created_at": self.created_at,
        }

    def predict_proba(self, features) -> np.ndarray:
        X = as_matrix(features, self.feature_dim)
        if X.shape[0] == 0:
            return np.zeros((0, len(self.class_list)))
        raw = self.booster.predict(X, num_threads=self.train_config.num_threads)
        if len(self.class_list) == 2:
            raw = np.column_stack([1.0 - raw, raw])
        probs = np.clip(np.asarray(raw, dtype=np.float64), 0.0, None)
        return probs / probs.sum(axis=1, keepdims=True)


@dataclass(eq=False)
class CascadeModel:
    language: Language
    model_a: TrainedTaskModel
    model_b: TrainedTaskModel
    model_c: Optional[TrainedTaskModel] = None

    def __post_init__(self):
        for m in self.members:
            if m.language is not self.language:
                raise ConfigError(f"cascade member for task {m.task.value} has language {m.language}")
        if (self.model_c is None) == self.language.has_task_c:
            raise ConfigError(
                f"task C model must be {'present' if self.language.has_task_c else 'absent'} "
                f"for {self.language.value}"
            )

    @property
    def members(self) -> list[TrainedTaskModel]:
        return [m for m in (self.model_a, self.model_b, self.model_c) if m is not None]

    @property
    def feature_dim(self) -> int:
        return self.model_a.feature_dim


def as_matrix(features, expected_dim: Optional[int] = None) -> np.ndarray:
    """Stack FeatureVectors or raw rows into a 2-d float array."""
    if isinstance(features, np.ndarray):
        X = features
        if X.ndim == 1 and X.size == 0:
            X = X.reshape(0, expected_dim or 0)
    else:
        rows = [f.combined if isinstance(f, FeatureVector) else np.asarray(f) for f in features]
        if not rows:
            return np.zeros((0, expected_dim or FEATURE_DIM), dtype=np.float32)
        lengths = {r.shape for r in rows}
        if len(lengths) != 1:
            raise DimensionError(f"features have mixed shapes: {sorted(s[0] for s in lengths)}")
        X = np.stack(rows)
    if X.ndim != 2:
        raise DimensionError(f"features must be 2-d, got shape {X.shape}")
    if expected_dim is not None and X.shape[1] != expected_dim and X.shape[0] > 0:
        raise DimensionError(f"feature dim {X.shape[1]} does not match model feature_dim {expected_dim}")
    return X


def train_task_model(
    features,
    labels: Sequence[str],
    task,
    config: Optional[TrainConfig] = None,
    seed: int = 0,
    language=None,
) -> TrainedTaskModel:
    task = Task.parse(task)
    config = config or TrainConfig()
    language = Language.parse(language) if language is not None else None
    X = as_matrix(features)
    if X.shape[0] == 0:
        raise DataError(f"task {task.value}: empty training set")
    if len(labels) != X.shape[0]:
        raise DataError(f"task {task.value}: {X.shape[0]} feature rows but {len(labels)} labels")
    class_list = TASK_CLASSES[task]
    index = {c: i for i, c in enumerate(class_list)}
    unknown = sorted(set(labels) - set(index))
    if unknown:
        raise DataError(f"task {task.value}: labels {unknown} not in {list(class_list)}")
    if len(set(labels)) < 2:
        raise DataError(f"task {task.value}: training set has a single class {labels[0]!r}")
    y = np.array([index[label] for label in labels], dtype=np.int32)
    data = lgb.Dataset(X, label=y, params={"verbosity": -1}, free_raw_data=True)
    booster = lgb.train(
        config.lgb_params(len(class_list), seed), data, num_boost_round=config.n_estimators
    )
    return TrainedTaskModel(
        language, task, class_list, booster, config, X.shape[1], int(seed), created_at=time.time()
    )


def predict_task(model: TrainedTaskModel, features) -> list[tuple[str, dict[str, float]]]:
    probs = model.predict_proba(features)
    # argmax returns the first maximum, i.e. ties go to class_list order
    picks = probs.argmax(axis=1)
    return [
        (model.class_list[k], dict(zip(model.class_list, map(float, row))))
        for k, row in zip(picks, probs)
    ]


def predict_labels(model: TrainedTaskModel, features) -> list[str]:
    probs = model.predict_proba(features)
    return [model.class_list[k] for k in probs.argmax(axis=1)]


def predict_cascade(cascade: CascadeModel, features) -> list[LabelSet]:
    X = as_matrix(features, cascade.feature_dim)
    task_a = predict_labels(cascade.model_a, X)
    hof = np.array([label == "HOF" for label in task_a], dtype=bool)
    task_b = [NONE] * len(task_a)
    task_c = [NONE] * len(task_a)
    if hof.any():
        rows = np.flatnonzero(hof)
        for i, label in zip(rows, predict_labels(cascade.model_b, X[rows])):
            task_b[i] = label
        if cascade.model_c is not None:
            for i, label in zip(rows, predict_labels(cascade.model_c, X[rows])):
                task_c[i] = label
    return [LabelSet(a, b, c) for a, b, c in zip(task_a, task_b, task_c)]


def train_cascade(
    features,
    labels: Sequence[LabelSet],
    language,
    config: Optional[TrainConfig] = None,
    seed: int = 0,
) -> CascadeModel:
    """Fit A on every row and B/C on the gold-HOF rows only."""
    language = Language.parse(language)
    X = as_matrix(features)
    if len(labels) != X.shape[0]:
        raise DataError(f"{X.shape[0]} feature rows but {len(labels)} label sets")
    hof = np.array([ls.task_a == "HOF" for ls in labels], dtype=bool)
    gold_hof = [ls for ls in labels if ls.task_a == "HOF"]
    kw = dict(config=config, seed=seed, language=language)
    model_a = train_task_model(X, [ls.task_a for ls in labels], Task.A, **kw)
    model_b = train_task_model(X[hof], [ls.task_b for ls in gold_hof], Task.B, **kw)
    model_c = None
    if language.has_task_c:
        model_c = train_task_model(X[hof], [ls.task_c for ls in gold_hof], Task.C, **kw)
    return CascadeModel(language, model_a, model_b, model_c)


def _canonical_json(obj) -> bytes:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=True).encode("ascii")


def model_to_bytes(model: Union[TrainedTaskModel, CascadeModel]) -> bytes:
    if isinstance(model, CascadeModel):
        members = model.members
        meta = {
            "kind": "cascade",
            "language": model.language.value,
            "members": [m.metadata() for m in members],
        }
    else:
        members = [model]
        meta = model.metadata()
    meta["pipeline_version"] = __version__
    payload = b"".join(
        struct.pack("<Q", len(blob)) + blob
        for blob in (m.booster.model_to_string().encode("utf-8") for m in members)
    )
    meta_bytes = _canonical_json(meta)
    body = (
        MAGIC
        + struct.pack("<HI", FORMAT_VERSION, len(meta_bytes))
        + meta_bytes
        + struct.pack("<Q", len(payload))
        + payload
    )
    return body + struct.pack("<I", zlib.crc32(body))


def save_model(model: Union[TrainedTaskModel, CascadeModel], path) -> None:
    write_atomic(path, model_to_bytes(model))


def _member_from(meta: dict, blob: bytes) -> TrainedTaskModel:
    booster = lgb.Booster(model_str=blob.decode("utf-8"))
    return TrainedTaskModel(
        language=Language.parse(meta["language"]) if meta["language"] else None,
        task=Task.parse(meta["task"]),
        class_list=tuple(meta["class_list"]),
        booster=booster,
        train_config=TrainConfig.from_mapping(meta["config"]),
        feature_dim=int(meta["feature_dim"]),
        seed=int(meta["seed"]),
        created_at=float(meta.get("created_at", 0.0)),
    )


def model_from_bytes(data: bytes, source: str = "<bytes>") -> Union[TrainedTaskModel, CascadeModel]:
    if len(data) < 4 + 2 + 4 + 8 + 4 or data[:4] != MAGIC:
        if data[:4] == MAGIC:
            raise ChecksumError(f"{source}: truncated model file")
        raise StorageError(f"{source}: not a model file (bad magic)")
    body, (crc,) = data[:-4], struct.unpack("<I", data[-4:])
    if zlib.crc32(body) != crc:
        raise ChecksumError(f"{source}: checksum mismatch (truncated or corrupted model file)")
    version, meta_len = struct.unpack_from("<HI", body, 4)
    if version != FORMAT_VERSION:
        raise StorageError(f"{source}: model format version {version}, expected {FORMAT_VERSION}")
    pos = 10
    meta = json.loads(body[pos : pos + meta_len].decode("ascii"))
    pos += meta_len
    (payload_len,) = struct.unpack_from("<Q", body, pos)
    pos += 8
    payload = body[pos : pos + payload_len]
    blobs = []
    off = 0
    while off < len(payload):
        (n,) = struct.unpack_from("<Q", payload, off)
        blobs.append(payload[off + 8 : off + 8 + n])
        off += 8 + n
    if meta["kind"] == "task":
        return _member_from(meta, blobs[0])
    members = {m["task"]: _member_from(m, b) for m, b in zip(meta["members"], blobs)}
    return CascadeModel(
        Language.parse(meta["language"]), members["A"], members["B"], members.get("C")
    )


def load_model(path) -> Union[TrainedTaskModel, CascadeModel]:
    path = Path(path)
    try:
        data = path.read_bytes()
    except FileNotFoundError:
        raise StorageError(f"{path}: no such model file") from None
    except OSError as exc:
        raise StorageError(f"{path}: {exc.strerror or exc}") from None
    return model_from_bytes(data, str(path))


def file_checksum(path) -> str:
    return f"{zlib.crc32(Path(path).read_bytes()):08x}"
