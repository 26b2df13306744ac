"""Glue between ingestion, preprocessing, featurization and the cascade."""

from __future__ import annotations

import contextlib
from pathlib import Path
from typing import Optional

import numpy as np

from .config import PipelineConfig
from .corpus import NONE, Dataset, Language, LabelSet, Split, Task, load_dataset, slice_for_task
from .embed import FeatureCache, Featurizer
from .errors import DataError, StorageError
from .model import CascadeModel, TrainedTaskModel, predict_cascade, train_task_model
from .preprocess import PreprocessConfig, normalize_batch


@contextlib.contextmanager
def open_featurizer(cfg: PipelineConfig):
    providers = cfg.build_providers()
    cache = FeatureCache(cfg.cache) if cfg.cache else None
    try:
        yield Featurizer(providers, cache)
    finally:
        if cache is not None:
            cache.close()


def featurize_dataset(ds: Dataset, featurizer: Featurizer, pp: PreprocessConfig) -> np.ndarray:
    return featurizer.matrix(normalize_batch(ds.posts, pp))


def train_from_dataset(
    ds: Dataset, featurizer: Featurizer, cfg: PipelineConfig
) -> tuple[CascadeModel, list[str]]:
    """Train the per-task models; returns the cascade and summary lines."""
    X = featurize_dataset(ds, featurizer, cfg.preprocessing)
    row_of = {post.id: i for i, post in enumerate(ds.posts)}
    models: dict[Task, TrainedTaskModel] = {}
    summary = []
    for task in (Task.A, Task.B, Task.C):
        if task is Task.C and not ds.language.has_task_c:
            continue
        pairs = slice_for_task(ds, task)
        rows = [row_of[post.id] for post, _ in pairs]
        labels = [label for _, label in pairs]
        models[task] = train_task_model(
            X[rows], labels, task, cfg.training, seed=cfg.seed, language=ds.language
        )
        counts = ", ".join(f"{c}={labels.count(c)}" for c in models[task].class_list)
        summary.append(f"task {task.value}: trained on {len(labels)} rows ({counts})")
    cascade = CascadeModel(ds.language, models[Task.A], models[Task.B], models.get(Task.C))
    return cascade, summary


def predict_dataset(cascade: CascadeModel, ds: Dataset, featurizer: Featurizer,
                    pp: PreprocessConfig) -> list[LabelSet]:
    return predict_cascade(cascade, featurize_dataset(ds, featurizer, pp))


def prediction_columns(language: Language) -> tuple[str, ...]:
    cols = ("text_id", "task_1", "task_2", "task_3")
    return cols if language.has_task_c else cols[:3]


def predictions_to_tsv(ids, labelsets, language: Language) -> str:
    cols = prediction_columns(language)
    lines = ["\t".join(cols)]
    for text_id, ls in zip(ids, labelsets):
        lines.append("\t".join([text_id, ls.task_a, ls.task_b, ls.task_c][: len(cols)]))
    return "\n".join(lines) + "\n"


def load_predictions(path, language: Language) -> dict[str, LabelSet]:
    """Read a prediction TSV into an id -> LabelSet map (file order kept)."""
    path = Path(path)
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except FileNotFoundError:
        raise StorageError(f"{path}: no such file") from None
    cols = prediction_columns(language)
    if not lines or tuple(lines[0].split("\t")) != cols:
        raise DataError(f"{path}: expected header {list(cols)}")
    out: dict[str, LabelSet] = {}
    for lineno, line in enumerate(lines[1:], start=2):
        fields = line.split("\t")
        if len(fields) != len(cols):
            raise DataError(f"{path}:{lineno}: expected {len(cols)} columns, got {len(fields)}")
        if fields[0] in out:
            raise DataError(f"{path}:{lineno}: duplicate text_id {fields[0]!r}")
        try:
            ls = LabelSet(*(fields[1:] + [NONE] * (4 - len(fields))))
            ls.check_language(language)
        except DataError as exc:
            raise DataError(f"{path}:{lineno}: {exc}") from None
        out[fields[0]] = ls
    return out


def align(gold: Dataset, pred: dict[str, LabelSet]) -> tuple[list[LabelSet], list[LabelSet]]:
    gold_ids = [p.id for p in gold.posts]
    pred_ids = list(pred)
    for i, text_id in enumerate(gold_ids):
        if text_id not in pred:
            raise DataError(f"id mismatch: gold id {text_id!r} (row {i + 1}) has no prediction")
    known = set(gold_ids)
    extra = [t for t in pred_ids if t not in known]
    if extra:
        raise DataError(f"id mismatch: predicted id {extra[0]!r} is not in the gold file")
    return gold.labels, [pred[t] for t in gold_ids]


def load_split(path: Optional[Path], cfg: PipelineConfig, split: Split) -> Dataset:
    if path is None:
        raise DataError(f"config has no {split.value.lower()} data path")
    return load_dataset(path, cfg.language, split)
