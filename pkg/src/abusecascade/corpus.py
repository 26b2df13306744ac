"""Shared-task data ingestion, label schema and dataset statistics.

Files are tab-separated UTF-8 with a header row::

    text_id<TAB>text<TAB>task_1<TAB>task_2<TAB>task_3

German files may omit ``task_3``. Prediction-only files carry just
``text_id`` and ``text``.
"""

from __future__ import annotations

import os
from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Optional, Sequence

from .errors import ConfigError, DataError, StorageError


class Language(str, Enum):
    EN = "EN"
    DE = "DE"
    HI = "HI"

    @property
    def has_task_c(self) -> bool:
        return self is not Language.DE

    @classmethod
    def parse(cls, value) -> "Language":
        if isinstance(value, Language):
            return value
        try:
            return cls(str(value).upper())
        except ValueError:
            raise ConfigError(f"unknown language {value!r}; expected one of EN, DE, HI") from None


class Task(str, Enum):
    A = "A"
    B = "B"
    C = "C"

    @classmethod
    def parse(cls, value) -> "Task":
        if isinstance(value, Task):
            return value
        try:
            return cls(str(value).upper())
        except ValueError:
            raise ConfigError(f"unknown task {value!r}; expected A, B or C") from None


class Split(str, Enum):
    TRAIN = "TRAIN"
    TEST = "TEST"


NONE = "NONE"

# classes a trained model distinguishes
TASK_CLASSES = {
    Task.A: ("HOF", "NOT"),
    Task.B: ("HATE", "OFFN", "PRFN"),
    Task.C: ("TIN", "UNT"),
}

# classes scored at evaluation time; B and C include the cascade placeholder
EVAL_CLASSES = {
    Task.A: ("HOF", "NOT"),
    Task.B: ("HATE", "OFFN", "PRFN", NONE),
    Task.C: ("TIN", "UNT", NONE),
}

_VALID_TOKENS = {
    "task_1": frozenset(TASK_CLASSES[Task.A]),
    "task_2": frozenset(EVAL_CLASSES[Task.B]),
    "task_3": frozenset(EVAL_CLASSES[Task.C]),
}

LABELED_HEADER = ("text_id", "text", "task_1", "task_2", "task_3")
UNLABELED_HEADER = ("text_id", "text")


def tasks_for(language: Language) -> tuple[Task, ...]:
    return (Task.A, Task.B, Task.C) if language.has_task_c else (Task.A, Task.B)


@dataclass(frozen=True)
class Post:
    id: str
    text: str
    language: Language


@dataclass(frozen=True)
class LabelSet:
    task_a: str
    task_b: str = NONE
    task_c: str = NONE

    def __post_init__(self):
        for name, value, allowed in (
            ("task_a", self.task_a, _VALID_TOKENS["task_1"]),
            ("task_b", self.task_b, _VALID_TOKENS["task_2"]),
            ("task_c", self.task_c, _VALID_TOKENS["task_3"]),
        ):
            if value not in allowed:
                raise DataError(f"unknown label {value!r} for {name}")
        if self.task_a == "NOT":
            if self.task_b != NONE or self.task_c != NONE:
                raise DataError(
                    f"inconsistent labels ({self.task_a}, {self.task_b}, {self.task_c}): "
                    "NOT requires NONE for tasks B and C"
                )
        elif self.task_b == NONE:
            raise DataError(
                f"inconsistent labels ({self.task_a}, {self.task_b}, {self.task_c}): "
                "HOF requires a task B class"
            )

    def check_language(self, language: Language) -> None:
        if not language.has_task_c and self.task_c != NONE:
            raise DataError(f"language {language.value} has no task C but got {self.task_c!r}")
        if language.has_task_c and self.task_a == "HOF" and self.task_c == NONE:
            raise DataError(
                f"inconsistent labels ({self.task_a}, {self.task_b}, {self.task_c}): "
                f"HOF requires a task C class for {language.value}"
            )

    def get(self, task: Task) -> str:
        return {Task.A: self.task_a, Task.B: self.task_b, Task.C: self.task_c}[Task.parse(task)]


@dataclass(frozen=True)
class Dataset:
    language: Language
    split: Split
    rows: tuple[tuple[Post, Optional[LabelSet]], ...]
    columns: tuple[str, ...] = LABELED_HEADER

    @property
    def labeled(self) -> bool:
        return len(self.columns) > 2

    @property
    def posts(self) -> list[Post]:
        return [post for post, _ in self.rows]

    @property
    def labels(self) -> list[LabelSet]:
        if not self.labeled:
            raise DataError("dataset carries no labels")
        return [labels for _, labels in self.rows]

    def __len__(self) -> int:
        return len(self.rows)


@dataclass
class DatasetStats:
    language: Language
    counts: dict[Task, dict[str, int]] = field(default_factory=dict)

    def total(self, task: Task) -> int:
        return sum(self.counts.get(Task.parse(task), {}).values())

    def count(self, task: Task, label: str) -> int:
        return self.counts.get(Task.parse(task), {}).get(label, 0)


def _check_text(value: str, where: str) -> None:
    if "\t" in value or "\n" in value or "\r" in value:
        raise DataError(f"{where}: field contains a raw tab or newline")


def load_dataset(path, language, split=Split.TRAIN) -> Dataset:
    """Read a shared-task TSV file.

    The label columns are optional: a header of only ``text_id`` and
    ``text`` loads an unlabeled dataset whose rows carry ``None``.
    Malformed rows are rejected with the offending line number.
    """
    language = Language.parse(language)
    split = Split(split.upper()) if isinstance(split, str) else split
    path = Path(path)
    try:
        raw = path.read_text(encoding="utf-8")
    except FileNotFoundError:
        raise StorageError(f"{path}: no such file") from None
    except UnicodeDecodeError as exc:
        raise DataError(f"{path}: not valid UTF-8 ({exc.reason})") from None
    except OSError as exc:
        raise StorageError(f"{path}: {exc.strerror or exc}") from None

    lines = raw.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    lines = [line[:-1] if line.endswith("\r") else line for line in lines]
    if not lines:
        raise DataError(f"{path}: missing header row")

    header = tuple(lines[0].split("\t"))
    allowed = [LABELED_HEADER, UNLABELED_HEADER]
    if language is Language.DE:
        allowed.append(LABELED_HEADER[:4])
    if header not in allowed:
        raise DataError(f"{path}: unexpected header {list(header)}")
    labeled = len(header) > 2

    rows = []
    seen = set()
    for lineno, line in enumerate(lines[1:], start=2):
        where = f"{path}:{lineno}"
        fields = line.split("\t")
        if len(fields) != len(header):
            raise DataError(f"{where}: expected {len(header)} columns, got {len(fields)}")
        text_id, text = fields[0], fields[1]
        if "\r" in line:
            raise DataError(f"{where}: field contains a raw tab or newline")
        if not text_id:
            raise DataError(f"{where}: empty text_id")
        if text_id in seen:
            raise DataError(f"{where}: duplicate text_id {text_id!r}")
        seen.add(text_id)
        labels = None
        if labeled:
            tokens = fields[2:] + [NONE] * (5 - len(fields))
            for column, token in zip(LABELED_HEADER[2:], tokens):
                if token not in _VALID_TOKENS[column]:
                    raise DataError(f"{where} (id {text_id!r}): unknown label {token!r} in {column}")
            try:
                labels = LabelSet(*tokens)
                labels.check_language(language)
            except DataError as exc:
                raise DataError(f"{where} (id {text_id!r}): {exc}") from None
        rows.append((Post(text_id, text, language), labels))
    return Dataset(language, split, tuple(rows), header)


def dataset_to_tsv(ds: Dataset) -> str:
    out = ["\t".join(ds.columns)]
    for post, labels in ds.rows:
        _check_text(post.text, f"id {post.id!r}")
        fields = [post.id, post.text]
        if ds.labeled:
            fields += [labels.task_a, labels.task_b, labels.task_c][: len(ds.columns) - 2]
        out.append("\t".join(fields))
    return "\n".join(out) + "\n"


def write_atomic(path, data: str | bytes) -> None:
    """Write to a sibling temp file, then rename over ``path``."""
    path = Path(path)
    tmp = path.with_name(f".{path.name}.{os.getpid()}.tmp")
    try:
        if isinstance(data, str):
            tmp.write_text(data, encoding="utf-8", newline="\n")
        else:
            tmp.write_bytes(data)
        os.replace(tmp, path)
    except OSError as exc:
        tmp.unlink(missing_ok=True)
        raise StorageError(f"{path}: {exc.strerror or exc}") from None


def save_dataset(ds: Dataset, path) -> None:
    write_atomic(path, dataset_to_tsv(ds))


def compute_stats(ds: Dataset) -> DatasetStats:
    stats = DatasetStats(ds.language)
    labels = ds.labels if ds.rows else []
    for task in tasks_for(ds.language):
        tally = Counter(ls.get(task) for ls in labels)
        stats.counts[task] = {label: tally.get(label, 0) for label in TASK_CLASSES[task]}
    return stats


def slice_for_task(ds: Dataset, task) -> list[tuple[Post, str]]:
    """Training rows for one sub-task.

    Task A keeps every row; tasks B and C keep only gold-HOF rows.
    """
    task = Task.parse(task)
    if task is Task.C and not ds.language.has_task_c:
        raise ConfigError(f"language {ds.language.value} has no task C")
    pairs = zip(ds.posts, ds.labels)
    if task is Task.A:
        return [(post, ls.task_a) for post, ls in pairs]
    return [(post, ls.get(task)) for post, ls in pairs if ls.task_a == "HOF"]


def format_stats(columns: Sequence[tuple[str, DatasetStats]]) -> str:
    """Render one or more stats columns (e.g. Train, Test) as a text table."""
    if not columns:
        return ""
    language = columns[0][1].language
    lines = [f"Language {language.value}"]
    for task in tasks_for(language):
        lines.append(f"Sub-Task {task.value} " + " ".join(name for name, _ in columns))
        for label in TASK_CLASSES[task]:
            lines.append(f"{label} " + " ".join(str(s.count(task, label)) for _, s in columns))
        lines.append("Total " + " ".join(str(s.total(task)) for _, s in columns))
    return "\n".join(lines) + "\n"

