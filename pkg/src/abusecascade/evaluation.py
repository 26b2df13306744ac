"""Per-class F1, macro F1 and shared-task style report tables."""

from __future__ import annotations

import json
from dataclasses import dataclass
from decimal import ROUND_HALF_EVEN, ROUND_HALF_UP, Decimal
from typing import Iterable, Optional, Sequence

import numpy as np

from . import __version__
from .corpus import EVAL_CLASSES, Language, LabelSet, Task, tasks_for
from .errors import ConfigError, DataError


@dataclass(frozen=True)
class ConfusionMatrix:
    class_list: tuple[str, ...]
    counts: np.ndarray  # rows = gold, columns = predicted

    @property
    def total(self) -> int:
        return int(self.counts.sum())


@dataclass(frozen=True)
class EvaluationReport:
    language: Language
    task: Task
    per_class_f1: dict[str, float]
    macro_f1: float
    support: dict[str, int]

    def to_dict(self) -> dict:
        return {
            "language": self.language.value,
            "task": self.task.value,
            "per_class_f1": dict(self.per_class_f1),
            "macro_f1": self.macro_f1,
            "support": dict(self.support),
        }


def confusion(gold: Sequence[str], pred: Sequence[str], class_list: Sequence[str]) -> ConfusionMatrix:
    if len(gold) != len(pred):
        raise DataError(f"gold has {len(gold)} labels but pred has {len(pred)}")
    index = {c: i for i, c in enumerate(class_list)}
    counts = np.zeros((len(class_list), len(class_list)), dtype=np.int64)
    for g, p in zip(gold, pred):
        try:
            counts[index[g], index[p]] += 1
        except KeyError as exc:
            raise DataError(f"label {exc.args[0]!r} not in {list(class_list)}") from None
    return ConfusionMatrix(tuple(class_list), counts)


def _ratio(num: float, den: float) -> float:
    return num / den if den else 0.0


def per_class_f1(cm: ConfusionMatrix) -> dict[str, float]:
    """F1 per class; every 0/0 (precision, recall or F1) counts as 0."""
    counts = cm.counts
    out = {}
    for i, label in enumerate(cm.class_list):
        tp = int(counts[i, i])
        fp = int(counts[:, i].sum()) - tp
        fn = int(counts[i, :].sum()) - tp
        precision = _ratio(tp, tp + fp)
        recall = _ratio(tp, tp + fn)
        out[label] = _ratio(2 * precision * recall, precision + recall)
    return out


def macro_f1(per_class: dict[str, float], class_set: Iterable[str]) -> float:
    classes = list(class_set)
    if not classes:
        raise DataError("macro F1 over an empty class set")
    missing = [c for c in classes if c not in per_class]
    if missing:
        raise DataError(f"no per-class F1 for {missing}")
    return sum(per_class[c] for c in classes) / len(classes)


def evaluate_task(gold: Sequence[str], pred: Sequence[str], language, task) -> EvaluationReport:
    language, task = Language.parse(language), Task.parse(task)
    classes = EVAL_CLASSES[task]
    cm = confusion(gold, pred, classes)
    f1 = per_class_f1(cm)
    support = {c: int(cm.counts[i].sum()) for i, c in enumerate(classes)}
    return EvaluationReport(language, task, f1, macro_f1(f1, classes), support)


def evaluate_cascade(
    gold: Sequence[LabelSet], pred: Sequence[LabelSet], language
) -> list[EvaluationReport]:
    """One report per sub-task the language has, each over every row.

    Tasks B and C score NONE as an ordinary class, so a gold-NOT row
    predicted NOT is a true positive for NONE.
    """
    language = Language.parse(language)
    if len(gold) != len(pred):
        raise DataError(f"gold has {len(gold)} rows but pred has {len(pred)}")
    return [
        evaluate_task([g.get(t) for g in gold], [p.get(t) for p in pred], language, t)
        for t in tasks_for(language)
    ]


ROUNDING = {"half-up": ROUND_HALF_UP, "half-even": ROUND_HALF_EVEN}


def round_score(value: float, mode: str = "half-even", places: int = 2) -> str:
    """Format a score to ``places`` decimals.

    The float is first snapped to 9 decimals so that binary noise
    (0.615 is stored as 0.61499999...) does not decide ties.
    """
    try:
        rounding = ROUNDING[mode]
    except KeyError:
        raise ConfigError(f"unknown rounding mode {mode!r}; expected one of {sorted(ROUNDING)}") from None
    snapped = Decimal(value).quantize(Decimal("1e-9"), rounding=ROUND_HALF_EVEN)
    return str(snapped.quantize(Decimal(1).scaleb(-places), rounding=rounding))


def _text_tables(reports: Sequence[EvaluationReport], rounding: str) -> str:
    blocks = []
    tasks = sorted({r.task for r in reports}, key=lambda t: t.value)
    for task in tasks:
        group = [r for r in reports if r.task is task]
        lines = [f"Sub-task {task.value}", "Language " + " ".join(r.language.value for r in group)]
        for label in EVAL_CLASSES[task]:
            cells = [round_score(r.per_class_f1[label], rounding) if label in r.per_class_f1 else "-"
                     for r in group]
            lines.append(f"{label} " + " ".join(cells))
        lines.append("Total " + " ".join(round_score(r.macro_f1, rounding) for r in group))
        blocks.append("\n".join(lines))
    return "\n\n".join(blocks) + "\n" if blocks else ""


def render_report(
    reports: Sequence[EvaluationReport],
    format: str = "text-table",
    rounding: str = "half-even",
    model_checksums: Optional[dict[str, str]] = None,
) -> str:
    """Render reports as text tables (rows per class, then Total) or JSON.

    The JSON form keeps full precision and is canonical (sorted keys).
    """
    if not reports:
        return ""
    if format == "text-table":
        return _text_tables(reports, rounding)
    if format == "machine-readable":
        docs = []
        for r in reports:
            doc = r.to_dict()
            doc["pipeline_version"] = __version__
            doc["model_checksums"] = dict(model_checksums or {})
            docs.append(doc)
        return json.dumps(docs, sort_keys=True, indent=2) + "\n"
    raise ConfigError(f"unknown report format {format!r}")


def reports_from_json(text: str) -> list[EvaluationReport]:
    return [
        EvaluationReport(
            Language.parse(d["language"]),
            Task.parse(d["task"]),
            {k: float(v) for k, v in d["per_class_f1"].items()},
            float(d["macro_f1"]),
            {k: int(v) for k, v in d["support"].items()},
        )
        for d in json.loads(text)
    ]
