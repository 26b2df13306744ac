"""Synthetic labeled corpora whose classes are separable under the hash embedder.

Each class owns a few marker words; a post mixes random filler words with
markers for its gold labels, plus tweet-like noise (URLs, numbers,
mixed case) that preprocessing should neutralize.
"""

from __future__ import annotations

import random

from .corpus import NONE, TASK_CLASSES, Dataset, LabelSet, Language, Post, Split, Task

FILLER = [f"w{i:03d}" for i in range(300)]
MARKERS = {
    "NOT": ["calm", "sunny", "friendly"],
    "HATE": ["hatemark", "bigotword", "slurtoken"],
    "OFFN": ["insultx", "rudeword", "jerkterm"],
    "PRFN": ["cursex", "swearword", "damnterm"],
    "TIN": ["@target", "youguy", "atperson"],
    "UNT": ["generally", "whatever", "nobodyin"],
}


def _noise(rng: random.Random) -> list[str]:
    out = []
    if rng.random() < 0.3:
        out.append(f"https://t.co/{rng.randrange(10**6):x}")
    if rng.random() < 0.3:
        out.append(str(rng.randrange(1000)))
    return out


def synthetic_rows(n: int, language, seed: int = 0, hof_rate: float = 0.5, id_prefix: str = "syn"):
    language = Language.parse(language)
    rng = random.Random(f"{seed}:{language.value}:{id_prefix}")
    rows = []
    for i in range(n):
        if rng.random() < hof_rate:
            b = rng.choice(TASK_CLASSES[Task.B])
            c = rng.choice(TASK_CLASSES[Task.C]) if language.has_task_c else NONE
            labels = LabelSet("HOF", b, c)
            markers = rng.sample(MARKERS[b], 2) + (rng.sample(MARKERS[c], 2) if c != NONE else [])
        else:
            labels = LabelSet("NOT")
            markers = rng.sample(MARKERS["NOT"], 2)
        words = rng.sample(FILLER, 5) + markers + _noise(rng)
        rng.shuffle(words)
        words = [w.upper() if rng.random() < 0.1 and not w.startswith("http") else w for w in words]
        rows.append((Post(f"{id_prefix}{i:05d}", " ".join(words), language), labels))
    return rows


def synthetic_dataset(n: int, language, seed: int = 0, split=Split.TRAIN, **kw) -> Dataset:
    language = Language.parse(language)
    return Dataset(language, split, tuple(synthetic_rows(n, language, seed, **kw)))
