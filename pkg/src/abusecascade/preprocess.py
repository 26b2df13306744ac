"""Rule-based tweet normalization applied before embedding.

Rules, in order: delete URL tokens, lowercase (not for Hindi), replace
each maximal digit run with ``number``, collapse whitespace. Mentions,
punctuation and stop-words are left alone.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Optional, Sequence

from .corpus import Language, Post

URL_RE = re.compile(r"(?<!\S)(?:https?://|www\.)\S*", re.IGNORECASE)
# ASCII and Devanagari digits only
DIGITS_RE = re.compile(r"[0-9०-९]+")
NUMBER_TOKEN = "number"


@dataclass(frozen=True)
class PreprocessConfig:
    remove_urls: bool = True
    lowercase: bool = True
    normalize_numbers: bool = True
    collapse_whitespace: bool = True

    @classmethod
    def from_mapping(cls, data: Optional[dict]) -> "PreprocessConfig":
        from .errors import ConfigError

        data = dict(data or {})
        unknown = set(data) - set(cls.__dataclass_fields__)
        if unknown:
            raise ConfigError(f"unknown preprocessing options: {sorted(unknown)}")
        return cls(**{k: bool(v) for k, v in data.items()})


DEFAULT_CONFIG = PreprocessConfig()


@dataclass(frozen=True)
class PreprocessedText:
    text: str
    source_id: str
    language: Language


def normalize_text(text: str, language, config: PreprocessConfig = DEFAULT_CONFIG) -> str:
    language = Language.parse(language)
    if config.remove_urls:
        text = URL_RE.sub("", text)
    if config.lowercase and language is not Language.HI:
        text = text.lower()
    if config.normalize_numbers:
        text = DIGITS_RE.sub(NUMBER_TOKEN, text)
    if config.collapse_whitespace:
        text = " ".join(text.split())
    return text


def normalize(
    text: str, language, source_id: str = "", config: PreprocessConfig = DEFAULT_CONFIG
) -> PreprocessedText:
    language = Language.parse(language)
    return PreprocessedText(normalize_text(text, language, config), source_id, language)


def normalize_batch(
    posts: Sequence[Post], config: PreprocessConfig = DEFAULT_CONFIG
) -> list[PreprocessedText]:
    return [normalize(p.text, p.language, p.id, config) for p in posts]
