"""Embedding providers.

Every provider maps a list of strings to an ``(n, output_dim)`` array and
is a pure function of ``(provider_id, text)``. Real encoders are imported
lazily so the package works without torch or model weights.
"""

from __future__ import annotations

import hashlib
import threading
from functools import lru_cache
from typing import Sequence

import numpy as np

from ..errors import BackendError, ConfigError
from .pooling import POOLING_MODES, pool_hidden_states


class EmbeddingProvider:
    provider_id: str
    output_dim: int
    # False means calls are serialized through ``lock``
    thread_safe: bool = True

    def __init__(self):
        self.lock = threading.Lock()

    def embed(self, texts: Sequence[str]) -> np.ndarray:
        raise NotImplementedError

    def embed_one(self, text: str) -> np.ndarray:
        return self.embed([text])[0]

    def __call__(self, texts: Sequence[str]) -> np.ndarray:
        if self.thread_safe:
            out = self.embed(list(texts))
        else:
            with self.lock:
                out = self.embed(list(texts))
        out = np.asarray(out)
        if out.shape != (len(texts), self.output_dim):
            raise BackendError(
                f"{self.provider_id}: expected output shape {(len(texts), self.output_dim)}, got {out.shape}"
            )
        if not np.all(np.isfinite(out)):
            raise BackendError(f"{self.provider_id}: produced non-finite values")
        return out

    def __repr__(self):
        return f"{type(self).__name__}({self.provider_id!r}, dim={self.output_dim})"


def _hash_seed(*parts: str) -> int:
    digest = hashlib.sha256("\x00".join(parts).encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little")


class HashEmbedder(EmbeddingProvider):
    """Deterministic stand-in encoder for tests and desk-scale runs.

    A text's vector is the normalized sum of a Gaussian vector per
    whitespace token plus one for the whole string, each seeded from
    ``sha256(seed, token)``. Texts sharing words therefore land near each
    other (so a classifier can learn from them) while distinct strings,
    including reorderings of the same words, still get distinct vectors.
    """

    WHOLE_TEXT_WEIGHT = 0.5

    def __init__(self, dim: int, seed: int = 0, provider_id: str | None = None):
        super().__init__()
        if int(dim) <= 0:
            raise ConfigError(f"embedding dim must be positive, got {dim}")
        self.output_dim = int(dim)
        self.seed = int(seed)
        self.provider_id = provider_id or f"hash-bow:dim={self.output_dim}:seed={self.seed}"
        self._token_vector = lru_cache(maxsize=65536)(self._make_vector)

    def _make_vector(self, kind: str, token: str) -> np.ndarray:
        rng = np.random.default_rng(_hash_seed(str(self.seed), str(self.output_dim), kind, token))
        vec = rng.standard_normal(self.output_dim)
        vec.flags.writeable = False
        return vec

    def embed_text(self, text: str) -> np.ndarray:
        total = self.WHOLE_TEXT_WEIGHT * self._token_vector("text", text)
        for token in text.split():
            total = total + self._token_vector("token", token)
        return total / np.linalg.norm(total)

    def embed(self, texts):
        if not texts:
            return np.zeros((0, self.output_dim))
        return np.stack([self.embed_text(t) for t in texts])


def test_embedder(dim: int, seed: int) -> HashEmbedder:
    return HashEmbedder(dim, seed)


test_embedder.__test__ = False  # not a pytest test


class TransformerEmbedder(EmbeddingProvider):
    """Masked-LM encoder with layer-averaged mean pooling (768-d for BERT-base)."""

    thread_safe = False

    def __init__(
        self,
        model: str = "bert-base-multilingual-cased",
        last_n_layers: int = 11,
        pooling: str = "token_mean",
        max_length: int = 512,
        batch_size: int = 16,
        output_dim: int = 768,
        revision: str | None = None,
    ):
        super().__init__()
        if pooling not in POOLING_MODES:
            raise ConfigError(f"unknown pooling {pooling!r}; expected one of {POOLING_MODES}")
        self.model_name = model
        self.last_n_layers = int(last_n_layers)
        self.pooling = pooling
        self.max_length = int(max_length)
        self.batch_size = int(batch_size)
        self.output_dim = int(output_dim)
        self.revision = revision
        self.provider_id = f"transformer:{model}@{revision or 'default'}:{pooling}:last{self.last_n_layers}"
        self._model = None
        self._tokenizer = None

    def _load(self):
        if self._model is not None:
            return
        try:
            import torch  # noqa: F401
            from transformers import AutoModel, AutoTokenizer
        except ImportError as exc:
            raise BackendError(f"transformer backend unavailable: {exc}") from None
        try:
            self._tokenizer = AutoTokenizer.from_pretrained(self.model_name, revision=self.revision)
            self._model = AutoModel.from_pretrained(
                self.model_name, revision=self.revision, output_hidden_states=True
            )
        except Exception as exc:
            raise BackendError(f"cannot load {self.model_name}: {exc}") from None
        self._model.eval()
        hidden = self._model.config.hidden_size
        if hidden != self.output_dim:
            raise ConfigError(f"{self.model_name} has hidden size {hidden}, configured {self.output_dim}")

    def embed(self, texts):
        self._load()
        import torch

        out = []
        for start in range(0, len(texts), self.batch_size):
            batch = texts[start : start + self.batch_size]
            enc = self._tokenizer(
                batch, padding=True, truncation=True, max_length=self.max_length, return_tensors="pt"
            )
            with torch.no_grad():
                result = self._model(**enc)
            hidden = torch.stack(result.hidden_states).numpy()
            out.append(
                pool_hidden_states(
                    hidden, enc["attention_mask"].numpy(), self.last_n_layers, self.pooling
                )
            )
        if not out:
            return np.zeros((0, self.output_dim))
        return np.concatenate(out)


class LaserEmbedder(EmbeddingProvider):
    """Language-agnostic 1024-d sentence encoder via the ``laser_encoders`` package."""

    thread_safe = False

    def __init__(self, laser: str = "laser2", lang: str | None = None, model_dir: str | None = None,
                 output_dim: int = 1024):
        super().__init__()
        self.laser = laser
        self.lang = lang
        self.model_dir = model_dir
        self.output_dim = int(output_dim)
        self.provider_id = f"laser:{laser}:{lang or 'any'}"
        self._pipeline = None

    def embed(self, texts):
        if self._pipeline is None:
            try:
                from laser_encoders import LaserEncoderPipeline
            except ImportError as exc:
                raise BackendError(f"LASER backend unavailable: {exc}") from None
            kwargs = {"laser": self.laser}
            if self.lang:
                kwargs["lang"] = self.lang
            if self.model_dir:
                kwargs["model_dir"] = self.model_dir
            try:
                self._pipeline = LaserEncoderPipeline(**kwargs)
            except Exception as exc:
                raise BackendError(f"cannot load LASER encoder: {exc}") from None
        if not texts:
            return np.zeros((0, self.output_dim))
        return np.asarray(self._pipeline.encode_sentences(list(texts)))


class HttpEmbedder(EmbeddingProvider):
    """Client for an external inference runner.

    POSTs ``{"texts": [...]}`` to ``endpoint`` and expects
    ``{"vectors": [[...], ...]}`` back in the same order.
    """

    def __init__(self, endpoint: str, provider_id: str, output_dim: int, timeout: float = 60.0):
        super().__init__()
        self.endpoint = endpoint
        self.provider_id = provider_id
        self.output_dim = int(output_dim)
        self.timeout = timeout

    def embed(self, texts):
        if not texts:
            return np.zeros((0, self.output_dim))
        import httpx

        try:
            resp = httpx.post(self.endpoint, json={"texts": list(texts)}, timeout=self.timeout)
            resp.raise_for_status()
            return np.asarray(resp.json()["vectors"], dtype=np.float64)
        except (httpx.HTTPError, KeyError, ValueError) as exc:
            raise BackendError(f"{self.endpoint}: {exc}") from None


def build_provider(spec: dict) -> EmbeddingProvider:
    """Construct a provider from a config entry (``kind`` selects the class)."""
    spec = dict(spec)
    kind = spec.pop("kind", None)
    try:
        if kind == "test":
            dim = spec.pop("dim", spec.pop("output_dim", None))
            return HashEmbedder(dim, **spec)
        if kind == "transformer":
            return TransformerEmbedder(**spec)
        if kind == "laser":
            return LaserEmbedder(**spec)
        if kind == "http":
            return HttpEmbedder(**spec)
    except TypeError as exc:
        raise ConfigError(f"bad provider config for kind {kind!r}: {exc}") from None
    raise ConfigError(f"unknown provider kind {kind!r}; expected test, transformer, laser or http")
