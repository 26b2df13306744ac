"""Single-file persistent embedding cache.

Layout::

    header:  b"EMBC" | version u16 | float width u8
    record:  key (32 bytes) | dim u32 | dim x f32 LE | crc32 u32

All integers little-endian. The key is the SHA-256 of the provider id and
the preprocessed text; the CRC covers key, dim and payload. Records are
appended; a corrupted record is rewritten in place once recomputed.
"""

from __future__ import annotations

import hashlib
import logging
import os
import struct
import threading
import zlib
from pathlib import Path

import numpy as np

from ..errors import StorageError

log = logging.getLogger(__name__)

MAGIC = b"EMBC"
VERSION = 1
FLOAT_WIDTH = 4
_HEADER = struct.Struct("<4sHB")
_RECORD_HEAD = struct.Struct("<32sI")
_CRC = struct.Struct("<I")


def cache_key(provider_id: str, text: str) -> bytes:
    pid = provider_id.encode("utf-8")
    h = hashlib.sha256()
    h.update(struct.pack("<I", len(pid)))
    h.update(pid)
    h.update(text.encode("utf-8"))
    return h.digest()


class FeatureCache:
    """Content-addressed vector store backed by one file.

    Reads use ``os.pread`` and may run concurrently; writes are serialized
    by an internal lock. Only one process should write a given file.
    """

    def __init__(self, path):
        self.path = Path(path)
        self._lock = threading.Lock()
        self._index: dict[bytes, tuple[int, int]] = {}
        self.hits = 0
        self.misses = 0
        self.corrupt = 0
        try:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            self._fd = os.open(self.path, os.O_RDWR | os.O_CREAT, 0o644)
        except OSError as exc:
            raise StorageError(f"{self.path}: cannot open cache ({exc.strerror or exc})") from None
        try:
            self._load_index()
        except BaseException:
            os.close(self._fd)
            raise

    def _load_index(self):
        size = os.fstat(self._fd).st_size
        if size == 0:
            os.pwrite(self._fd, _HEADER.pack(MAGIC, VERSION, FLOAT_WIDTH), 0)
            self._end = _HEADER.size
            return
        head = os.pread(self._fd, _HEADER.size, 0)
        if len(head) < _HEADER.size:
            raise StorageError(f"{self.path}: truncated cache header")
        magic, version, width = _HEADER.unpack(head)
        if magic != MAGIC:
            raise StorageError(f"{self.path}: not an embedding cache (bad magic)")
        if version != VERSION or width != FLOAT_WIDTH:
            raise StorageError(f"{self.path}: unsupported cache version {version} / float width {width}")
        offset = _HEADER.size
        while offset + _RECORD_HEAD.size <= size:
            key, dim = _RECORD_HEAD.unpack(os.pread(self._fd, _RECORD_HEAD.size, offset))
            length = _RECORD_HEAD.size + dim * FLOAT_WIDTH + _CRC.size
            if offset + length > size:
                break
            self._index[key] = (offset, dim)
            offset += length
        if offset != size:
            log.warning("%s: dropping %d trailing bytes of an incomplete record", self.path, size - offset)
            os.ftruncate(self._fd, offset)
        self._end = offset

    def __len__(self):
        return len(self._index)

    def __contains__(self, key: bytes):
        return key in self._index

    def get(self, key: bytes):
        """Stored vector as float32, or None on a miss or a corrupted record."""
        entry = self._index.get(key)
        if entry is None:
            return None
        offset, dim = entry
        length = _RECORD_HEAD.size + dim * FLOAT_WIDTH + _CRC.size
        try:
            blob = os.pread(self._fd, length, offset)
        except OSError as exc:
            raise StorageError(f"{self.path}: read failed ({exc.strerror or exc})") from None
        ok = len(blob) == length
        if ok:
            body, (crc,) = blob[: -_CRC.size], _CRC.unpack(blob[-_CRC.size :])
            ok = zlib.crc32(body) == crc and body[:32] == key
        if not ok:
            log.warning("%s: corrupted entry at offset %d, will recompute", self.path, offset)
            self.corrupt += 1
            return None
        return np.frombuffer(body, dtype="<f4", offset=_RECORD_HEAD.size).astype(np.float32)

    def put(self, key: bytes, vector) -> np.ndarray:
        vec = np.ascontiguousarray(vector, dtype="<f4").ravel()
        body = _RECORD_HEAD.pack(key, vec.size) + vec.tobytes()
        record = body + _CRC.pack(zlib.crc32(body))
        with self._lock:
            entry = self._index.get(key)
            # same-size records (e.g. a recomputed corrupt one) are overwritten in place
            offset = entry[0] if entry and entry[1] == vec.size else self._end
            try:
                written = os.pwrite(self._fd, record, offset)
            except OSError as exc:
                raise StorageError(f"{self.path}: write failed ({exc.strerror or exc})") from None
            if written != len(record):
                raise StorageError(f"{self.path}: short write")
            if offset == self._end:
                self._end += len(record)
            self._index[key] = (offset, vec.size)
        return vec.astype(np.float32)

    def get_or_compute(self, text, provider) -> np.ndarray:
        """Cached ``provider`` output for a preprocessed text."""
        return self.get_or_compute_many([text], provider)[0]

    def get_or_compute_many(self, texts, provider) -> np.ndarray:
        keys = [cache_key(provider.provider_id, _raw(t)) for t in texts]
        out = np.empty((len(texts), provider.output_dim), dtype=np.float32)
        todo = []
        for i, key in enumerate(keys):
            vec = self.get(key)
            if vec is not None and vec.size == provider.output_dim:
                out[i] = vec
                self.hits += 1
            else:
                todo.append(i)
        if todo:
            self.misses += len(todo)
            # de-duplicate so each distinct text is embedded once
            unique = {}
            for i in todo:
                unique.setdefault(keys[i], []).append(i)
            firsts = [idxs[0] for idxs in unique.values()]
            computed = provider([_raw(texts[i]) for i in firsts])
            for vec, (key, idxs) in zip(computed, unique.items()):
                stored = self.put(key, vec)
                out[idxs] = stored
        return out

    def flush(self):
        os.fsync(self._fd)

    def close(self):
        if self._fd is not None:
            os.close(self._fd)
            self._fd = None

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def _raw(text) -> str:
    return text if isinstance(text, str) else text.text
