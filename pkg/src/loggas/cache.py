"""Persistent, content-addressed store for form coefficients.

File layout (little endian)::

    header  : b"LGCC" | uint16 version | uint16 reserved        (8 bytes)
    record  : sha256(key) (32 bytes) | float64 value | float64 error

Records are only ever appended; when a key appears more than once the last
record wins.  Keys are canonical strings built by :func:`coefficient_key`,
so the file never needs to store them.
"""

from __future__ import annotations

import fcntl
import hashlib
import os
import struct
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

MAGIC = b"LGCC"
VERSION = 1
_HEADER = struct.Struct("<4sHH")
_RECORD = struct.Struct("<32sdd")


class CacheFormatError(ValueError):
    pass


def coefficient_key(*, family: str, potential: str, exponent: float, K: int, t, u=None,
                    scheme: str) -> str:
    """Canonical key for one coefficient integral.

    ``u`` is the second map of a sgn-kernel pair (``None`` for single integrals).
    """
    ts = ",".join(str(v) for v in t)
    us = "-" if u is None else ",".join(str(v) for v in u)
    return f"v{VERSION}|family={family}|potential={potential}|bq={exponent!r}|K={K}|t={ts}|u={us}|scheme={scheme}"


def _digest(key: str) -> bytes:
    return hashlib.sha256(key.encode()).digest()


@dataclass
class CacheSummary:
    path: str
    version: int
    records: int
    unique: int
    size_bytes: int


class CoefficientCache:
    """Dictionary view of a cache file; concurrent readers, one writer at a time."""

    def __init__(self, path):
        self.path = Path(path)
        self._lock = threading.Lock()
        self._entries: dict = {}
        self._records = 0
        if self.path.exists() and self.path.stat().st_size > 0:
            self._load()

    def _load(self):
        data = self.path.read_bytes()
        if len(data) < _HEADER.size:
            raise CacheFormatError(f"{self.path}: truncated header")
        magic, version, _ = _HEADER.unpack_from(data, 0)
        if magic != MAGIC:
            raise CacheFormatError(f"{self.path}: not a coefficient cache")
        if version != VERSION:
            raise CacheFormatError(f"{self.path}: unsupported version {version}")
        body = len(data) - _HEADER.size
        if body % _RECORD.size:
            raise CacheFormatError(f"{self.path}: trailing partial record")
        entries = {}
        for digest, value, error in _RECORD.iter_unpack(data[_HEADER.size:]):
            entries[digest] = (value, error)
        self._entries = entries
        self._records = body // _RECORD.size

    def get(self, key: str) -> Optional[tuple]:
        """``(value, error)`` or ``None``."""
        return self._entries.get(_digest(key))

    def __contains__(self, key: str) -> bool:
        return _digest(key) in self._entries

    def __len__(self):
        return len(self._entries)

    def put_many(self, items):
        """Append ``(key, value, error)`` triples."""
        items = list(items)
        if not items:
            return
        payload = b"".join(_RECORD.pack(_digest(k), float(v), float(e)) for k, v, e in items)
        with self._lock:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            with open(self.path, "ab") as fh:
                fcntl.flock(fh, fcntl.LOCK_EX)
                try:
                    if fh.tell() == 0:
                        fh.write(_HEADER.pack(MAGIC, VERSION, 0))
                    fh.write(payload)
                    fh.flush()
                    os.fsync(fh.fileno())
                finally:
                    fcntl.flock(fh, fcntl.LOCK_UN)
            for k, v, e in items:
                self._entries[_digest(k)] = (float(v), float(e))
            self._records += len(items)

    def put(self, key: str, value: float, error: float = 0.0):
        self.put_many([(key, value, error)])

    def clear(self):
        with self._lock:
            if self.path.exists():
                self.path.unlink()
            self._entries = {}
            self._records = 0

    def summary(self) -> CacheSummary:
        size = self.path.stat().st_size if self.path.exists() else 0
        return CacheSummary(str(self.path), VERSION, self._records, len(self._entries), size)
