"""Prompt deduplication cache.

Keys combine the model name, a hash of the prompt template, and the
ordered input values, so two templates over the same column never
collide. The cache lives for one predict operator instance.
"""

from __future__ import annotations

import hashlib
import threading

CacheKey = tuple

_MISSING = object()


def template_hash(raw: str) -> str:
    return hashlib.sha256(raw.encode("utf-8")).hexdigest()[:16]


def make_key(model: str, tmpl_hash: str, values: tuple) -> CacheKey:
    return (model, tmpl_hash) + values


class DedupCache:
    def __init__(self):
        self._lock = threading.Lock()
        self._entries: dict[CacheKey, dict] = {}
        self.hits = 0
        self.misses = 0

    def lookup(self, key: CacheKey):
        """Return the cached record, or None after counting a miss."""
        with self._lock:
            record = self._entries.get(key, _MISSING)
            if record is _MISSING:
                self.misses += 1
                return None
            self.hits += 1
            return record

    def peek(self, key: CacheKey):
        with self._lock:
            record = self._entries.get(key, _MISSING)
            return None if record is _MISSING else record

    def store(self, key: CacheKey, record: dict) -> None:
        # concurrent duplicate keys overwrite; outputs are equal by purity
        with self._lock:
            self._entries[key] = record

    def __len__(self) -> int:
        with self._lock:
            return len(self._entries)
