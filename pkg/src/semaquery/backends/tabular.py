"""Tabular model stub.

Classical model execution is out of scope; the stub applies a fixture
function over feature rows so tabular models flow through the same
predict pipeline as LLMs in tests.
"""

from __future__ import annotations

import threading
import zlib

from ..errors import BackendError
from .base import BackendResponse, PredictorBackend


def default_tabular_fn(entry):
    """Deterministic stand-in: hash the features into each output."""
    def fn(row: dict) -> dict:
        seed = "|".join(str(row[name]) for name in entry.features)
        digest = zlib.crc32(seed.encode("utf-8"))
        out = {}
        for i, (name, vtype) in enumerate(entry.output_columns):
            value = (digest >> (i * 3)) % 7
            out[name] = value if str(vtype) in ("INTEGER", "DOUBLE") else str(value)
        return out
    return fn


class TabularStub(PredictorBackend):
    def __init__(self, fn=None):
        self.fn = fn
        self.entry = None
        self.log: list[int] = []
        self._lock = threading.Lock()

    def config(self, entry, config, outputs) -> None:
        self.entry = entry
        if self.fn is None:
            self.fn = default_tabular_fn(entry)

    def load(self) -> None:
        pass

    def predict_chunk(self, rows: list[dict], prompt=None) -> BackendResponse:
        with self._lock:
            self.log.append(len(rows))
        for row in rows:
            if len(row) != len(self.entry.features):
                raise BackendError(
                    f"expected {len(self.entry.features)} features, "
                    f"got {len(row)}", retryable=False)
        return BackendResponse(records=[self.fn(row) for row in rows])

    def scan_chunk(self, prompt) -> BackendResponse:
        raise BackendError("tabular models cannot generate tables",
                           retryable=False)
