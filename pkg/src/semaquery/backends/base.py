"""Backend contract for the predict operator.

A backend is configured once, loaded once, then invoked repeatedly and
concurrently by worker threads. LLM-style backends return raw text in a
BackendResponse; tabular backends return typed records directly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from ..catalog import ModelEntry
from ..predict.config import PredictConfig
from ..predict.render import RenderedPrompt


@dataclass
class BackendResponse:
    text: str | None = None
    records: list[dict] | None = None
    input_tokens: int = 0
    output_tokens: int = 0
    latency_s: float = 0.0


class PredictorBackend:
    """Abstract executor seam; real and mock backends are drop-ins."""

    def config(self, entry: ModelEntry, config: PredictConfig,
               outputs: list[tuple]) -> None:
        raise NotImplementedError

    def load(self) -> None:
        raise NotImplementedError

    def predict_chunk(self, rows: list[dict],
                      prompt: RenderedPrompt) -> BackendResponse:
        """Run inference for marshaled input rows."""
        raise NotImplementedError

    def scan_chunk(self, prompt: RenderedPrompt) -> BackendResponse:
        """Run a generating call that manufactures rows."""
        raise NotImplementedError


def text_tokens(text: str) -> int:
    """The mock tokenizer: one token per four characters, rounded up."""
    return math.ceil(len(text) / 4)
