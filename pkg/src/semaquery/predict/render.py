"""Prompt rendering for marshaled model calls.

A rendered prompt is deterministic text: a system preamble carrying the
output schema and a JSON-only instruction, then the user instruction
with placeholders replaced by bare column names, then the input rows
serialized as a JSON array of key-value objects with a 0-based row_id.
A single row renders as a one-element array so parsing is uniform.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from datetime import datetime

from ..values import JSON_TYPE_NAMES, ValueType, format_datetime


@dataclass(frozen=True)
class RenderedPrompt:
    system: str
    user: str
    flagged: tuple[int, ...] = ()  # rows that carried null input values

    @property
    def text(self) -> str:
        return self.system + "\n\n" + self.user

    def __len__(self) -> int:
        return len(self.text)


def _json_ready(value):
    if isinstance(value, datetime):
        return format_datetime(value)
    return value


def serialize_rows(names: tuple[str, ...], rows: list[tuple]) -> tuple[str, tuple[int, ...]]:
    objects = []
    flagged = []
    for i, row in enumerate(rows):
        obj = {"row_id": i}
        for name, value in zip(names, row):
            obj[name] = _json_ready(value)
        if any(v is None for v in row):
            flagged.append(i)
        objects.append(obj)
    text = json.dumps(objects, separators=(",", ":"), ensure_ascii=False)
    return text, tuple(flagged)


def _schema_lines(outputs: list[tuple[str, ValueType]]) -> list[str]:
    return [f"  {name}: {JSON_TYPE_NAMES[vtype]}" for name, vtype in outputs]


def _preamble(outputs: list[tuple[str, ValueType]], row_count: int,
              strict: bool) -> str:
    lines = []
    if strict:
        lines.append("Your previous reply was not valid JSON.")
    lines.append("Respond with a parsable JSON object or array and nothing else.")
    lines.append("For each input row, return one object carrying its integer "
                 "row_id and the fields:")
    lines.extend(_schema_lines(outputs))
    lines.append(f"Return a JSON array with exactly {row_count} object(s), "
                 "one per input row.")
    if strict:
        lines.append("JSON only: no prose, no explanations, no code fences.")
    return "\n".join(lines)


def render_prompt(instruction: str, input_names: tuple[str, ...],
                  rows: list[tuple], outputs: list[tuple[str, ValueType]],
                  strict: bool = False) -> RenderedPrompt:
    system = _preamble(outputs, len(rows), strict)
    serialized, flagged = serialize_rows(input_names, rows)
    user = instruction.strip() + "\n\nInput rows:\n" + serialized
    return RenderedPrompt(system, user, flagged)


def render_generation(instruction: str, outputs: list[tuple[str, ValueType]],
                      max_rows: int, strict: bool = False) -> RenderedPrompt:
    lines = []
    if strict:
        lines.append("Your previous reply was not valid JSON.")
    lines.append("Respond with a parsable JSON object or array and nothing else.")
    lines.append("Return a JSON array of objects, each carrying the fields:")
    lines.extend(_schema_lines(outputs))
    lines.append(f"Return at most {max_rows} objects.")
    if strict:
        lines.append("JSON only: no prose, no explanations, no code fences.")
    return RenderedPrompt("\n".join(lines), instruction.strip())


def render_aggregate(instruction: str, input_names: tuple[str, ...],
                     member_rows: list[tuple],
                     outputs: list[tuple[str, ValueType]],
                     strict: bool = False) -> RenderedPrompt:
    """One group renders as a single object whose input keys hold arrays."""
    system = _preamble(outputs, 1, strict)
    obj: dict[str, object] = {"row_id": 0}
    for pos, name in enumerate(input_names):
        obj[name] = [_json_ready(row[pos]) for row in member_rows]
    serialized = json.dumps([obj], separators=(",", ":"), ensure_ascii=False)
    user = instruction.strip() + "\n\nInput rows:\n" + serialized
    return RenderedPrompt(system, user)
