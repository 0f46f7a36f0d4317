"""Prompt template parsing: `{{col}}` inputs, `{name TYPE}` outputs.

A template is instruction text interleaved with placeholders. `\\{` and
`\\}` escape literal braces. A single-brace placeholder with no TYPE
keyword (e.g. `{name}`) is an input, equivalent to `{{name}}`.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from ..errors import ParseError
from ..values import ValueType

_OUTPUT_TYPES = {
    "VARCHAR": ValueType.VARCHAR,
    "INTEGER": ValueType.INTEGER,
    "INT": ValueType.INTEGER,
    "DOUBLE": ValueType.DOUBLE,
    "DATETIME": ValueType.DATETIME,
    "BOOLEAN": ValueType.BOOLEAN,
    "BOOL": ValueType.BOOLEAN,
}

_IDENT = r"[A-Za-z_][A-Za-z_0-9]*"
_QUALIFIED = rf"{_IDENT}(?:\.{_IDENT})*"


@dataclass(frozen=True)
class Segment:
    kind: str          # "text" | "input" | "output"
    text: str = ""     # literal text (kind == "text")
    name: str = ""     # placeholder name as written
    vtype: ValueType | None = None


@dataclass
class PromptTemplate:
    """Parsed prompt: instruction text plus typed input/output placeholders."""

    raw: str
    segments: list[Segment] = field(default_factory=list)
    inputs: list[str] = field(default_factory=list)            # qualified refs, first-seen order
    outputs: list[tuple[str, ValueType]] = field(default_factory=list)

    def __eq__(self, other) -> bool:
        return isinstance(other, PromptTemplate) and self.raw == other.raw

    def __hash__(self) -> int:
        return hash(self.raw)

    @property
    def instruction(self) -> str:
        """Template text with each placeholder replaced by its bare name."""
        parts = []
        for seg in self.segments:
            if seg.kind == "text":
                parts.append(seg.text)
            else:
                parts.append(seg.name.split(".")[-1])
        return "".join(parts)

    def literal_segments(self) -> list[str]:
        return [s.text for s in self.segments if s.kind == "text"]

    def reconstruct(self) -> str:
        """Rebuild the original raw text from parsed segments."""
        parts = []
        for seg in self.segments:
            if seg.kind == "text":
                parts.append(seg.text.replace("{", "\\{").replace("}", "\\}"))
            elif seg.kind == "input" and seg.vtype is None and not seg.text:
                parts.append("{{" + seg.name + "}}")
            elif seg.kind == "input":
                parts.append("{" + seg.name + "}")
            else:
                parts.append("{" + seg.name + " " + seg.text + "}")
        return "".join(parts)


def parse_prompt(raw: str) -> PromptTemplate:
    """Parse a prompt string into a PromptTemplate.

    Raises ParseError on unbalanced braces, unknown output types, or
    duplicate output names. Output arity is enforced by the binder, not
    here, because predicate-position prompts may omit the output.
    """
    segments: list[Segment] = []
    inputs: list[str] = []
    outputs: list[tuple[str, ValueType]] = []
    seen_outputs: set[str] = set()

    text_buf: list[str] = []
    i = 0
    n = len(raw)

    def flush_text():
        if text_buf:
            segments.append(Segment("text", text="".join(text_buf)))
            text_buf.clear()

    while i < n:
        ch = raw[i]
        if ch == "\\" and i + 1 < n and raw[i + 1] in "{}":
            text_buf.append(raw[i + 1])
            i += 2
            continue
        if ch == "}":
            raise ParseError(f"unbalanced '}}' in prompt at offset {i}")
        if ch != "{":
            text_buf.append(ch)
            i += 1
            continue

        # double-brace input placeholder
        if raw.startswith("{{", i):
            close = raw.find("}}", i + 2)
            if close < 0:
                raise ParseError(f"unterminated '{{{{' in prompt at offset {i}")
            name = raw[i + 2:close].strip()
            if not re.fullmatch(_QUALIFIED, name):
                raise ParseError(f"bad input placeholder {{{{{name}}}}}")
            flush_text()
            segments.append(Segment("input", name=name))
            if name not in inputs:
                inputs.append(name)
            i = close + 2
            continue

        # single-brace: `{name TYPE}` output or `{name}` input
        close = raw.find("}", i + 1)
        if close < 0:
            raise ParseError(f"unterminated '{{' in prompt at offset {i}")
        body = raw[i + 1:close].strip()
        parts = body.split()
        if len(parts) == 1 and re.fullmatch(_QUALIFIED, parts[0]):
            flush_text()
            name = parts[0]
            segments.append(Segment("input", name=name, text="single"))
            if name not in inputs:
                inputs.append(name)
        elif len(parts) == 2 and re.fullmatch(_IDENT, parts[0]):
            name, type_word = parts
            vtype = _OUTPUT_TYPES.get(type_word.upper())
            if vtype is None:
                raise ParseError(f"unknown output type {type_word!r} in prompt")
            if name.lower() in seen_outputs:
                raise ParseError(f"duplicate output name {name!r} in prompt")
            seen_outputs.add(name.lower())
            flush_text()
            segments.append(Segment("output", name=name, text=type_word.upper(), vtype=vtype))
            outputs.append((name, vtype))
        else:
            raise ParseError(f"bad placeholder {{{body}}} in prompt")
        i = close + 1

    flush_text()
    return PromptTemplate(raw=raw, segments=segments, inputs=inputs, outputs=outputs)
