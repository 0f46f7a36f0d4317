"""Typed scalar values and three-valued predicate logic.

A cell is a plain Python object: None, bool, int, float, str, or a
timezone-aware UTC datetime. Column types are tracked separately via
ValueType; bool must be tested before int (bool is an int subclass).
"""

from __future__ import annotations

import email.utils
from datetime import datetime, timezone
from enum import Enum

from .errors import BindError


class ValueType(Enum):
    BOOLEAN = "BOOLEAN"
    INTEGER = "INTEGER"
    DOUBLE = "DOUBLE"
    VARCHAR = "VARCHAR"
    DATETIME = "DATETIME"

    def __str__(self) -> str:
        return self.value


_NUMERIC = {ValueType.INTEGER, ValueType.DOUBLE}

# JSON-schema / prompt-facing names for each type.
JSON_TYPE_NAMES = {
    ValueType.VARCHAR: "string",
    ValueType.INTEGER: "integer",
    ValueType.DOUBLE: "number",
    ValueType.DATETIME: "string",
    ValueType.BOOLEAN: "boolean",
}


def type_of(value) -> ValueType | None:
    """ValueType tag of a Python cell, or None for SQL NULL."""
    if value is None:
        return None
    if isinstance(value, bool):
        return ValueType.BOOLEAN
    if isinstance(value, int):
        return ValueType.INTEGER
    if isinstance(value, float):
        return ValueType.DOUBLE
    if isinstance(value, str):
        return ValueType.VARCHAR
    if isinstance(value, datetime):
        return ValueType.DATETIME
    raise TypeError(f"unsupported cell type: {type(value).__name__}")


def comparable(a: ValueType, b: ValueType) -> bool:
    """Whether a comparison between the two column types is legal."""
    if a == b:
        return True
    return a in _NUMERIC and b in _NUMERIC


def common_type(a: ValueType, b: ValueType) -> ValueType:
    if a == b:
        return a
    if a in _NUMERIC and b in _NUMERIC:
        return ValueType.DOUBLE
    raise BindError(f"no common type for {a} and {b}")


def compare(a, b) -> int | None:
    """Three-valued comparison: -1/0/1, or None when either side is NULL."""
    if a is None or b is None:
        return None
    if a < b:
        return -1
    if a > b:
        return 1
    return 0


def sort_key(value):
    """Key usable by list.sort within one column type; NULLs handled by caller."""
    return value


# --- Kleene three-valued logic -------------------------------------------

def tvl_and(a, b):
    if a is False or b is False:
        return False
    if a is None or b is None:
        return None
    return True


def tvl_or(a, b):
    if a is True or b is True:
        return True
    if a is None or b is None:
        return None
    return False


def tvl_not(a):
    return None if a is None else not a


# --- datetime parsing / formatting ---------------------------------------

def parse_datetime(text: str) -> datetime:
    """Parse ISO-8601 / RFC-3339 (with 'Z' accepted) or RFC-2822 text to UTC."""
    raw = text.strip()
    try:
        dt = datetime.fromisoformat(raw.replace("Z", "+00:00"))
    except ValueError:
        try:
            dt = email.utils.parsedate_to_datetime(raw)
        except (TypeError, ValueError):
            raise ValueError(f"not a datetime: {text!r}") from None
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return dt.astimezone(timezone.utc)


def format_datetime(dt: datetime) -> str:
    """Emit ISO-8601 UTC with a trailing Z; microseconds only when nonzero."""
    dt = dt.astimezone(timezone.utc)
    base = dt.strftime("%Y-%m-%dT%H:%M:%S")
    if dt.microsecond:
        base += f".{dt.microsecond:06d}"
    return base + "Z"


def format_value(value) -> str:
    """Render a cell for table/CSV output. NULL renders empty."""
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, datetime):
        return format_datetime(value)
    if isinstance(value, float):
        return repr(value)
    return str(value)
