"""CSV (RFC-4180, UTF-8) import with type inference, and export."""

from __future__ import annotations

import csv
import io
from pathlib import Path
from typing import Iterable

from .chunk import DEFAULT_CHUNK_CAPACITY, ColumnSchema, Table
from .errors import IngestError
from .values import ValueType, format_value, parse_datetime

_BOOL_WORDS = {"true": True, "false": False}


def _try_int(text: str):
    t = text.strip()
    if not t:
        return None
    try:
        return int(t, 10)
    except ValueError:
        return None


def _try_double(text: str):
    t = text.strip()
    if not t:
        return None
    try:
        return float(t)
    except ValueError:
        return None


def _try_bool(text: str):
    return _BOOL_WORDS.get(text.strip().lower())


def _try_datetime(text: str):
    t = text.strip()
    # require a date-like shape before attempting the full parser; bare
    # integers such as "2021" must stay numeric
    if len(t) < 8 or t[:4].isdigit() is False or "-" not in t:
        return None
    try:
        return parse_datetime(t)
    except ValueError:
        return None


# Inference precedence: INTEGER, DOUBLE, BOOLEAN, DATETIME, else VARCHAR.
_INFER_ORDER = [
    (ValueType.INTEGER, _try_int),
    (ValueType.DOUBLE, _try_double),
    (ValueType.BOOLEAN, _try_bool),
    (ValueType.DATETIME, _try_datetime),
]


def infer_column_type(values: Iterable[str]) -> ValueType:
    """Narrowest ValueType accepting every non-empty value; VARCHAR otherwise."""
    candidates = [vt for vt, _ in _INFER_ORDER]
    saw_value = False
    for text in values:
        if text.strip() == "":
            continue
        saw_value = True
        surviving = []
        for vt in candidates:
            parse = dict(_INFER_ORDER)[vt]
            if parse(text) is not None:
                surviving.append(vt)
        candidates = surviving
        if not candidates:
            return ValueType.VARCHAR
    if not saw_value or not candidates:
        return ValueType.VARCHAR
    return candidates[0]


def convert_cell(text: str, vt: ValueType):
    """Parse one CSV field as the given type; empty fields become NULL."""
    if text.strip() == "":
        return None
    if vt == ValueType.INTEGER:
        v = _try_int(text)
    elif vt == ValueType.DOUBLE:
        v = _try_double(text)
    elif vt == ValueType.BOOLEAN:
        v = _try_bool(text)
    elif vt == ValueType.DATETIME:
        v = _try_datetime(text)
    else:
        return text
    if v is None:
        raise IngestError(f"cannot parse {text!r} as {vt}")
    return v


def import_csv(path: str | Path, table_name: str, header: bool = True,
               infer_types: bool = True,
               capacity: int = DEFAULT_CHUNK_CAPACITY) -> Table:
    """Load a CSV file into a new Table.

    Raises IngestError naming the 1-based line number on ragged rows.
    Columns whose values fit no narrower type become VARCHAR.
    """
    path = Path(path)
    try:
        raw = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise IngestError(f"cannot read {path}: {exc}") from exc

    reader = csv.reader(io.StringIO(raw))
    rows = list(reader)
    if not rows:
        raise IngestError(f"{path}: empty file (no header)")

    if header:
        names = [c.strip() for c in rows[0]]
        data_rows = rows[1:]
        first_data_line = 2
    else:
        names = [f"column{i}" for i in range(len(rows[0]))]
        data_rows = rows
        first_data_line = 1

    width = len(names)
    for offset, row in enumerate(data_rows):
        if len(row) != width:
            raise IngestError(
                f"{path}: ragged row at line {first_data_line + offset}: "
                f"expected {width} fields, got {len(row)}")

    if infer_types and data_rows:
        types = [infer_column_type(row[i] for row in data_rows) for i in range(width)]
    else:
        types = [ValueType.VARCHAR] * width

    schema = [ColumnSchema(name, vt) for name, vt in zip(names, types)]
    converted = (
        tuple(convert_cell(row[i], types[i]) for i in range(width))
        for row in data_rows
    )
    return Table.from_rows(table_name, schema, converted, capacity=capacity)


def export_csv(table_rows: Iterable[tuple], schema: list[ColumnSchema]) -> str:
    """Serialize rows to RFC-4180 CSV text with a header line."""
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow([c.name for c in schema])
    for row in table_rows:
        writer.writerow([format_value(v) for v in row])
    return out.getvalue()
