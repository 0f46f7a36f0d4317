"""Structured-output extraction and typed-value coercion.

The pipeline strips code fences and surrounding prose, parses the JSON
array, matches records to input rows by row_id (falling back to
position), and coerces each declared field to its column type. Missing
or uncoercible fields become Null and flag the row.
"""

from __future__ import annotations

import json
import re

from ..errors import MalformedOutput, RowCountMismatch
from ..values import ValueType, parse_datetime

_FENCE = re.compile(r"```[a-zA-Z]*\s*\n?(.*?)```", re.DOTALL)

_INT_STRING = re.compile(r"^[+-]?\d+$")

_TRUE_WORDS = {"true", "yes"}
_FALSE_WORDS = {"false", "no"}


def _try_loads(text: str):
    try:
        return json.loads(text)
    except (json.JSONDecodeError, ValueError):
        return None


def _extract_json(raw: str):
    data = _try_loads(raw.strip())
    if data is not None:
        return data
    for block in _FENCE.findall(raw):
        data = _try_loads(block.strip())
        if data is not None:
            return data
    for start, end in (("[", "]"), ("{", "}")):
        lo = raw.find(start)
        hi = raw.rfind(end)
        if 0 <= lo < hi:
            data = _try_loads(raw[lo:hi + 1])
            if data is not None:
                return data
    raise MalformedOutput("model output is not parsable JSON")


def _normalize(data) -> list[dict]:
    if isinstance(data, dict):
        # a schema-constrained response wraps the array in an object root
        values = [v for v in data.values() if isinstance(v, list)]
        if len(values) == 1 and len(data) == 1:
            data = values[0]
        else:
            data = [data]
    if not isinstance(data, list) or not all(isinstance(x, dict) for x in data):
        raise MalformedOutput("model output is not an array of objects")
    return data


def coerce_value(value, vtype: ValueType):
    """Return (ok, coerced); ok=False leaves the field Null."""
    if value is None:
        return True, None
    if vtype == ValueType.VARCHAR:
        if isinstance(value, str):
            return True, value
        if isinstance(value, bool):
            return True, "true" if value else "false"
        if isinstance(value, (int, float)):
            return True, json.dumps(value)
        return False, None
    if vtype == ValueType.INTEGER:
        if isinstance(value, bool):
            return False, None
        if isinstance(value, int):
            return True, value
        if isinstance(value, str) and _INT_STRING.match(value.strip()):
            return True, int(value.strip())
        return False, None
    if vtype == ValueType.DOUBLE:
        if isinstance(value, bool):
            return False, None
        if isinstance(value, (int, float)):
            return True, float(value)
        if isinstance(value, str):
            try:
                return True, float(value.strip())
            except ValueError:
                return False, None
        return False, None
    if vtype == ValueType.BOOLEAN:
        if isinstance(value, bool):
            return True, value
        if isinstance(value, str):
            word = value.strip().lower()
            if word in _TRUE_WORDS:
                return True, True
            if word in _FALSE_WORDS:
                return True, False
        return False, None
    if vtype == ValueType.DATETIME:
        if isinstance(value, str):
            try:
                return True, parse_datetime(value)
            except ValueError:
                return False, None
        return False, None
    return False, None


def parse_structured_output(raw: str, outputs: list[tuple[str, ValueType]],
                            expected_rows: int | None):
    """Parse model text into typed records.

    Returns (records, flagged) where records is a list of dicts keyed by
    output name and flagged lists row positions with missing or bad
    fields. Raises MalformedOutput for unparsable text and
    RowCountMismatch when the record count is wrong.
    """
    records = _normalize(_extract_json(raw))
    if expected_rows is not None and len(records) != expected_rows:
        raise RowCountMismatch(expected_rows, len(records))

    if expected_rows is not None:
        records = _align_by_row_id(records, expected_rows)

    out: list[dict] = []
    flagged: list[int] = []
    for i, record in enumerate(records):
        typed = {}
        bad = False
        for name, vtype in outputs:
            if name in record:
                ok, value = coerce_value(record[name], vtype)
                typed[name] = value
                bad = bad or not ok
            else:
                typed[name] = None
                bad = True
        out.append(typed)
        if bad:
            flagged.append(i)
    return out, flagged


def _align_by_row_id(records: list[dict], expected: int) -> list[dict]:
    ids = []
    for record in records:
        rid = record.get("row_id")
        if isinstance(rid, bool) or not isinstance(rid, int):
            return records
        ids.append(rid)
    if sorted(ids) != list(range(expected)):
        return records
    ordered: list[dict] = [{}] * expected
    for rid, record in zip(ids, records):
        ordered[rid] = record
    return ordered
