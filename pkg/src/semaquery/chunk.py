"""Columnar batches: ColumnSchema, DataChunk, Table.

A DataChunk is the unit flowing between operators: a list of column
vectors sharing one row count, capped at the configured chunk capacity.
Tables are immutable during query execution.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Iterator

from .errors import CatalogError
from .values import ValueType

DEFAULT_CHUNK_CAPACITY = 2048


@dataclass(frozen=True)
class ColumnSchema:
    name: str
    type: ValueType
    origin: str = "stored"  # "stored" | "predicted"

    def renamed(self, name: str) -> "ColumnSchema":
        return ColumnSchema(name, self.type, self.origin)


class DataChunk:
    """A vectorized, column-ordered set of tuples."""

    __slots__ = ("schema", "columns", "row_count")

    def __init__(self, schema: list[ColumnSchema], columns: list[list]):
        if len(schema) != len(columns):
            raise ValueError("schema/column count mismatch")
        n = len(columns[0]) if columns else 0
        for col in columns:
            if len(col) != n:
                raise ValueError("ragged column vectors in chunk")
        self.schema = schema
        self.columns = columns
        self.row_count = n

    @classmethod
    def empty(cls, schema: list[ColumnSchema]) -> "DataChunk":
        return cls(schema, [[] for _ in schema])

    @classmethod
    def from_rows(cls, schema: list[ColumnSchema], rows: Iterable[tuple]) -> "DataChunk":
        cols: list[list] = [[] for _ in schema]
        for row in rows:
            for i, v in enumerate(row):
                cols[i].append(v)
        return cls(schema, cols)

    def row(self, i: int) -> tuple:
        return tuple(col[i] for col in self.columns)

    def rows(self) -> Iterator[tuple]:
        for i in range(self.row_count):
            yield self.row(i)

    def take(self, indexes: list[int]) -> "DataChunk":
        return DataChunk(self.schema, [[col[i] for i in indexes] for col in self.columns])

    def with_columns(self, extra_schema: list[ColumnSchema], extra_columns: list[list]) -> "DataChunk":
        return DataChunk(list(self.schema) + list(extra_schema),
                         list(self.columns) + list(extra_columns))

    def column_index(self, name: str) -> int:
        for i, c in enumerate(self.schema):
            if c.name == name:
                return i
        raise KeyError(name)


def rechunk(chunks: Iterable[DataChunk], schema: list[ColumnSchema],
            capacity: int = DEFAULT_CHUNK_CAPACITY) -> Iterator[DataChunk]:
    """Repack a chunk stream so every output chunk has row_count <= capacity."""
    pending: list[tuple] = []
    for chunk in chunks:
        for row in chunk.rows():
            pending.append(row)
            if len(pending) == capacity:
                yield DataChunk.from_rows(schema, pending)
                pending = []
    if pending:
        yield DataChunk.from_rows(schema, pending)


@dataclass
class ForeignKey:
    columns: list[str]
    ref_table: str
    ref_columns: list[str]


class Table:
    """In-memory table: a schema plus a sequence of uniform DataChunks."""

    def __init__(self, name: str, schema: list[ColumnSchema],
                 capacity: int = DEFAULT_CHUNK_CAPACITY):
        self.name = name
        self.schema = list(schema)
        self.capacity = capacity
        self.chunks: list[DataChunk] = []
        self.primary_key: list[str] = []
        self.foreign_keys: list[ForeignKey] = []
        # per-column average value byte length, used for operator ordering
        self.avg_byte_len: dict[str, float] = {}

    @classmethod
    def from_rows(cls, name: str, schema: list[ColumnSchema], rows: Iterable[tuple],
                  capacity: int = DEFAULT_CHUNK_CAPACITY) -> "Table":
        table = cls(name, schema, capacity)
        table.append_rows(rows)
        table.refresh_stats()
        return table

    def append_rows(self, rows: Iterable[tuple]) -> None:
        buf: list[tuple] = []
        for row in rows:
            if len(row) != len(self.schema):
                raise ValueError(f"row arity {len(row)} != schema arity {len(self.schema)}")
            buf.append(row)
            if len(buf) == self.capacity:
                self.chunks.append(DataChunk.from_rows(self.schema, buf))
                buf = []
        if buf:
            self.chunks.append(DataChunk.from_rows(self.schema, buf))

    @property
    def row_count(self) -> int:
        return sum(c.row_count for c in self.chunks)

    def rows(self) -> Iterator[tuple]:
        for chunk in self.chunks:
            yield from chunk.rows()

    def refresh_stats(self) -> None:
        totals = {c.name: 0 for c in self.schema}
        counts = {c.name: 0 for c in self.schema}
        for chunk in self.chunks:
            for col_schema, col in zip(chunk.schema, chunk.columns):
                for v in col:
                    if v is not None:
                        totals[col_schema.name] += len(str(v))
                        counts[col_schema.name] += 1
        self.avg_byte_len = {
            name: (totals[name] / counts[name]) if counts[name] else 0.0
            for name in totals
        }


class TableCatalog:
    """Name -> Table registry for one engine instance."""

    def __init__(self):
        self._tables: dict[str, Table] = {}

    def register(self, table: Table, replace: bool = False) -> None:
        key = table.name.lower()
        if key in self._tables and not replace:
            raise CatalogError(f"table already exists: {table.name}")
        self._tables[key] = table

    def get(self, name: str) -> Table:
        try:
            return self._tables[name.lower()]
        except KeyError:
            raise CatalogError(f"table not found: {name}") from None

    def has(self, name: str) -> bool:
        return name.lower() in self._tables

    def drop(self, name: str) -> None:
        if name.lower() not in self._tables:
            raise CatalogError(f"table not found: {name}")
        del self._tables[name.lower()]

    def names(self) -> list[str]:
        return sorted(t.name for t in self._tables.values())
