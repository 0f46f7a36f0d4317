"""Shared helpers: table builders, fixture files, engine factories."""

from __future__ import annotations

import json

import pytest

from semaquery.chunk import ColumnSchema, ForeignKey, Table
from semaquery.engine import Engine
from semaquery.values import ValueType

V = ValueType.VARCHAR
I = ValueType.INTEGER
D = ValueType.DOUBLE
B = ValueType.BOOLEAN
DT = ValueType.DATETIME


def make_table(name: str, cols: list[tuple[str, ValueType]], rows,
               capacity: int = 2048, primary_key=None,
               foreign_keys=()) -> Table:
    schema = tuple(ColumnSchema(n, t) for n, t in cols)
    table = Table.from_rows(name, schema, rows, capacity=capacity)
    if primary_key:
        table.primary_key = tuple(primary_key)
    for columns, ref_table, ref_columns in foreign_keys:
        table.foreign_keys.append(
            ForeignKey(tuple(columns), ref_table, tuple(ref_columns)))
    return table


def write_fixture(path, default: dict, rules: list[dict] = (),
                  generation: list[dict] | None = None) -> str:
    """Write a mock fixture file; rules take raw record dict fields."""
    lines = [{"record": "header", "version": 1}]
    for rule in rules:
        lines.append({"record": "rule", **rule})
    if generation is not None:
        lines.append({"record": "generation", "rows": generation})
    lines.append({"record": "default", "output": default})
    path.write_text("\n".join(json.dumps(l) for l in lines) + "\n",
                    encoding="utf-8")
    return str(path)


@pytest.fixture
def fixture_file(tmp_path):
    def build(default: dict, rules: list[dict] = (),
              generation: list[dict] | None = None,
              name: str = "fixture.jsonl") -> str:
        return write_fixture(tmp_path / name, default, rules, generation)
    return build


@pytest.fixture
def engine_factory(fixture_file):
    """Engine builder with a mock model registered and tables loaded."""
    def build(tables=(), default=None, rules=(), generation=None,
              session=None, models=("judge",), name="fixture.jsonl",
              **engine_kwargs) -> Engine:
        path = fixture_file(default or {"answer": True}, rules, generation,
                            name=name)
        engine = Engine(fixtures=path, session=dict(session or {}),
                        **engine_kwargs)
        for model in models:
            engine.execute(f"CREATE LLM MODEL {model} PATH 'mock-llm' "
                           "ON PROMPT")
        for table in tables:
            engine.register_table(table)
        return engine
    return build
