"""Engine: catalogs, session state, and statement execution.

One Engine is one session. Statements run through parse -> bind ->
optimize -> execute; DDL manipulates the catalogs directly. A database
directory, when given, persists models, secrets, and tables between
sessions.
"""

from __future__ import annotations

import json
import time
from pathlib import Path

from .backends.mock import MockBackend, MockFixture
from .backends.remote import RemoteBackend
from .backends.tabular import TabularStub
from .catalog import ModelCatalog, ModelEntry
from .chunk import (ColumnSchema, DEFAULT_CHUNK_CAPACITY, ForeignKey, Table,
                    TableCatalog)
from .csv_io import export_csv, import_csv
from .errors import CatalogError, ExecutionError
from .executor import Executor, PredictRun
from .plan.binder import Binder
from .plan.logical import PlanNode, explain_text
from .plan.optimizer import Optimizer, RewriteTrace, annotate_costs
from .predict.stats import CallStats
from .sql import ast
from .sql.parser import parse, parse_script


class Result:
    """Outcome of one statement."""

    def __init__(self, kind: str):
        self.kind = kind
        self.schema: list[ColumnSchema] = []
        self.rows: list[tuple] = []
        self.message: str | None = None
        self.plan_text: str | None = None
        self.trace: RewriteTrace | None = None
        self.stats = CallStats()
        self.predict_runs: list[PredictRun] = []
        self.warnings: list[str] = []
        self.notices: list[str] = []
        self.elapsed_s = 0.0

    @property
    def columns(self) -> list[str]:
        return [c.name for c in self.schema]

    @property
    def row_count(self) -> int:
        return len(self.rows)

    def __repr__(self) -> str:
        if self.kind == "select":
            return f"Result(select, {self.row_count} rows)"
        return f"Result({self.kind}, {self.message!r})"


class Engine:
    def __init__(self, db_dir: str | Path | None = None,
                 session: dict | None = None,
                 backend: str = "mock",
                 fixtures: str | Path | None = None,
                 capacity: int = DEFAULT_CHUNK_CAPACITY,
                 transport=None):
        self.tables = TableCatalog()
        self.models = ModelCatalog()
        self.session: dict = dict(session or {})
        self.capacity = capacity
        self.backend_kind = backend
        self.transport = transport  # injected HTTP transport for tests
        self._model_backends: dict[str, object] = {}
        self._mock_backend: MockBackend | None = None
        if fixtures is not None:
            self.load_fixtures(fixtures)
        self.db_dir = Path(db_dir) if db_dir is not None else None
        if self.db_dir is not None:
            self.load_catalog()

    # --- wiring -------------------------------------------------------------

    def load_fixtures(self, path: str | Path) -> None:
        self._mock_backend = MockBackend(MockFixture.from_file(path))

    def use_mock(self, backend: MockBackend) -> None:
        self._mock_backend = backend
        self.backend_kind = "mock"

    def register_backend(self, model_name: str, backend) -> None:
        """Pin a backend instance to one model, overriding the default."""
        self._model_backends[model_name.lower()] = backend

    def register_table(self, table: Table, replace: bool = False) -> None:
        self.tables.register(table, replace=replace)

    def import_csv(self, path: str | Path, table_name: str) -> Table:
        table = import_csv(path, table_name, capacity=self.capacity)
        self.tables.register(table, replace=True)
        return table

    def _backend_provider(self, entry: ModelEntry, config, outputs):
        backend = self._model_backends.get(entry.name.lower())
        if backend is None:
            if entry.kind == "TABULAR":
                backend = TabularStub()
            elif self.backend_kind == "mock":
                if self._mock_backend is None:
                    raise ExecutionError(
                        "the mock backend needs a fixtures file; pass "
                        "fixtures= or --fixtures")
                backend = self._mock_backend
            else:
                backend = RemoteBackend(
                    secret_resolver=self.models.resolve_secret,
                    transport=self.transport)
        backend.config(entry, config, outputs)
        backend.load()
        return backend

    # --- statement execution -------------------------------------------------

    def execute(self, sql: str) -> Result:
        return self._dispatch(parse(sql))

    def execute_script(self, sql: str) -> list[Result]:
        return [self._dispatch(stmt) for stmt in parse_script(sql)]

    def _dispatch(self, stmt: ast.Statement) -> Result:
        started = time.perf_counter()
        if isinstance(stmt, ast.SelectStmt):
            result = self._run_select(stmt)
        elif isinstance(stmt, ast.ExplainStmt):
            result = self._run_explain(stmt)
        elif isinstance(stmt, ast.CreateModelStmt):
            result = self._run_create_model(stmt)
        elif isinstance(stmt, ast.CreateTableAsStmt):
            result = self._run_create_table(stmt)
        elif isinstance(stmt, ast.DropModelStmt):
            self.models.drop(stmt.name)
            result = Result("drop_model")
            result.message = f"model {stmt.name} dropped"
        elif isinstance(stmt, ast.SetStmt):
            self.session[stmt.key.lower()] = stmt.value
            result = Result("set")
            result.message = f"{stmt.key.lower()} = {stmt.value!r}"
        elif isinstance(stmt, ast.AlterTableKeyStmt):
            result = self._run_alter(stmt)
        else:
            raise ExecutionError(
                f"cannot execute {type(stmt).__name__}")
        result.elapsed_s = time.perf_counter() - started
        return result

    def _plan(self, stmt: ast.SelectStmt):
        binder = Binder(self.tables, self.models)
        plan = binder.bind_select(stmt)
        optimizer = Optimizer(self.models, self.session)
        optimized, trace = optimizer.optimize(plan)
        return plan, optimized, trace, binder.notices

    def _run_select(self, stmt: ast.SelectStmt,
                    kind: str = "select") -> Result:
        _, plan, trace, notices = self._plan(stmt)
        result = Result(kind)
        result.trace = trace
        result.notices = notices
        result.schema = list(plan.schema)
        executor = Executor(self.tables, self.models, self.session,
                            self._backend_provider, self.capacity)
        try:
            result.rows = executor.rows(plan)
        finally:
            self._finish_runs(executor, result)
        return result

    def _finish_runs(self, executor: Executor, result: Result) -> None:
        result.predict_runs = executor.predict_runs
        for run in executor.predict_runs:
            result.stats.merge(run.stats)
            result.warnings.extend(run.warnings)
            backend = run.operator.backend
            if isinstance(backend, RemoteBackend):
                backend.close()

    def _run_explain(self, stmt: ast.ExplainStmt) -> Result:
        if not isinstance(stmt.target, ast.SelectStmt):
            raise ExecutionError("EXPLAIN supports SELECT statements")
        if stmt.mode == "analyze":
            return self._run_explain_analyze(stmt.target)
        binder = Binder(self.tables, self.models)
        plan = binder.bind_select(stmt.target)
        result = Result("explain")
        result.notices = binder.notices
        if stmt.mode == "optimized":
            optimizer = Optimizer(self.models, self.session)
            plan, trace = optimizer.optimize(plan)
            annotate_costs(plan, self.models, self.session)
            result.trace = trace
            result.plan_text = explain_text(plan, costs=True)
        else:
            result.plan_text = explain_text(plan)
        return result

    def _run_explain_analyze(self, stmt: ast.SelectStmt) -> Result:
        _, plan, trace, notices = self._plan(stmt)
        result = Result("explain")
        result.trace = trace
        result.notices = notices
        executor = Executor(self.tables, self.models, self.session,
                            self._backend_provider, self.capacity)
        try:
            rows = executor.rows(plan)
        finally:
            self._finish_runs(executor, result)
        result.plan_text = self._analyze_text(plan, executor)
        result.message = f"{len(rows)} row(s)"
        return result

    def _analyze_text(self, plan: PlanNode, executor: Executor) -> str:
        by_node = {run.node_id: run for run in executor.predict_runs}
        lines: list[str] = []

        def emit(node: PlanNode, depth: int) -> None:
            rows = executor.row_counts.get(id(node), 0)
            text = "  " * depth + node.label() + f" [rows={rows}"
            run = by_node.get(id(node))
            if run is not None:
                counters = run.stats.counters()
                text += (f", calls={counters['calls']}"
                         f", retries={counters['retries']}"
                         f", cache_hits={counters['cache_hits']}")
            text += "]"
            lines.append(text)
            for child in node.children:
                emit(child, depth + 1)

        emit(plan, 0)
        return "\n".join(lines)

    def _run_create_model(self, stmt: ast.CreateModelStmt) -> Result:
        entry = ModelEntry(
            name=stmt.name,
            kind=stmt.kind,
            path=stmt.path,
            on_prompt=stmt.on_prompt,
            api=stmt.api,
            table=stmt.table,
            features=tuple(stmt.features),
            output_columns=tuple(stmt.output_columns),
            secret=stmt.secret,
            options=dict(stmt.options),
        )
        self.models.create(entry)
        result = Result("create_model")
        result.message = f"model {stmt.name} created"
        return result

    def _run_create_table(self, stmt: ast.CreateTableAsStmt) -> Result:
        inner = self._run_select(stmt.select, kind="create_table")
        table = Table.from_rows(stmt.name, inner.schema, inner.rows,
                                capacity=self.capacity)
        self.tables.register(table)
        n = len(inner.rows)
        inner.message = f"table {stmt.name} created ({n} row{'s' if n != 1 else ''})"
        inner.rows = []
        inner.schema = []
        return inner

    def _run_alter(self, stmt: ast.AlterTableKeyStmt) -> Result:
        table = self.tables.get(stmt.table)
        known = {c.name.lower() for c in table.schema}
        for col in stmt.columns:
            if col.lower() not in known:
                raise CatalogError(
                    f"table {stmt.table} has no column {col}")
        result = Result("alter_table")
        if stmt.key_kind == "primary":
            table.primary_key = list(stmt.columns)
            result.message = f"primary key set on {stmt.table}"
        else:
            ref = self.tables.get(stmt.ref_table)
            ref_known = {c.name.lower() for c in ref.schema}
            for col in stmt.ref_columns:
                if col.lower() not in ref_known:
                    raise CatalogError(
                        f"table {stmt.ref_table} has no column {col}")
            table.foreign_keys.append(ForeignKey(
                list(stmt.columns), stmt.ref_table, list(stmt.ref_columns)))
            result.message = (f"foreign key added on {stmt.table} "
                              f"referencing {stmt.ref_table}")
        return result

    # --- persistence ----------------------------------------------------------

    def save_catalog(self) -> None:
        if self.db_dir is None:
            return
        self.db_dir.mkdir(parents=True, exist_ok=True)
        self.models.save(str(self.db_dir / "models.jsonl"),
                         str(self.db_dir / "secrets.jsonl"))
        tables_dir = self.db_dir / "tables"
        tables_dir.mkdir(exist_ok=True)
        keys: dict[str, dict] = {}
        for name in self.tables.names():
            table = self.tables.get(name)
            csv_text = export_csv(table.rows(), table.schema)
            (tables_dir / f"{name}.csv").write_text(csv_text, encoding="utf-8")
            keys[name] = {
                "primary_key": table.primary_key,
                "foreign_keys": [
                    {"columns": fk.columns, "ref_table": fk.ref_table,
                     "ref_columns": fk.ref_columns}
                    for fk in table.foreign_keys],
            }
        (self.db_dir / "keys.json").write_text(
            json.dumps(keys, indent=2, sort_keys=True) + "\n",
            encoding="utf-8")

    def load_catalog(self) -> None:
        if self.db_dir is None or not self.db_dir.exists():
            return
        models_path = self.db_dir / "models.jsonl"
        secrets_path = self.db_dir / "secrets.jsonl"
        self.models.load(str(models_path), str(secrets_path))
        tables_dir = self.db_dir / "tables"
        if tables_dir.is_dir():
            for path in sorted(tables_dir.glob("*.csv")):
                table = import_csv(path, path.stem, capacity=self.capacity)
                self.tables.register(table, replace=True)
        keys_path = self.db_dir / "keys.json"
        if keys_path.exists():
            keys = json.loads(keys_path.read_text(encoding="utf-8"))
            for name, meta in keys.items():
                if not self.tables.has(name):
                    continue
                table = self.tables.get(name)
                table.primary_key = list(meta.get("primary_key", []))
                table.foreign_keys = [
                    ForeignKey(list(fk["columns"]), fk["ref_table"],
                               list(fk["ref_columns"]))
                    for fk in meta.get("foreign_keys", [])]
