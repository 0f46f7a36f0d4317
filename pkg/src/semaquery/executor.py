"""Physical execution of logical plans over chunk streams.

Operators process one DataChunk at a time; aggregation and sorting
materialize their input. Chunking is invisible in results: any chunk
capacity yields the same rows in the same order.
"""

from __future__ import annotations

from functools import cmp_to_key

from .catalog import ModelCatalog
from .chunk import DEFAULT_CHUNK_CAPACITY, ColumnSchema, DataChunk, rechunk
from .errors import ExecutionError
from .expressions import ColumnRef, Comparison, conjoin, evaluate, split_conjuncts
from .plan.logical import (
    AGGREGATE,
    AggSpec,
    Aggregate,
    Filter,
    Get,
    Join,
    Limit,
    Order,
    PlanNode,
    Predict,
    PredictInfo,
    Project,
    TABLE_GENERATION,
)
from .predict.config import configure
from .predict.operator import PredictOperator
from .values import compare


class PredictRun:
    """Execution record for one predict site, surfaced by EXPLAIN ANALYZE."""

    def __init__(self, label: str, model: str, operator: PredictOperator,
                 node_id: int = 0):
        self.label = label
        self.model = model
        self.operator = operator
        self.node_id = node_id

    @property
    def stats(self):
        return self.operator.stats

    @property
    def warnings(self) -> list[str]:
        return self.operator.warnings


class Executor:
    def __init__(self, tables, models: ModelCatalog, session: dict,
                 backend_provider, capacity: int = DEFAULT_CHUNK_CAPACITY):
        self.tables = tables
        self.models = models
        self.session = session
        self.backend_provider = backend_provider
        self.capacity = capacity
        self.predict_runs: list[PredictRun] = []
        self.row_counts: dict[int, int] = {}  # node id -> rows out

    def run(self, plan: PlanNode) -> list[DataChunk]:
        return list(self.execute(plan))

    def rows(self, plan: PlanNode) -> list[tuple]:
        out: list[tuple] = []
        for chunk in self.execute(plan):
            out.extend(chunk.rows())
        return out

    # --- dispatch ---

    def execute(self, node: PlanNode):
        chunks = self._execute_inner(node)
        for chunk in chunks:
            self.row_counts[id(node)] = (self.row_counts.get(id(node), 0)
                                         + chunk.row_count)
            yield chunk

    def _execute_inner(self, node: PlanNode):
        if isinstance(node, Get):
            return self._execute_get(node)
        if isinstance(node, Filter):
            return self._execute_filter(node)
        if isinstance(node, Project):
            return self._execute_project(node)
        if isinstance(node, Join):
            return self._execute_join(node)
        if isinstance(node, Aggregate):
            return self._execute_aggregate(node)
        if isinstance(node, Order):
            return self._execute_order(node)
        if isinstance(node, Limit):
            return self._execute_limit(node)
        if isinstance(node, Predict):
            return self._execute_predict(node)
        raise ExecutionError(f"no physical operator for {type(node).__name__}")

    # --- classical operators ---

    def _execute_get(self, node: Get):
        yield from rechunk(node.table.chunks, node.schema, self.capacity)

    def _execute_filter(self, node: Filter):
        for chunk in self.execute(node.child):
            mask = evaluate(node.predicate, chunk)
            keep = [i for i, v in enumerate(mask) if v is True]
            if keep:
                yield chunk.take(keep)

    def _execute_project(self, node: Project):
        for chunk in self.execute(node.child):
            columns = [evaluate(expr, chunk) for expr in node.exprs]
            yield DataChunk(node.schema, columns)

    def _execute_join(self, node: Join):
        left_schema_len = len(node.left.schema)
        if node.kind == "inner" and node.condition is not None:
            equi, rest = self._split_join_condition(node, left_schema_len)
            if equi:
                yield from self._hash_join(node, equi, rest, left_schema_len)
                return
        yield from self._cross_join(node)

    def _split_join_condition(self, node: Join, offset: int):
        conjuncts = split_conjuncts(node.condition)
        equi: list[tuple[int, int]] = []
        rest = []
        for conj in conjuncts:
            if (isinstance(conj, Comparison) and conj.op == "="
                    and isinstance(conj.left, ColumnRef)
                    and isinstance(conj.right, ColumnRef)):
                li, ri = conj.left.index, conj.right.index
                if li < offset <= ri:
                    equi.append((li, ri - offset))
                    continue
                if ri < offset <= li:
                    equi.append((ri, li - offset))
                    continue
            rest.append(conj)
        return equi, rest

    def _hash_join(self, node: Join, equi, rest, offset: int):
        right_rows: list[tuple] = []
        for chunk in self.execute(node.right):
            right_rows.extend(chunk.rows())
        table: dict[tuple, list[int]] = {}
        for j, row in enumerate(right_rows):
            key = tuple(row[r] for _, r in equi)
            if any(v is None for v in key):
                continue
            table.setdefault(key, []).append(j)

        rest_pred = conjoin(rest) if rest else None

        buffer: list[tuple] = []
        for chunk in self.execute(node.left):
            for row in chunk.rows():
                key = tuple(row[l] for l, _ in equi)
                if any(v is None for v in key):
                    continue
                for j in table.get(key, ()):
                    buffer.append(row + right_rows[j])
        yield from self._filtered_rows(buffer, node.schema, rest_pred)

    def _cross_join(self, node: Join):
        right_rows: list[tuple] = []
        for chunk in self.execute(node.right):
            right_rows.extend(chunk.rows())
        condition = node.condition if node.kind == "inner" else None
        buffer: list[tuple] = []
        for chunk in self.execute(node.left):
            for row in chunk.rows():
                for right in right_rows:
                    buffer.append(row + right)
        yield from self._filtered_rows(buffer, node.schema, condition)

    def _filtered_rows(self, rows: list[tuple], schema, predicate):
        for chunk in rechunk([DataChunk.from_rows(schema, rows)]
                             if rows else [], schema, self.capacity):
            if predicate is not None:
                mask = evaluate(predicate, chunk)
                keep = [i for i, v in enumerate(mask) if v is True]
                if not keep:
                    continue
                chunk = chunk.take(keep)
            yield chunk

    def _execute_order(self, node: Order):
        rows: list[tuple] = []
        key_vectors: list[list] = [[] for _ in node.keys]
        for chunk in self.execute(node.child):
            for pos, (expr, _asc) in enumerate(node.keys):
                key_vectors[pos].extend(evaluate(expr, chunk))
            rows.extend(chunk.rows())

        directions = [asc for _, asc in node.keys]

        def cmp(a: int, b: int) -> int:
            for pos, asc in enumerate(directions):
                va, vb = key_vectors[pos][a], key_vectors[pos][b]
                if va is None and vb is None:
                    continue
                if va is None:
                    return 1  # NULLs sort last either direction
                if vb is None:
                    return -1
                c = compare(va, vb)
                if c:
                    return c if asc else -c
            return 0

        order = sorted(range(len(rows)), key=cmp_to_key(cmp))
        ordered = [rows[i] for i in order]
        if ordered:
            yield from rechunk([DataChunk.from_rows(node.schema, ordered)],
                               node.schema, self.capacity)

    def _execute_limit(self, node: Limit):
        remaining = node.limit
        for chunk in self.execute(node.child):
            if remaining <= 0:
                return
            if chunk.row_count <= remaining:
                remaining -= chunk.row_count
                yield chunk
            else:
                yield chunk.take(list(range(remaining)))
                return

    # --- aggregation ---

    def _execute_aggregate(self, node: Aggregate):
        rows: list[tuple] = []
        group_vals: list[tuple] = []
        arg_vectors: dict[int, list] = {
            pos: [] for pos, spec in enumerate(node.aggs)
            if spec.func != "llm" and spec.arg is not None}
        for chunk in self.execute(node.child):
            vectors = [evaluate(e, chunk) for e in node.group_exprs]
            for pos in arg_vectors:
                arg_vectors[pos].extend(evaluate(node.aggs[pos].arg, chunk))
            for i, row in enumerate(chunk.rows()):
                rows.append(row)
                group_vals.append(tuple(v[i] for v in vectors))

        groups: dict[tuple, list[int]] = {}
        order: list[tuple] = []
        for i, key in enumerate(group_vals):
            if key not in groups:
                groups[key] = []
                order.append(key)
            groups[key].append(i)
        if not node.group_exprs and not order:
            # a global aggregate yields one row even over empty input
            groups[()] = []
            order.append(())

        columns: list[list] = [[] for _ in node.schema]
        for key in order:
            for pos, value in enumerate(key):
                columns[pos].append(value)
        base = len(node.group_exprs)
        for offset, spec in enumerate(node.aggs):
            if spec.func == "llm":
                values = self._run_semantic_agg(node, spec, rows, groups, order)
            else:
                values = [self._classic_agg(spec, arg_vectors.get(offset),
                                            groups[key])
                          for key in order]
            columns[base + offset] = values

        chunk = DataChunk(node.schema, columns)
        yield from rechunk([chunk], node.schema, self.capacity)

    def _classic_agg(self, spec: AggSpec, arg_values, members: list[int]):
        if spec.func == "count" and spec.star:
            return len(members)
        values = [arg_values[i] for i in members if arg_values[i] is not None]
        if spec.func == "count":
            return len(values)
        if not values:
            return None
        if spec.func == "sum":
            return sum(values)
        if spec.func == "avg":
            return sum(values) / len(values)
        if spec.func == "min":
            return min(values, key=cmp_to_key(compare))
        if spec.func == "max":
            return max(values, key=cmp_to_key(compare))
        raise ExecutionError(f"unknown aggregate {spec.func}")

    def _run_semantic_agg(self, node: Aggregate, spec: AggSpec,
                          rows: list[tuple], groups, order) -> list:
        info = PredictInfo(AGGREGATE, spec.model, spec.template,
                           spec.input_indexes, spec.input_names,
                           (ColumnSchema(spec.name, spec.type, "predicted"),))
        operator = self._make_operator(info, f"llm[{spec.model}]", id(node))
        member_lists = []
        for key in order:
            member_lists.append([
                tuple(rows[i][idx] for idx in spec.input_indexes)
                for i in groups[key]])
        # an empty group (global aggregate over no rows) is NULL, no call
        values: list = [None] * len(member_lists)
        occupied = [i for i, members in enumerate(member_lists) if members]
        results = operator.aggregate_groups(
            [member_lists[i] for i in occupied])
        for i, value in zip(occupied, results):
            values[i] = value
        return values

    # --- inference ---

    def _execute_predict(self, node: Predict):
        operator = self._make_operator(node.info, node.label(), id(node))
        if node.info.mode == TABLE_GENERATION:
            yield from rechunk(operator.run_generation(), node.schema,
                               self.capacity)
            return
        for chunk in self.execute(node.child):
            yield operator.process_chunk(chunk)

    def _make_operator(self, info: PredictInfo, label: str,
                       node_id: int) -> PredictOperator:
        entry = self.models.get(info.model)
        config = configure(entry, self.session)
        outputs = [(c.name, c.type) for c in info.outputs]
        backend = self.backend_provider(entry, config, outputs)
        operator = PredictOperator(info, config, backend)
        self.predict_runs.append(
            PredictRun(label, info.model, operator, node_id))
        return operator
