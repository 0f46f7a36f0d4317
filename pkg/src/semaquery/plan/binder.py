"""Binds parsed statements to logical plans.

Semantic clauses lower during binding: a FROM-position LLM clause with
a source becomes Get + Predict (table inference), one without a source
becomes a Predict leaf (table generation), a Boolean LLM predicate in
WHERE or ON becomes Predict + Filter on the predicted column, and an
ON clause drawing inputs from both join sides becomes CrossJoin +
Predict + Filter. LLM AGG lowers to a semantic aggregate function.
"""

from __future__ import annotations

from dataclasses import dataclass

from ..catalog import ModelCatalog, ModelEntry
from ..chunk import ColumnSchema, Table, TableCatalog
from ..errors import BindError
from ..expressions import (
    Arithmetic,
    ColumnRef,
    Comparison,
    Expr,
    IsNull,
    Literal,
    Logical,
    Negate,
    Not,
)
from ..sql import ast
from ..sql.printer import print_expr
from ..sql.prompt import PromptTemplate
from ..values import ValueType
from .logical import (
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
    SCALAR,
    TABLE_GENERATION,
    TABLE_INFERENCE,
)

_AGG_FUNCS = {"count", "sum", "avg", "min", "max"}


@dataclass
class ScopeColumn:
    qualifier: str | None
    name: str
    index: int
    type: ValueType
    origin: str = "stored"
    hidden: bool = False  # synthetic predict outputs invisible to *


class BindContext:
    """Current plan fragment plus the columns it exposes."""

    def __init__(self, plan: PlanNode, columns: list[ScopeColumn]):
        self.plan = plan
        self.columns = columns
        self.group_keys: dict[str, int] = {}
        self.agg_keys: dict[str, int] = {}

    def resolve(self, qualifier: str | None, name: str) -> ScopeColumn:
        matches = []
        for col in self.columns:
            if col.hidden:
                continue
            if col.name.lower() != name.lower():
                continue
            if qualifier is not None and (col.qualifier or "").lower() != qualifier.lower():
                continue
            matches.append(col)
        if not matches:
            target = f"{qualifier}.{name}" if qualifier else name
            raise BindError(f"column not found: {target}")
        if len(matches) > 1:
            target = f"{qualifier}.{name}" if qualifier else name
            raise BindError(f"ambiguous column reference: {target}")
        return matches[0]

    def visible(self) -> list[ScopeColumn]:
        return [c for c in self.columns if not c.hidden]

    def bare_names(self) -> set[str]:
        return {c.name.lower() for c in self.columns if not c.hidden}

    def append_predict(self, info: PredictInfo, hidden: bool) -> list[int]:
        self.plan = Predict(self.plan, info)
        start = len(self.plan.schema) - len(info.outputs)
        indexes = []
        for offset, col in enumerate(info.outputs):
            self.columns.append(ScopeColumn(info.qualifier, col.name,
                                            start + offset, col.type,
                                            "predicted", hidden))
            indexes.append(start + offset)
        return indexes


class Binder:
    def __init__(self, tables: TableCatalog, models: ModelCatalog):
        self.tables = tables
        self.models = models
        self.notices: list[str] = []

    # --- entry point ---

    def bind_select(self, stmt: ast.SelectStmt) -> PlanNode:
        ctx = self.bind_from(stmt.from_item)

        if stmt.where is not None:
            predicate = self.bind_expr(stmt.where, ctx, predicate=True)
            if predicate.type != ValueType.BOOLEAN:
                raise BindError("WHERE predicate must be BOOLEAN")
            ctx.plan = Filter(ctx.plan, predicate)

        grouped = bool(stmt.group_by) or self._has_aggregates(stmt)
        if grouped:
            self.bind_aggregate(stmt, ctx)

        item_exprs: list[Expr] = []
        item_names: list[str] = []
        alias_map: dict[str, Expr] = {}
        for item in stmt.items:
            if isinstance(item.expr, ast.EStar):
                if grouped:
                    raise BindError("* is not allowed with GROUP BY or aggregates")
                for col in self._star_columns(ctx, item.expr.qualifier):
                    item_exprs.append(ColumnRef(col.index, col.type, col.name))
                    item_names.append(col.name)
                continue
            if grouped:
                bound = self.bind_post_aggregate(item.expr, ctx)
            else:
                bound = self.bind_expr(item.expr, ctx, predicate=False)
            name = item.alias or self._default_name(item.expr, bound)
            item_exprs.append(bound)
            item_names.append(name)
            if item.alias:
                alias_map[item.alias.lower()] = bound

        order_keys: list[tuple[Expr, bool]] = []
        for order in stmt.order_by:
            bound = self._bind_order_key(order.expr, ctx, alias_map, grouped)
            order_keys.append((bound, order.ascending))
        if order_keys:
            ctx.plan = Order(ctx.plan, order_keys)

        origins = [self._origin_of(expr, ctx) for expr in item_exprs]
        ctx.plan = Project(ctx.plan, item_exprs, item_names, origins)

        if stmt.limit is not None:
            ctx.plan = Limit(ctx.plan, stmt.limit)
        return ctx.plan

    def _bind_order_key(self, expr: ast.ExprNode, ctx: BindContext,
                        alias_map: dict[str, Expr], grouped: bool) -> Expr:
        if (isinstance(expr, ast.EColumn) and expr.qualifier is None
                and expr.name.lower() in alias_map):
            return alias_map[expr.name.lower()]
        if grouped:
            return self.bind_post_aggregate(expr, ctx)
        return self.bind_expr(expr, ctx, predicate=False)

    def _star_columns(self, ctx: BindContext, qualifier: str | None):
        cols = ctx.visible()
        if qualifier is not None:
            cols = [c for c in cols
                    if (c.qualifier or "").lower() == qualifier.lower()]
            if not cols:
                raise BindError(f"unknown table alias: {qualifier}")
        return cols

    def _default_name(self, expr: ast.ExprNode, bound: Expr) -> str:
        if isinstance(expr, ast.EColumn):
            return expr.name
        if isinstance(bound, ColumnRef):
            return bound.name
        return print_expr(expr)

    def _origin_of(self, expr: Expr, ctx: BindContext) -> str:
        if isinstance(expr, ColumnRef):
            for col in ctx.columns:
                if col.index == expr.index:
                    return col.origin
        return "stored"

    # --- FROM ---

    def bind_from(self, item: ast.FromItem | None) -> BindContext:
        if item is None:
            dual = Table.from_rows("dual", [ColumnSchema("dummy", ValueType.INTEGER)],
                                   [[0]])
            ctx = BindContext(Get(dual), [ScopeColumn(None, "dummy", 0,
                                                      ValueType.INTEGER,
                                                      hidden=True)])
            return ctx
        if isinstance(item, ast.TableRef):
            table = self.tables.get(item.name)
            qualifier = item.alias or item.name
            plan = Get(table, qualifier)
            cols = [ScopeColumn(qualifier, c.name, i, c.type, c.origin)
                    for i, c in enumerate(plan.schema)]
            return BindContext(plan, cols)
        if isinstance(item, ast.PredictFrom):
            return self.bind_predict_source(item.node)
        if isinstance(item, ast.DerivedTable):
            plan = self.bind_select(item.select)
            cols = [ScopeColumn(item.alias, c.name, i, c.type, c.origin)
                    for i, c in enumerate(plan.schema)]
            return BindContext(plan, cols)
        if isinstance(item, ast.JoinItem):
            return self.bind_join(item)
        raise BindError(f"unsupported FROM item {type(item).__name__}")

    def bind_join(self, item: ast.JoinItem) -> BindContext:
        left = self.bind_from(item.left)
        right = self.bind_from(item.right)
        offset = len(left.plan.schema)
        columns = list(left.columns)
        for col in right.columns:
            columns.append(ScopeColumn(col.qualifier, col.name,
                                       col.index + offset, col.type,
                                       col.origin, col.hidden))

        if item.kind == "natural":
            shared = [c.name for c in left.visible()
                      if c.name.lower() in {r.name.lower() for r in right.visible()}]
            if not shared:
                plan = Join(left.plan, right.plan, "cross")
                return BindContext(plan, columns)
            ctx = BindContext(Join(left.plan, right.plan, "cross"), columns)
            conjuncts = []
            for name in shared:
                lcol = left.resolve(None, name)
                rcol = right.resolve(None, name)
                conjuncts.append(Comparison(
                    "=", ColumnRef(lcol.index, lcol.type, lcol.name),
                    ColumnRef(rcol.index + offset, rcol.type, rcol.name)))
            condition = conjuncts[0] if len(conjuncts) == 1 else Logical("AND", conjuncts)
            ctx.plan = Join(left.plan, right.plan, "inner", condition)
            # drop the right-side copies of the shared columns
            keep = [c for c in ctx.columns
                    if not (c.index >= offset and c.name.lower() in
                            {s.lower() for s in shared})]
            exprs = [ColumnRef(c.index, c.type, c.name) for c in keep]
            names = [c.name for c in keep]
            origins = [c.origin for c in keep]
            ctx.plan = Project(ctx.plan, exprs, names, origins)
            ctx.columns = [ScopeColumn(c.qualifier, c.name, i, c.type, c.origin,
                                       c.hidden) for i, c in enumerate(keep)]
            return ctx

        if item.kind == "cross" or item.condition is None:
            return BindContext(Join(left.plan, right.plan, "cross"), columns)

        # inner join with an ON clause; semantic predicates lower above a
        # cross join so the optimizer can place them
        ctx = BindContext(Join(left.plan, right.plan, "cross"), columns)
        before = ctx.plan
        predicate = self.bind_expr(item.condition, ctx, predicate=True)
        if predicate.type != ValueType.BOOLEAN:
            raise BindError("ON predicate must be BOOLEAN")
        if ctx.plan is before:
            # purely classical condition: keep it on the join node
            ctx.plan = Join(left.plan, right.plan, "inner", predicate)
        else:
            self._check_join_sides(ctx, offset)
            ctx.plan = Filter(ctx.plan, predicate)
        return ctx

    def _check_join_sides(self, ctx: BindContext, offset: int) -> None:
        for node in self._predicts_between(ctx.plan):
            indexes = node.info.input_indexes
            if indexes and (all(i < offset for i in indexes)
                            or all(i >= offset for i in indexes)):
                side = "left" if indexes[0] < offset else "right"
                self.notices.append(
                    f"semantic join predicate on {node.info.model} only reads "
                    f"the {side} side; it acts as a selection")

    def _predicts_between(self, plan: PlanNode):
        node = plan
        while isinstance(node, Predict):
            yield node
            node = node.child

    # --- semantic sources ---

    def bind_predict_source(self, node: ast.PredictExprNode) -> BindContext:
        if node.is_tabular:
            return self._bind_tabular_source(node)
        entry = self._llm_entry(node.model_name)
        template = node.prompt
        if template is None:
            raise BindError("LLM clause needs a PROMPT")
        if node.source is not None:
            table = self.tables.get(node.source)
            qualifier = node.alias or node.source
            plan = Get(table, qualifier)
            cols = [ScopeColumn(qualifier, c.name, i, c.type, c.origin)
                    for i, c in enumerate(plan.schema)]
            ctx = BindContext(plan, cols)
            info = self._inference_info(entry, template, ctx, TABLE_INFERENCE,
                                        qualifier, node.alias)
            ctx.append_predict(info, hidden=False)
            return ctx
        # table generation: a leaf that manufactures rows
        if template.inputs:
            raise BindError("a generating LLM clause cannot reference columns")
        if not template.outputs:
            raise BindError("a generating LLM clause needs output columns")
        qualifier = node.alias or node.model_name
        outputs = tuple(ColumnSchema(name, vtype, "predicted")
                        for name, vtype in template.outputs)
        info = PredictInfo(TABLE_GENERATION, entry.name, template,
                           outputs=outputs, qualifier=qualifier)
        plan = Predict(None, info)
        cols = [ScopeColumn(qualifier, c.name, i, c.type, "predicted")
                for i, c in enumerate(plan.schema)]
        return BindContext(plan, cols)

    def _bind_tabular_source(self, node: ast.PredictExprNode) -> BindContext:
        entry = self.models.get(node.model_name)
        if entry.kind != "TABULAR":
            raise BindError(f"model {node.model_name} is not TABULAR")
        table = self.tables.get(node.source)
        qualifier = node.alias or node.source
        plan = Get(table, qualifier)
        ctx = BindContext(plan, [ScopeColumn(qualifier, c.name, i, c.type, c.origin)
                                 for i, c in enumerate(plan.schema)])
        indexes = []
        for feature in entry.features:
            col = ctx.resolve(None, feature)
            indexes.append(col.index)
        self._check_collisions(entry.output_columns, ctx, node.alias)
        outputs = tuple(ColumnSchema(name, vtype, "predicted")
                        for name, vtype in entry.output_columns)
        info = PredictInfo(TABLE_INFERENCE, entry.name, None,
                           tuple(indexes), tuple(entry.features), outputs,
                           qualifier)
        ctx.append_predict(info, hidden=False)
        return ctx

    def _llm_entry(self, name: str) -> ModelEntry:
        entry = self.models.get(name)
        if entry.kind == "EMBED":
            raise BindError(f"model {name} is an embedding model and cannot "
                            "run in queries")
        if entry.kind != "LLM":
            raise BindError(f"model {name} is not an LLM")
        return entry

    def _inference_info(self, entry: ModelEntry, template: PromptTemplate,
                        ctx: BindContext, mode: str, qualifier: str | None,
                        alias: str | None) -> PredictInfo:
        indexes, names = self._resolve_inputs(template, ctx)
        if not template.outputs:
            raise BindError("a table-inference prompt needs output columns")
        self._check_collisions(template.outputs, ctx, alias)
        outputs = tuple(ColumnSchema(name, vtype, "predicted")
                        for name, vtype in template.outputs)
        return PredictInfo(mode, entry.name, template, tuple(indexes),
                           tuple(names), outputs, qualifier)

    def _resolve_inputs(self, template: PromptTemplate, ctx: BindContext):
        indexes: list[int] = []
        names: list[str] = []
        for raw in template.inputs:
            qualifier, name = (raw.split(".", 1) if "." in raw else (None, raw))
            col = ctx.resolve(qualifier, name)
            indexes.append(col.index)
            names.append(name)
        return indexes, names

    def _check_collisions(self, outputs, ctx: BindContext, alias: str | None):
        if alias:
            return
        taken = ctx.bare_names()
        for name, _vtype in outputs:
            if name.lower() in taken:
                raise BindError(
                    f"predicted column {name!r} collides with an existing "
                    f"column; add an alias to the clause")

    # --- expressions ---

    def bind_expr(self, expr: ast.ExprNode, ctx: BindContext,
                  predicate: bool) -> Expr:
        if isinstance(expr, ast.ELiteral):
            vtype = expr.vtype if expr.vtype is not None else ValueType.VARCHAR
            return Literal(expr.value, vtype)
        if isinstance(expr, ast.EColumn):
            return self._bind_column(expr, ctx)
        if isinstance(expr, ast.ECompare):
            return Comparison(expr.op,
                              self.bind_expr(expr.left, ctx, False),
                              self.bind_expr(expr.right, ctx, False))
        if isinstance(expr, ast.ELogical):
            return Logical(expr.op,
                           [self.bind_expr(i, ctx, predicate) for i in expr.items])
        if isinstance(expr, ast.ENot):
            return Not(self.bind_expr(expr.operand, ctx, predicate))
        if isinstance(expr, ast.EIsNull):
            return IsNull(self.bind_expr(expr.operand, ctx, False), expr.negated)
        if isinstance(expr, ast.EArith):
            return Arithmetic(expr.op,
                              self.bind_expr(expr.left, ctx, False),
                              self.bind_expr(expr.right, ctx, False))
        if isinstance(expr, ast.ENeg):
            return Negate(self.bind_expr(expr.operand, ctx, False))
        if isinstance(expr, ast.PredictExprNode):
            return self._bind_scalar_predict(expr, ctx, predicate)
        if isinstance(expr, ast.EFunc):
            raise BindError(f"aggregate {expr.name} needs GROUP BY context")
        if isinstance(expr, ast.EStar):
            raise BindError("* is only legal as a projection item")
        raise BindError(f"cannot bind {type(expr).__name__}")

    def _bind_column(self, expr: ast.EColumn, ctx: BindContext) -> Expr:
        try:
            col = ctx.resolve(expr.qualifier, expr.name)
        except BindError:
            # a double-quoted name that resolves to nothing is treated as
            # a string literal, matching common loose usage in prompts
            if expr.quoted and expr.qualifier is None:
                return Literal(expr.name, ValueType.VARCHAR)
            raise
        return ColumnRef(col.index, col.type, col.name)

    def _bind_scalar_predict(self, node: ast.PredictExprNode, ctx: BindContext,
                             predicate: bool) -> Expr:
        if node.agg:
            raise BindError("LLM AGG is only legal in the projection of a "
                            "grouped query")
        if node.is_tabular:
            return self._bind_scalar_tabular(node, ctx)
        entry = self._llm_entry(node.model_name)
        template = node.prompt
        outputs = template.outputs
        if not outputs:
            if not predicate:
                raise BindError("an LLM clause used as a value needs a typed "
                                "output placeholder")
            # Boolean question without an explicit output: predict a
            # yes/no answer column
            outputs = (("answer", ValueType.BOOLEAN),)
        if len(outputs) != 1:
            raise BindError("an LLM clause used as a value must declare "
                            "exactly one output")
        name, vtype = outputs[0]
        if predicate and vtype != ValueType.BOOLEAN:
            raise BindError(f"predicate prompt output {name!r} must be BOOLEAN")
        indexes, names = self._resolve_inputs(template, ctx)
        schema = (ColumnSchema(name, vtype, "predicted"),)
        info = PredictInfo(SCALAR, entry.name, template, tuple(indexes),
                           tuple(names), schema, node.alias)
        new = ctx.append_predict(info, hidden=True)
        return ColumnRef(new[0], vtype, name)

    def _bind_scalar_tabular(self, node: ast.PredictExprNode,
                             ctx: BindContext) -> Expr:
        entry = self.models.get(node.model_name)
        if entry.kind != "TABULAR":
            raise BindError(f"model {node.model_name} is not TABULAR")
        if len(entry.output_columns) != 1:
            raise BindError(f"model {node.model_name} predicts several columns "
                            "and cannot be used as a value")
        indexes = self._tabular_feature_indexes(node, entry, ctx)
        name, vtype = entry.output_columns[0]
        schema = (ColumnSchema(name, vtype, "predicted"),)
        info = PredictInfo(SCALAR, entry.name, None, tuple(indexes),
                           tuple(entry.features), schema, node.alias)
        new = ctx.append_predict(info, hidden=True)
        return ColumnRef(new[0], vtype, name)

    def _tabular_feature_indexes(self, node: ast.PredictExprNode,
                                 entry: ModelEntry,
                                 ctx: BindContext) -> list[int]:
        """Resolve PREDICT arguments: explicit feature columns, or one
        table name that expands to the model's declared FEATURES."""
        features = list(node.features)
        if len(features) == 1 and features[0].qualifier is None:
            only = features[0]
            try:
                ctx.resolve(None, only.name)
            except BindError:
                qualifiers = {(c.qualifier or "").lower()
                              for c in ctx.columns if not c.hidden}
                if only.name.lower() not in qualifiers:
                    raise
                if not entry.features:
                    raise BindError(f"model {entry.name} declares no FEATURES "
                                    "to expand")
                return [ctx.resolve(only.name, feat).index
                        for feat in entry.features]
        if len(features) != len(entry.features):
            raise BindError(f"model {node.model_name} expects "
                            f"{len(entry.features)} features, got "
                            f"{len(features)}")
        return [ctx.resolve(col.qualifier, col.name).index
                for col in features]

    # --- aggregation ---

    def _has_aggregates(self, stmt: ast.SelectStmt) -> bool:
        exprs = [item.expr for item in stmt.items]
        exprs.extend(order.expr for order in stmt.order_by)
        return any(self._contains_agg(e) for e in exprs)

    def _contains_agg(self, expr: ast.ExprNode) -> bool:
        if isinstance(expr, ast.EFunc):
            return True
        if isinstance(expr, ast.PredictExprNode):
            return expr.agg
        if isinstance(expr, (ast.ECompare, ast.EArith)):
            return self._contains_agg(expr.left) or self._contains_agg(expr.right)
        if isinstance(expr, ast.ELogical):
            return any(self._contains_agg(i) for i in expr.items)
        if isinstance(expr, (ast.ENot, ast.ENeg)):
            return self._contains_agg(expr.operand)
        if isinstance(expr, ast.EIsNull):
            return self._contains_agg(expr.operand)
        return False

    def bind_aggregate(self, stmt: ast.SelectStmt, ctx: BindContext) -> None:
        group_bound: list[Expr] = []
        group_names: list[str] = []
        group_keys: list[str] = []
        for gexpr in stmt.group_by:
            key = print_expr(gexpr)
            bound = self.bind_expr(gexpr, ctx, predicate=False)
            name = bound.name if isinstance(bound, ColumnRef) else key
            group_bound.append(bound)
            group_names.append(name)
            group_keys.append(key)

        specs: list[AggSpec] = []
        spec_keys: dict[str, int] = {}
        for expr in [item.expr for item in stmt.items] + \
                    [order.expr for order in stmt.order_by]:
            self._collect_aggs(expr, ctx, specs, spec_keys)

        ctx.plan = Aggregate(ctx.plan, group_bound, group_names, specs)
        columns = []
        for i, name in enumerate(group_names):
            columns.append(ScopeColumn(None, name, i, group_bound[i].type,
                                       self._origin_of(group_bound[i], ctx)))
        base = len(group_names)
        for i, spec in enumerate(specs):
            origin = "predicted" if spec.func == "llm" else "stored"
            columns.append(ScopeColumn(None, spec.name, base + i, spec.type,
                                       origin))
        ctx.columns = columns
        ctx.group_keys = {key: i for i, key in enumerate(group_keys)}
        ctx.agg_keys = {key: base + i for key, i in spec_keys.items()}

    def _collect_aggs(self, expr: ast.ExprNode, ctx: BindContext,
                      specs: list[AggSpec], spec_keys: dict[str, int]) -> None:
        if isinstance(expr, ast.EFunc):
            key = print_expr(expr)
            if key in spec_keys:
                return
            spec_keys[key] = len(specs)
            specs.append(self._bind_agg_func(expr, ctx, key))
            return
        if isinstance(expr, ast.PredictExprNode) and expr.agg:
            key = print_expr(expr)
            if key in spec_keys:
                return
            spec_keys[key] = len(specs)
            specs.append(self._bind_llm_agg(expr, ctx))
            return
        if isinstance(expr, (ast.ECompare, ast.EArith)):
            self._collect_aggs(expr.left, ctx, specs, spec_keys)
            self._collect_aggs(expr.right, ctx, specs, spec_keys)
        elif isinstance(expr, ast.ELogical):
            for item in expr.items:
                self._collect_aggs(item, ctx, specs, spec_keys)
        elif isinstance(expr, (ast.ENot, ast.ENeg, ast.EIsNull)):
            self._collect_aggs(expr.operand, ctx, specs, spec_keys)

    def _bind_agg_func(self, expr: ast.EFunc, ctx: BindContext,
                       key: str) -> AggSpec:
        if expr.star:
            if expr.name != "count":
                raise BindError(f"{expr.name}(*) is not defined")
            return AggSpec("count", None, star=True, name=key,
                           type=ValueType.INTEGER)
        if len(expr.args) != 1:
            raise BindError(f"{expr.name} takes exactly one argument")
        if self._contains_agg(expr.args[0]):
            raise BindError("aggregates cannot nest")
        arg = self.bind_expr(expr.args[0], ctx, predicate=False)
        numeric = (ValueType.INTEGER, ValueType.DOUBLE)
        if expr.name in ("sum", "avg") and arg.type not in numeric:
            raise BindError(f"{expr.name} needs a numeric argument")
        if expr.name == "count":
            out = ValueType.INTEGER
        elif expr.name == "avg":
            out = ValueType.DOUBLE
        else:
            out = arg.type
        return AggSpec(expr.name, arg, name=key, type=out)

    def _bind_llm_agg(self, node: ast.PredictExprNode,
                      ctx: BindContext) -> AggSpec:
        entry = self._llm_entry(node.model_name)
        template = node.prompt
        if len(template.outputs) != 1:
            raise BindError("an aggregate prompt must declare exactly one "
                            "output")
        indexes, names = self._resolve_inputs(template, ctx)
        name, vtype = template.outputs[0]
        return AggSpec("llm", None, name=node.alias or name, type=vtype,
                       model=entry.name, template=template,
                       input_indexes=tuple(indexes), input_names=tuple(names))

    def bind_post_aggregate(self, expr: ast.ExprNode, ctx: BindContext) -> Expr:
        key = print_expr(expr)
        if key in ctx.group_keys:
            idx = ctx.group_keys[key]
            col = ctx.columns[idx]
            return ColumnRef(col.index, col.type, col.name)
        if key in ctx.agg_keys:
            idx = ctx.agg_keys[key]
            col = ctx.columns[idx]
            return ColumnRef(col.index, col.type, col.name)
        if isinstance(expr, ast.ELiteral):
            vtype = expr.vtype if expr.vtype is not None else ValueType.VARCHAR
            return Literal(expr.value, vtype)
        if isinstance(expr, ast.EColumn):
            col = ctx.resolve(expr.qualifier, expr.name)
            return ColumnRef(col.index, col.type, col.name)
        if isinstance(expr, ast.ECompare):
            return Comparison(expr.op,
                              self.bind_post_aggregate(expr.left, ctx),
                              self.bind_post_aggregate(expr.right, ctx))
        if isinstance(expr, ast.ELogical):
            return Logical(expr.op,
                           [self.bind_post_aggregate(i, ctx) for i in expr.items])
        if isinstance(expr, ast.ENot):
            return Not(self.bind_post_aggregate(expr.operand, ctx))
        if isinstance(expr, ast.EIsNull):
            return IsNull(self.bind_post_aggregate(expr.operand, ctx),
                          expr.negated)
        if isinstance(expr, ast.EArith):
            return Arithmetic(expr.op,
                              self.bind_post_aggregate(expr.left, ctx),
                              self.bind_post_aggregate(expr.right, ctx))
        if isinstance(expr, ast.ENeg):
            return Negate(self.bind_post_aggregate(expr.operand, ctx))
        raise BindError(f"{key} must appear in GROUP BY or inside an aggregate")
