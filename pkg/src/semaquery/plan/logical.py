"""Logical plan operators.

Semantic operators lower onto the same tree as classical ones: table
inference and generation become Predict nodes, semantic selection
becomes Predict + Filter on the predicted Boolean, and semantic joins
become CrossJoin + Predict + Filter. The optimizer rewrites this tree
before execution.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from ..chunk import ColumnSchema, Table
from ..expressions import Expr
from ..sql.prompt import PromptTemplate
from ..values import ValueType

# Predict modes
TABLE_INFERENCE = "table_inference"
TABLE_GENERATION = "table_generation"
SCALAR = "scalar"
AGGREGATE = "aggregate"


@dataclass
class PredictInfo:
    """Everything the predict operator needs besides input rows.

    input_indexes point into the child schema, aligned one-to-one with
    input_names, the keys used when rows are serialized into prompts.
    """

    mode: str
    model: str
    template: PromptTemplate | None
    input_indexes: tuple[int, ...] = ()
    input_names: tuple[str, ...] = ()
    outputs: tuple[ColumnSchema, ...] = ()
    qualifier: str | None = None

    def describe(self) -> str:
        parts = [f"model={self.model}", f"mode={self.mode}"]
        if self.input_names:
            parts.append("inputs=[" + ", ".join(self.input_names) + "]")
        outs = ", ".join(f"{c.name} {c.type}" for c in self.outputs)
        parts.append(f"outputs=[{outs}]")
        return ", ".join(parts)


@dataclass
class AggSpec:
    func: str                      # count, sum, avg, min, max, llm
    arg: Expr | None = None
    star: bool = False
    name: str = ""
    type: ValueType = ValueType.INTEGER
    # semantic aggregate only
    model: str | None = None
    template: PromptTemplate | None = None
    input_indexes: tuple[int, ...] = ()
    input_names: tuple[str, ...] = ()

    def describe(self) -> str:
        if self.func == "llm":
            return f"llm[{self.model}] AS {self.name}"
        arg = "*" if self.star else (self.arg.render() if self.arg else "")
        return f"{self.func}({arg}) AS {self.name}"


class PlanNode:
    """Base logical operator: children plus an output schema."""

    def __init__(self, children: list["PlanNode"], schema: list[ColumnSchema]):
        self.children = children
        self.schema = schema
        self.est_rows: float | None = None
        self.est_calls: float | None = None

    def label(self) -> str:
        raise NotImplementedError

    @property
    def child(self) -> "PlanNode":
        return self.children[0]


class Get(PlanNode):
    def __init__(self, table: Table, qualifier: str | None = None):
        schema = [ColumnSchema(c.name, c.type, c.origin) for c in table.schema]
        super().__init__([], schema)
        self.table = table
        self.qualifier = qualifier or table.name

    def label(self) -> str:
        return f"Get({self.table.name})"


class Filter(PlanNode):
    def __init__(self, child: PlanNode, predicate: Expr):
        super().__init__([child], list(child.schema))
        self.predicate = predicate

    def label(self) -> str:
        return f"Filter({self.predicate.render()})"


class Project(PlanNode):
    def __init__(self, child: PlanNode, exprs: list[Expr], names: list[str],
                 origins: list[str] | None = None):
        if origins is None:
            origins = ["stored"] * len(exprs)
        schema = [ColumnSchema(name, expr.type, origin)
                  for name, expr, origin in zip(names, exprs, origins)]
        super().__init__([child], schema)
        self.exprs = exprs

    def label(self) -> str:
        return "Project(" + ", ".join(c.name for c in self.schema) + ")"


class Join(PlanNode):
    """Inner or cross join; schema is left columns then right columns."""

    def __init__(self, left: PlanNode, right: PlanNode, kind: str,
                 condition: Expr | None = None):
        super().__init__([left, right], list(left.schema) + list(right.schema))
        self.kind = kind  # inner | cross
        self.condition = condition

    @property
    def left(self) -> PlanNode:
        return self.children[0]

    @property
    def right(self) -> PlanNode:
        return self.children[1]

    def label(self) -> str:
        if self.kind == "cross" or self.condition is None:
            return "Join(cross)"
        return f"Join(inner, {self.condition.render()})"


class Aggregate(PlanNode):
    def __init__(self, child: PlanNode, group_exprs: list[Expr],
                 group_names: list[str], aggs: list[AggSpec]):
        schema = [ColumnSchema(name, expr.type)
                  for name, expr in zip(group_names, group_exprs)]
        for spec in aggs:
            origin = "predicted" if spec.func == "llm" else "stored"
            schema.append(ColumnSchema(spec.name, spec.type, origin))
        super().__init__([child], schema)
        self.group_exprs = group_exprs
        self.aggs = aggs

    def label(self) -> str:
        groups = ", ".join(e.render() for e in self.group_exprs)
        aggs = ", ".join(spec.describe() for spec in self.aggs)
        return f"Aggregate(groups=[{groups}], aggs=[{aggs}])"


class Order(PlanNode):
    def __init__(self, child: PlanNode, keys: list[tuple[Expr, bool]]):
        super().__init__([child], list(child.schema))
        self.keys = keys

    def label(self) -> str:
        parts = [e.render() + ("" if asc else " DESC") for e, asc in self.keys]
        return "Order(" + ", ".join(parts) + ")"


class Limit(PlanNode):
    def __init__(self, child: PlanNode, limit: int):
        super().__init__([child], list(child.schema))
        self.limit = limit

    def label(self) -> str:
        return f"Limit({self.limit})"


class Predict(PlanNode):
    """Model inference over child rows; a leaf when generating a table."""

    def __init__(self, child: PlanNode | None, info: PredictInfo):
        base = list(child.schema) if child is not None else []
        if info.mode == TABLE_GENERATION:
            schema = list(info.outputs)
        else:
            schema = base + list(info.outputs)
        super().__init__([child] if child is not None else [], schema)
        self.info = info

    def label(self) -> str:
        return f"Predict({self.info.describe()})"


def walk(node: PlanNode):
    """Yield nodes depth-first, parents before children."""
    yield node
    for child in node.children:
        yield from walk(child)


def explain_text(node: PlanNode, costs: bool = False) -> str:
    lines: list[str] = []
    _explain(node, 0, lines, costs)
    return "\n".join(lines)


def _explain(node: PlanNode, depth: int, lines: list[str], costs: bool) -> None:
    text = "  " * depth + node.label()
    if costs and node.est_rows is not None:
        text += f" [rows={node.est_rows:g}"
        if node.est_calls:
            text += f", calls={node.est_calls:g}"
        text += "]"
    lines.append(text)
    for child in node.children:
        _explain(child, depth + 1, lines, costs)
