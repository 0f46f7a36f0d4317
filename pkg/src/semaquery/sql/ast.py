"""Statement and expression AST produced by the parser."""

from __future__ import annotations

from dataclasses import dataclass, field

from ..values import ValueType
from .prompt import PromptTemplate


# --- expressions -----------------------------------------------------------

class ExprNode:
    pass


@dataclass(frozen=True)
class EColumn(ExprNode):
    qualifier: str | None
    name: str
    quoted: bool = False


@dataclass(frozen=True)
class ELiteral(ExprNode):
    value: object
    vtype: ValueType | None  # None for NULL


@dataclass(frozen=True)
class EStar(ExprNode):
    qualifier: str | None = None


@dataclass(frozen=True)
class ECompare(ExprNode):
    op: str
    left: ExprNode
    right: ExprNode


@dataclass(frozen=True)
class ELogical(ExprNode):
    op: str  # AND | OR
    items: tuple[ExprNode, ...]


@dataclass(frozen=True)
class ENot(ExprNode):
    operand: ExprNode


@dataclass(frozen=True)
class EIsNull(ExprNode):
    operand: ExprNode
    negated: bool = False


@dataclass(frozen=True)
class EArith(ExprNode):
    op: str
    left: ExprNode
    right: ExprNode


@dataclass(frozen=True)
class ENeg(ExprNode):
    operand: ExprNode


@dataclass(frozen=True)
class EFunc(ExprNode):
    name: str  # lowercase: count/sum/avg/min/max
    args: tuple[ExprNode, ...]
    star: bool = False  # count(*)


@dataclass(frozen=True)
class PredictExprNode(ExprNode):
    """Unified node for LLM and PREDICT clauses, any clause position."""

    model_name: str
    source: str | None = None                 # table reference for FROM position
    prompt: PromptTemplate | None = None      # LLM clauses
    agg: bool = False                         # LLM AGG
    alias: str | None = None
    features: tuple[EColumn, ...] = ()        # PREDICT expression position
    is_tabular: bool = False                  # PREDICT clause (vs LLM)


# --- FROM clause -----------------------------------------------------------

class FromItem:
    pass


@dataclass(frozen=True)
class TableRef(FromItem):
    name: str
    alias: str | None = None


@dataclass(frozen=True)
class PredictFrom(FromItem):
    """LLM/PREDICT clause in FROM position (table inference or generation)."""

    node: PredictExprNode


@dataclass(frozen=True)
class JoinItem(FromItem):
    left: FromItem
    right: FromItem
    kind: str  # inner | natural | cross
    condition: ExprNode | None = None


@dataclass(frozen=True)
class DerivedTable(FromItem):
    select: "SelectStmt"
    alias: str


# --- statements ------------------------------------------------------------

class Statement:
    pass


@dataclass(frozen=True)
class SelectItem:
    expr: ExprNode
    alias: str | None = None


@dataclass(frozen=True)
class OrderItem:
    expr: ExprNode
    ascending: bool = True


@dataclass(frozen=True)
class SelectStmt(Statement):
    items: tuple[SelectItem, ...]
    from_item: FromItem | None = None
    where: ExprNode | None = None
    group_by: tuple[ExprNode, ...] = ()
    order_by: tuple[OrderItem, ...] = ()
    limit: int | None = None


@dataclass(frozen=True)
class CreateModelStmt(Statement):
    name: str
    kind: str  # LLM | TABULAR | EMBED
    path: str
    on_prompt: bool = False
    api: str | None = None
    table: str | None = None
    features: tuple[str, ...] = ()
    output_columns: tuple[tuple[str, ValueType], ...] = ()
    secret: str | None = None
    options: tuple[tuple[str, object], ...] = ()


@dataclass(frozen=True)
class CreateTableAsStmt(Statement):
    name: str
    select: SelectStmt


@dataclass(frozen=True)
class DropModelStmt(Statement):
    name: str


@dataclass(frozen=True)
class SetStmt(Statement):
    key: str
    value: object


@dataclass(frozen=True)
class AlterTableKeyStmt(Statement):
    table: str
    key_kind: str  # primary | foreign
    columns: tuple[str, ...]
    ref_table: str | None = None
    ref_columns: tuple[str, ...] = ()


@dataclass(frozen=True)
class ExplainStmt(Statement):
    target: Statement
    mode: str = "logical"  # logical | optimized | analyze
