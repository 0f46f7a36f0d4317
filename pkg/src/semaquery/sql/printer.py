"""Pretty-printer producing canonical SQL text.

The output reparses to an equal AST, and printing is a fixpoint:
print(parse(print(parse(s)))) == print(parse(s)).
"""

from __future__ import annotations

from .ast import (
    AlterTableKeyStmt,
    CreateModelStmt,
    CreateTableAsStmt,
    DerivedTable,
    DropModelStmt,
    EArith,
    EColumn,
    ECompare,
    EFunc,
    EIsNull,
    ELiteral,
    ELogical,
    ENeg,
    ENot,
    EStar,
    ExplainStmt,
    ExprNode,
    FromItem,
    JoinItem,
    PredictExprNode,
    PredictFrom,
    SelectStmt,
    SetStmt,
    Statement,
    TableRef,
)

# lower binds looser; used to decide parenthesization
_PRECEDENCE = {
    "OR": 1,
    "AND": 2,
    "NOT": 3,
    "CMP": 4,
    "ADD": 5,
    "MUL": 6,
    "NEG": 7,
    "ATOM": 8,
}


def quote_string(value: str) -> str:
    return "'" + value.replace("'", "''") + "'"


def format_ident(name: str, quoted: bool = False) -> str:
    if quoted:
        return '"' + name + '"'
    return name


def format_literal(value: object) -> str:
    if value is None:
        return "NULL"
    if value is True:
        return "TRUE"
    if value is False:
        return "FALSE"
    if isinstance(value, str):
        return quote_string(value)
    return str(value)


def _node_precedence(expr: ExprNode) -> int:
    if isinstance(expr, ELogical):
        return _PRECEDENCE[expr.op]
    if isinstance(expr, ENot):
        return _PRECEDENCE["NOT"]
    if isinstance(expr, (ECompare, EIsNull)):
        return _PRECEDENCE["CMP"]
    if isinstance(expr, EArith):
        return _PRECEDENCE["ADD"] if expr.op in "+-" else _PRECEDENCE["MUL"]
    if isinstance(expr, ENeg):
        return _PRECEDENCE["NEG"]
    return _PRECEDENCE["ATOM"]


def print_expr(expr: ExprNode, parent_prec: int = 0) -> str:
    prec = _node_precedence(expr)
    text = _print_expr_inner(expr, prec)
    if prec < parent_prec:
        return "(" + text + ")"
    return text


def _print_expr_inner(expr: ExprNode, prec: int) -> str:
    if isinstance(expr, ELiteral):
        return format_literal(expr.value)
    if isinstance(expr, EColumn):
        name = format_ident(expr.name, expr.quoted)
        return f"{expr.qualifier}.{name}" if expr.qualifier else name
    if isinstance(expr, EStar):
        return f"{expr.qualifier}.*" if expr.qualifier else "*"
    if isinstance(expr, ECompare):
        left = print_expr(expr.left, prec)
        right = print_expr(expr.right, prec + 1)
        return f"{left} {expr.op} {right}"
    if isinstance(expr, ELogical):
        sep = f" {expr.op} "
        return sep.join(print_expr(item, prec + 1) for item in expr.items)
    if isinstance(expr, ENot):
        return "NOT " + print_expr(expr.operand, prec + 1)
    if isinstance(expr, EIsNull):
        op = "IS NOT NULL" if expr.negated else "IS NULL"
        return print_expr(expr.operand, prec) + " " + op
    if isinstance(expr, EArith):
        left = print_expr(expr.left, prec)
        right = print_expr(expr.right, prec + 1)
        return f"{left} {expr.op} {right}"
    if isinstance(expr, ENeg):
        return "-" + print_expr(expr.operand, prec)
    if isinstance(expr, EFunc):
        if expr.star:
            return f"{expr.name}(*)"
        args = ", ".join(print_expr(a) for a in expr.args)
        return f"{expr.name}({args})"
    if isinstance(expr, PredictExprNode):
        return print_predict(expr)
    raise TypeError(f"unprintable expression node {type(expr).__name__}")


def print_predict(node: PredictExprNode, with_alias: bool = False) -> str:
    if node.is_tabular:
        if node.source:
            inner = node.source
        else:
            inner = ", ".join(print_expr(f) for f in node.features)
        text = f"PREDICT {node.model_name}({inner})"
    else:
        head = "LLM AGG" if node.agg else "LLM"
        prompt = quote_string(node.prompt.reconstruct() if node.prompt else "")
        if node.source:
            text = f"{head} {node.model_name}(PROMPT {prompt}, {node.source})"
        else:
            text = f"{head} {node.model_name}(PROMPT {prompt})"
    if with_alias and node.alias:
        text += f" AS {node.alias}"
    return text


def print_from(item: FromItem) -> str:
    if isinstance(item, TableRef):
        if item.alias:
            return f"{item.name} AS {item.alias}"
        return item.name
    if isinstance(item, PredictFrom):
        return print_predict(item.node, with_alias=True)
    if isinstance(item, DerivedTable):
        return f"({print_select(item.select, multiline=False)}) AS {item.alias}"
    if isinstance(item, JoinItem):
        left = print_from(item.left)
        right = print_from(item.right)
        if item.kind == "natural":
            return f"{left} NATURAL JOIN {right}"
        if item.kind == "cross":
            return f"{left} CROSS JOIN {right}"
        text = f"{left} JOIN {right}"
        if item.condition is not None:
            text += f" ON {print_expr(item.condition)}"
        return text
    raise TypeError(f"unprintable FROM item {type(item).__name__}")


def print_select(stmt: SelectStmt, multiline: bool = True) -> str:
    lines = []
    items = []
    for item in stmt.items:
        text = print_expr(item.expr)
        if item.alias:
            text += f" AS {item.alias}"
        items.append(text)
    lines.append("SELECT " + ", ".join(items))
    if stmt.from_item is not None:
        lines.append("FROM " + print_from(stmt.from_item))
    if stmt.where is not None:
        lines.append("WHERE " + print_expr(stmt.where))
    if stmt.group_by:
        lines.append("GROUP BY " + ", ".join(print_expr(e) for e in stmt.group_by))
    if stmt.order_by:
        parts = []
        for order in stmt.order_by:
            text = print_expr(order.expr)
            if not order.ascending:
                text += " DESC"
            parts.append(text)
        lines.append("ORDER BY " + ", ".join(parts))
    if stmt.limit is not None:
        lines.append(f"LIMIT {stmt.limit}")
    return ("\n" if multiline else " ").join(lines)


def print_create_model(stmt: CreateModelStmt) -> str:
    lines = [f"CREATE {stmt.kind} MODEL {stmt.name}", f"PATH {quote_string(stmt.path)}"]
    if stmt.on_prompt:
        lines.append("ON PROMPT")
    if stmt.table:
        lines.append(f"ON TABLE {stmt.table}")
    if stmt.api:
        lines.append(f"API {quote_string(stmt.api)}")
    if stmt.features:
        lines.append("FEATURES (" + ", ".join(stmt.features) + ")")
    if stmt.output_columns:
        cols = ", ".join(f"{name} {vtype}" for name, vtype in stmt.output_columns)
        lines.append(f"OUTPUT ({cols})")
    if stmt.secret:
        lines.append(f"SECRET {stmt.secret}")
    if stmt.options:
        pairs = ", ".join(f"{quote_string(k)}: {format_literal(v)}"
                          for k, v in stmt.options)
        lines.append("OPTIONS {" + pairs + "}")
    return "\n".join(lines)


def print_statement(stmt: Statement) -> str:
    if isinstance(stmt, SelectStmt):
        return print_select(stmt)
    if isinstance(stmt, CreateModelStmt):
        return print_create_model(stmt)
    if isinstance(stmt, CreateTableAsStmt):
        return f"CREATE TABLE {stmt.name} AS\n{print_select(stmt.select)}"
    if isinstance(stmt, DropModelStmt):
        return f"DROP MODEL {stmt.name}"
    if isinstance(stmt, SetStmt):
        return f"SET {stmt.key} = {format_literal(stmt.value)}"
    if isinstance(stmt, AlterTableKeyStmt):
        if stmt.key_kind == "primary":
            return (f"ALTER TABLE {stmt.table} ADD PRIMARY KEY "
                    f"({', '.join(stmt.columns)})")
        return (f"ALTER TABLE {stmt.table} ADD FOREIGN KEY "
                f"({', '.join(stmt.columns)}) REFERENCES {stmt.ref_table} "
                f"({', '.join(stmt.ref_columns)})")
    if isinstance(stmt, ExplainStmt):
        head = {"logical": "EXPLAIN", "optimized": "EXPLAIN OPTIMIZED",
                "analyze": "EXPLAIN ANALYZE"}[stmt.mode]
        return f"{head} {print_statement(stmt.target)}"
    raise TypeError(f"unprintable statement {type(stmt).__name__}")
