"""Bound expression trees evaluated vector-at-a-time over DataChunks.

Comparisons use three-valued logic: a NULL operand yields unknown (None),
which excludes the row when the expression is used as a predicate.
"""

from __future__ import annotations

from dataclasses import dataclass

from .chunk import DataChunk
from .errors import BindError
from .values import ValueType, common_type, comparable, compare, tvl_and, tvl_not, tvl_or


class Expr:
    type: ValueType

    def render(self) -> str:
        raise NotImplementedError


@dataclass
class ColumnRef(Expr):
    index: int
    type: ValueType
    name: str

    def render(self) -> str:
        return self.name


@dataclass
class Literal(Expr):
    value: object
    type: ValueType

    def render(self) -> str:
        if self.value is None:
            return "NULL"
        if isinstance(self.value, str):
            return "'" + self.value.replace("'", "''") + "'"
        if isinstance(self.value, bool):
            return "TRUE" if self.value else "FALSE"
        return str(self.value)


_CMP_OPS = {"=", "<>", "<", "<=", ">", ">="}


@dataclass
class Comparison(Expr):
    op: str
    left: Expr
    right: Expr
    type: ValueType = ValueType.BOOLEAN

    def __post_init__(self):
        if self.op not in _CMP_OPS:
            raise ValueError(f"bad comparison op {self.op}")
        if not comparable(self.left.type, self.right.type):
            raise BindError(
                f"cannot compare {self.left.type} with {self.right.type}")

    def render(self) -> str:
        return f"({self.left.render()} {self.op} {self.right.render()})"


@dataclass
class Logical(Expr):
    op: str  # AND | OR
    items: list[Expr]
    type: ValueType = ValueType.BOOLEAN

    def __post_init__(self):
        for item in self.items:
            if item.type != ValueType.BOOLEAN:
                raise BindError(f"{self.op} operand is not BOOLEAN")

    def render(self) -> str:
        return "(" + f" {self.op} ".join(i.render() for i in self.items) + ")"


@dataclass
class Not(Expr):
    operand: Expr
    type: ValueType = ValueType.BOOLEAN

    def __post_init__(self):
        if self.operand.type != ValueType.BOOLEAN:
            raise BindError("NOT operand is not BOOLEAN")

    def render(self) -> str:
        return f"(NOT {self.operand.render()})"


@dataclass
class IsNull(Expr):
    operand: Expr
    negated: bool = False
    type: ValueType = ValueType.BOOLEAN

    def render(self) -> str:
        suffix = "IS NOT NULL" if self.negated else "IS NULL"
        return f"({self.operand.render()} {suffix})"


@dataclass
class Arithmetic(Expr):
    op: str  # + - * /
    left: Expr
    right: Expr
    type: ValueType = ValueType.INTEGER

    def __post_init__(self):
        lt, rt = self.left.type, self.right.type
        numeric = {ValueType.INTEGER, ValueType.DOUBLE}
        if lt not in numeric or rt not in numeric:
            raise BindError(f"arithmetic on non-numeric types {lt}, {rt}")
        # '/' always yields DOUBLE; others follow the common numeric type
        self.type = ValueType.DOUBLE if self.op == "/" else common_type(lt, rt)

    def render(self) -> str:
        return f"({self.left.render()} {self.op} {self.right.render()})"


@dataclass
class Negate(Expr):
    operand: Expr
    type: ValueType = ValueType.INTEGER

    def __post_init__(self):
        self.type = self.operand.type

    def render(self) -> str:
        return f"(-{self.operand.render()})"


# --- evaluation ------------------------------------------------------------

def evaluate(expr: Expr, chunk: DataChunk) -> list:
    n = chunk.row_count
    if isinstance(expr, ColumnRef):
        return chunk.columns[expr.index]
    if isinstance(expr, Literal):
        return [expr.value] * n
    if isinstance(expr, Comparison):
        left = evaluate(expr.left, chunk)
        right = evaluate(expr.right, chunk)
        return [_compare_op(expr.op, a, b) for a, b in zip(left, right)]
    if isinstance(expr, Logical):
        vectors = [evaluate(item, chunk) for item in expr.items]
        fold = tvl_and if expr.op == "AND" else tvl_or
        out = list(vectors[0])
        for vec in vectors[1:]:
            out = [fold(a, b) for a, b in zip(out, vec)]
        return out
    if isinstance(expr, Not):
        return [tvl_not(v) for v in evaluate(expr.operand, chunk)]
    if isinstance(expr, IsNull):
        vals = evaluate(expr.operand, chunk)
        if expr.negated:
            return [v is not None for v in vals]
        return [v is None for v in vals]
    if isinstance(expr, Arithmetic):
        left = evaluate(expr.left, chunk)
        right = evaluate(expr.right, chunk)
        return [_arith_op(expr.op, expr.type, a, b) for a, b in zip(left, right)]
    if isinstance(expr, Negate):
        return [None if v is None else -v for v in evaluate(expr.operand, chunk)]
    raise TypeError(f"cannot evaluate {type(expr).__name__}")


def _compare_op(op: str, a, b):
    c = compare(a, b)
    if c is None:
        return None
    if op == "=":
        return c == 0
    if op == "<>":
        return c != 0
    if op == "<":
        return c < 0
    if op == "<=":
        return c <= 0
    if op == ">":
        return c > 0
    return c >= 0


def _arith_op(op: str, out_type: ValueType, a, b):
    if a is None or b is None:
        return None
    if op == "+":
        v = a + b
    elif op == "-":
        v = a - b
    elif op == "*":
        v = a * b
    else:
        v = a / b
    if out_type == ValueType.DOUBLE:
        return float(v)
    return v


# --- structural helpers (used by the optimizer) ---------------------------

def referenced_indexes(expr: Expr) -> set[int]:
    out: set[int] = set()
    _walk_refs(expr, out)
    return out


def _walk_refs(expr: Expr, out: set[int]) -> None:
    if isinstance(expr, ColumnRef):
        out.add(expr.index)
    elif isinstance(expr, Comparison):
        _walk_refs(expr.left, out)
        _walk_refs(expr.right, out)
    elif isinstance(expr, Logical):
        for item in expr.items:
            _walk_refs(item, out)
    elif isinstance(expr, (Not, IsNull, Negate)):
        _walk_refs(expr.operand, out)
    elif isinstance(expr, Arithmetic):
        _walk_refs(expr.left, out)
        _walk_refs(expr.right, out)


def remap_columns(expr: Expr, mapping: dict[int, int]) -> Expr:
    """Rebuild the tree with column indexes translated through mapping."""
    if isinstance(expr, ColumnRef):
        return ColumnRef(mapping[expr.index], expr.type, expr.name)
    if isinstance(expr, Literal):
        return expr
    if isinstance(expr, Comparison):
        return Comparison(expr.op, remap_columns(expr.left, mapping),
                          remap_columns(expr.right, mapping))
    if isinstance(expr, Logical):
        return Logical(expr.op, [remap_columns(i, mapping) for i in expr.items])
    if isinstance(expr, Not):
        return Not(remap_columns(expr.operand, mapping))
    if isinstance(expr, IsNull):
        return IsNull(remap_columns(expr.operand, mapping), expr.negated)
    if isinstance(expr, Arithmetic):
        return Arithmetic(expr.op, remap_columns(expr.left, mapping),
                          remap_columns(expr.right, mapping))
    if isinstance(expr, Negate):
        return Negate(remap_columns(expr.operand, mapping))
    raise TypeError(f"cannot remap {type(expr).__name__}")


def split_conjuncts(expr: Expr) -> list[Expr]:
    if isinstance(expr, Logical) and expr.op == "AND":
        out: list[Expr] = []
        for item in expr.items:
            out.extend(split_conjuncts(item))
        return out
    return [expr]


def conjoin(conjuncts: list[Expr]) -> Expr:
    if len(conjuncts) == 1:
        return conjuncts[0]
    return Logical("AND", conjuncts)
