"""Bound expression evaluation: 3VL vectors, remapping, conjunct algebra."""

import pytest
from hypothesis import given, strategies as st

from semaquery.chunk import ColumnSchema, DataChunk
from semaquery.errors import BindError
from semaquery.expressions import (
    Arithmetic, ColumnRef, Comparison, IsNull, Literal, Logical, Negate, Not,
    conjoin, evaluate, referenced_indexes, remap_columns, split_conjuncts,
)
from semaquery.values import ValueType

V = ValueType.VARCHAR
I = ValueType.INTEGER
D = ValueType.DOUBLE
B = ValueType.BOOLEAN


def chunk_of(**cols):
    schema = []
    vectors = []
    for name, values in cols.items():
        sample = next((v for v in values if v is not None), None)
        vtype = {int: I, float: D, str: V, bool: B}.get(type(sample), V)
        schema.append(ColumnSchema(name, vtype))
        vectors.append(list(values))
    return DataChunk(schema, vectors)


def col(chunk, name):
    i = chunk.column_index(name)
    return ColumnRef(i, chunk.schema[i].type, name)


def test_column_ref_returns_vector():
    ch = chunk_of(x=[1, 2, 3])
    assert evaluate(col(ch, "x"), ch) == [1, 2, 3]


def test_literal_broadcasts():
    ch = chunk_of(x=[1, 2, 3])
    assert evaluate(Literal(7, I), ch) == [7, 7, 7]


def test_comparison_vectors_with_nulls():
    ch = chunk_of(x=[1, 5, None])
    got = evaluate(Comparison(">", col(ch, "x"), Literal(3, I)), ch)
    assert got == [False, True, None]


def test_all_comparison_ops():
    ch = chunk_of(x=[2])
    lit = Literal(2, I)
    ops = {"=": True, "<>": False, "<": False, "<=": True, ">": False, ">=": True}
    for op, want in ops.items():
        assert evaluate(Comparison(op, col(ch, "x"), lit), ch) == [want]


def test_comparison_type_check():
    ch = chunk_of(x=[1])
    with pytest.raises(BindError, match="cannot compare"):
        Comparison("=", col(ch, "x"), Literal("a", V))


def test_comparison_bad_op_rejected():
    with pytest.raises(ValueError):
        Comparison("LIKE", Literal(1, I), Literal(1, I))


def test_logical_and_or_with_unknown():
    ch = chunk_of(a=[True, True, None], b=[False, True, True])
    got_and = evaluate(Logical("AND", [col(ch, "a"), col(ch, "b")]), ch)
    got_or = evaluate(Logical("OR", [col(ch, "a"), col(ch, "b")]), ch)
    assert got_and == [False, True, None]
    assert got_or == [True, True, True]


def test_logical_requires_boolean_operands():
    with pytest.raises(BindError):
        Logical("AND", [Literal(1, I), Literal(True, B)])


def test_not_vector():
    ch = chunk_of(a=[True, False, None])
    assert evaluate(Not(col(ch, "a")), ch) == [False, True, None]


def test_is_null_never_unknown():
    ch = chunk_of(x=[1, None, 3])
    assert evaluate(IsNull(col(ch, "x")), ch) == [False, True, False]
    assert evaluate(IsNull(col(ch, "x"), negated=True), ch) == [True, False, True]


def test_arithmetic_types_and_nulls():
    ch = chunk_of(x=[4, None])
    plus = Arithmetic("+", col(ch, "x"), Literal(1, I))
    assert plus.type is I
    assert evaluate(plus, ch) == [5, None]

    div = Arithmetic("/", col(ch, "x"), Literal(2, I))
    assert div.type is D
    assert evaluate(div, ch) == [2.0, None]


def test_arithmetic_widens_to_double():
    mix = Arithmetic("*", Literal(2, I), Literal(0.5, D))
    assert mix.type is D
    ch = chunk_of(x=[0])
    assert evaluate(mix, ch) == [1.0]


def test_arithmetic_rejects_non_numeric():
    with pytest.raises(BindError):
        Arithmetic("+", Literal("a", V), Literal(1, I))


def test_negate_preserves_type_and_null():
    ch = chunk_of(x=[3, None])
    neg = Negate(col(ch, "x"))
    assert neg.type is I
    assert evaluate(neg, ch) == [-3, None]


def test_referenced_indexes_walks_whole_tree():
    expr = Logical("AND", [
        Comparison("<", ColumnRef(0, I, "a"), ColumnRef(2, I, "c")),
        Not(IsNull(ColumnRef(5, V, "f"))),
        Comparison("=", Arithmetic("+", ColumnRef(1, I, "b"), Literal(1, I)),
                   Literal(2, I)),
    ])
    assert referenced_indexes(expr) == {0, 1, 2, 5}


def test_remap_columns_translates_every_ref():
    expr = Comparison("=", ColumnRef(3, I, "a"),
                      Arithmetic("-", ColumnRef(4, I, "b"), Literal(1, I)))
    mapped = remap_columns(expr, {3: 0, 4: 1})
    assert referenced_indexes(mapped) == {0, 1}
    # original untouched
    assert referenced_indexes(expr) == {3, 4}


def test_remap_missing_index_raises():
    with pytest.raises(KeyError):
        remap_columns(ColumnRef(9, I, "x"), {0: 1})


def test_split_conjuncts_flattens_nested_and():
    a = Comparison("=", Literal(1, I), Literal(1, I))
    b = IsNull(ColumnRef(0, I, "x"))
    c = Not(Literal(True, B))
    tree = Logical("AND", [Logical("AND", [a, b]), c])
    assert split_conjuncts(tree) == [a, b, c]


def test_split_conjuncts_keeps_or_whole():
    tree = Logical("OR", [Literal(True, B), Literal(False, B)])
    assert split_conjuncts(tree) == [tree]


def test_conjoin_inverse_of_split():
    parts = [IsNull(ColumnRef(0, I, "x")), Literal(True, B), Not(Literal(False, B))]
    assert split_conjuncts(conjoin(parts)) == parts
    single = [Literal(True, B)]
    assert conjoin(single) is single[0]


def test_render_is_stable():
    expr = Logical("AND", [
        Comparison(">", ColumnRef(0, I, "price"), Literal(10, I)),
        Not(IsNull(ColumnRef(1, V, "name"))),
    ])
    assert expr.render() == "((price > 10) AND (NOT (name IS NULL)))"


def test_render_escapes_string_literals():
    assert Literal("it's", V).render() == "'it''s'"


nullable_bools = st.one_of(st.none(), st.booleans())


@given(st.lists(nullable_bools, min_size=1, max_size=30),
       st.lists(nullable_bools, min_size=1, max_size=30))
def test_logical_matches_rowwise_fold(avals, bvals):
    n = min(len(avals), len(bvals))
    ch = chunk_of(a=avals[:n], b=bvals[:n])
    ch.schema[0] = ColumnSchema("a", B)
    ch.schema[1] = ColumnSchema("b", B)
    from semaquery.values import tvl_and, tvl_or
    got = evaluate(Logical("AND", [col(ch, "a"), col(ch, "b")]), ch)
    assert got == [tvl_and(x, y) for x, y in zip(avals, bvals)]
    got = evaluate(Logical("OR", [col(ch, "a"), col(ch, "b")]), ch)
    assert got == [tvl_or(x, y) for x, y in zip(avals, bvals)]


@given(st.lists(st.one_of(st.none(), st.integers(-5, 5)), min_size=1, max_size=40),
       st.integers(-5, 5))
def test_comparison_matches_rowwise_python(values, pivot):
    ch = chunk_of(x=values)
    ch.schema[0] = ColumnSchema("x", I)
    got = evaluate(Comparison("<", col(ch, "x"), Literal(pivot, I)), ch)
    want = [None if v is None else v < pivot for v in values]
    assert got == want
