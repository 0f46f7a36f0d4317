"""Binder tests: name resolution, plan lowering, and diagnostics."""

import pytest

from semaquery.catalog import ModelCatalog, ModelEntry
from semaquery.chunk import TableCatalog
from semaquery.errors import BindError, CatalogError
from semaquery.expressions import Comparison, Literal
from semaquery.plan.binder import Binder
from semaquery.plan.logical import (
    SCALAR, TABLE_GENERATION, TABLE_INFERENCE,
    Aggregate, Filter, Get, Join, Limit, Order, Predict, Project, walk,
)
from semaquery.sql.parser import parse
from semaquery.values import ValueType

from conftest import make_table

V = ValueType.VARCHAR
I = ValueType.INTEGER


@pytest.fixture
def binder():
    tables = TableCatalog()
    tables.register(make_table("Product", [("name", V), ("category", V),
                                           ("quantity", I), ("price", I)],
                               [("cpu-1", "CPU", 3, 200)]))
    tables.register(make_table("Movie", [("movie_id", I), ("title", V), ("plot", V)],
                               [(1, "Titanic", "ship")],
                               primary_key=["movie_id"]))
    tables.register(make_table("Review", [("movie_id", I), ("review", V)],
                               [(1, "meh")]))
    models = ModelCatalog()
    models.create(ModelEntry(name="judge", kind="LLM", path="mock", on_prompt=True))
    models.create(ModelEntry(name="churn", kind="TABULAR", path="/m.onnx",
                             table="Product",
                             features=("quantity", "price"),
                             output_columns=(("will_sell", ValueType.BOOLEAN),)))
    models.create(ModelEntry(name="embedder", kind="EMBED", path="embedding-3"))
    return Binder(tables, models)


def bind(binder, sql):
    return binder.bind_select(parse(sql))


def nodes_of(plan, cls):
    return [n for n in walk(plan) if isinstance(n, cls)]


def test_simple_select_shape(binder):
    plan = bind(binder, "SELECT name FROM Product WHERE price > 100")
    assert isinstance(plan, Project)
    assert [c.name for c in plan.schema] == ["name"]
    assert isinstance(plan.child, Filter)
    assert isinstance(plan.child.child, Get)


def test_star_expands_in_order(binder):
    plan = bind(binder, "SELECT * FROM Product")
    assert [c.name for c in plan.schema] == ["name", "category", "quantity", "price"]


def test_qualified_star(binder):
    plan = bind(binder, "SELECT m.* FROM Movie AS m JOIN Review AS r ON m.movie_id = r.movie_id")
    assert [c.name for c in plan.schema] == ["movie_id", "title", "plot"]


def test_unknown_column_raises(binder):
    with pytest.raises(BindError, match="ghost"):
        bind(binder, "SELECT ghost FROM Product")


def test_unknown_table_raises(binder):
    with pytest.raises(CatalogError, match="table not found"):
        bind(binder, "SELECT 1 FROM Nope")


def test_ambiguous_column_raises(binder):
    with pytest.raises(BindError, match="ambiguous"):
        bind(binder, "SELECT movie_id FROM Movie JOIN Review ON TRUE")


def test_alias_hides_table_name(binder):
    with pytest.raises(BindError):
        bind(binder, "SELECT Product.name FROM Product AS p")


def test_double_quoted_unresolvable_becomes_literal(binder):
    plan = bind(binder, 'SELECT name FROM Product WHERE category = "USA"')
    filt = nodes_of(plan, Filter)[0]
    assert isinstance(filt.predicate, Comparison)
    assert isinstance(filt.predicate.right, Literal)
    assert filt.predicate.right.value == "USA"


def test_double_quoted_resolvable_stays_column(binder):
    plan = bind(binder, 'SELECT "name" FROM Product')
    assert [c.name for c in plan.schema] == ["name"]


def test_scalar_predict_in_projection(binder):
    plan = bind(binder, "SELECT title, LLM judge (PROMPT 'the {lang VARCHAR} of {{title}}') FROM Movie")
    predicts = nodes_of(plan, Predict)
    assert len(predicts) == 1
    info = predicts[0].info
    assert info.mode == SCALAR
    assert info.model == "judge"
    assert info.input_names == ("title",)
    assert [c.name for c in info.outputs] == ["lang"]
    # the predicted column keeps its prompt name in the output schema
    assert [c.name for c in plan.schema] == ["title", "lang"]


def test_scalar_predict_output_is_marked_predicted(binder):
    plan = bind(binder, "SELECT LLM judge (PROMPT 'the {lang VARCHAR} of {{title}}') FROM Movie")
    assert plan.schema[0].origin == "predicted"


def test_where_predicate_gets_implicit_boolean_answer(binder):
    plan = bind(binder, "SELECT title FROM Movie WHERE LLM judge (PROMPT 'is {{plot}} sad?')")
    predicts = nodes_of(plan, Predict)
    assert len(predicts) == 1
    out = predicts[0].info.outputs[0]
    assert out.name == "answer"
    assert out.type is ValueType.BOOLEAN
    # hidden column: not part of the final projection
    assert [c.name for c in plan.schema] == ["title"]


def test_where_predicate_with_typed_output(binder):
    plan = bind(binder, "SELECT title FROM Movie WHERE LLM judge (PROMPT 'is {{plot}} {sad BOOL}')")
    out = nodes_of(plan, Predict)[0].info.outputs[0]
    assert out.name == "sad"


def test_non_boolean_predicate_rejected(binder):
    with pytest.raises(BindError, match="BOOLEAN"):
        bind(binder, "SELECT title FROM Movie WHERE LLM judge (PROMPT 'the {lang VARCHAR} of {{title}}')")


def test_scalar_predict_requires_single_output(binder):
    with pytest.raises(BindError, match="exactly one"):
        bind(binder, "SELECT LLM judge (PROMPT '{a VARCHAR} and {b VARCHAR} of {{title}}') FROM Movie")


def test_table_inference_appends_outputs(binder):
    plan = bind(binder, "SELECT * FROM LLM judge (PROMPT 'find {genre VARCHAR} in {{plot}}', Movie)")
    assert [c.name for c in plan.schema] == ["movie_id", "title", "plot", "genre"]
    info = nodes_of(plan, Predict)[0].info
    assert info.mode == TABLE_INFERENCE


def test_generation_requires_outputs(binder):
    with pytest.raises(BindError, match="output"):
        bind(binder, "SELECT * FROM LLM judge (PROMPT 'no outputs here') AS g")


def test_generation_rejects_inputs(binder):
    with pytest.raises(BindError):
        bind(binder, "SELECT * FROM LLM judge (PROMPT 'find {x VARCHAR} of {{title}}') AS g")


def test_generation_plan_is_leaf_predict(binder):
    plan = bind(binder, "SELECT * FROM LLM judge (PROMPT 'list the {name VARCHAR}') AS g")
    predict = nodes_of(plan, Predict)[0]
    assert predict.info.mode == TABLE_GENERATION
    assert predict.children == []
    assert [c.name for c in plan.schema] == ["name"]


def test_generation_alias_qualifies_columns(binder):
    plan = bind(binder, "SELECT g.name FROM LLM judge (PROMPT 'list the {name VARCHAR}') AS g")
    assert [c.name for c in plan.schema] == ["name"]


def test_predicted_column_collision_raises(binder):
    with pytest.raises(BindError, match="collides"):
        bind(binder, "SELECT * FROM LLM judge (PROMPT 'find {title VARCHAR} in {{plot}}', Movie)")


def test_natural_join_dedups_shared_columns(binder):
    plan = bind(binder, "SELECT * FROM Movie NATURAL JOIN Review")
    assert [c.name for c in plan.schema] == ["movie_id", "title", "plot", "review"]
    join = nodes_of(plan, Join)[0]
    assert join.kind == "inner"
    assert join.condition is not None


def test_natural_join_without_shared_columns_is_cross(binder):
    plan = bind(binder, "SELECT * FROM Product NATURAL JOIN Review")
    join = nodes_of(plan, Join)[0]
    assert join.kind == "cross"
    assert len(plan.schema) == 6


def test_semantic_join_lowers_to_filter_over_cross(binder):
    plan = bind(binder, """
        SELECT m.title FROM Movie AS m JOIN Review AS r
        ON LLM judge (PROMPT 'does {{m.plot}} match {{r.review}}')
    """)
    filters = nodes_of(plan, Filter)
    joins = nodes_of(plan, Join)
    predicts = nodes_of(plan, Predict)
    assert joins[0].kind == "cross"
    assert len(predicts) == 1
    assert predicts[0].info.input_names == ("plot", "review")
    assert filters, "semantic join must leave a Filter above the Predict"


def test_semantic_join_one_sided_prompt_notice(binder):
    bind(binder, """
        SELECT m.title FROM Movie AS m JOIN Review AS r
        ON LLM judge (PROMPT 'is {{m.plot}} good?')
    """)
    assert any("only reads the left side" in n for n in binder.notices)


def test_classical_join_condition_stays_join(binder):
    plan = bind(binder, "SELECT title FROM Movie JOIN Review ON Movie.movie_id = Review.movie_id")
    join = nodes_of(plan, Join)[0]
    assert join.kind == "inner"
    assert join.condition is not None


def test_group_by_with_aggregates(binder):
    plan = bind(binder, "SELECT category, count(*), avg(price) FROM Product GROUP BY category")
    agg = nodes_of(plan, Aggregate)[0]
    assert [s.func for s in agg.aggs] == ["count", "avg"]
    assert [c.name for c in plan.schema] == ["category", "count(*)", "avg(price)"]


def test_semantic_aggregate_spec(binder):
    plan = bind(binder, """
        SELECT title, LLM AGG judge (PROMPT 'summarize {s VARCHAR} of {{plot}}')
        FROM Movie GROUP BY title
    """)
    agg = nodes_of(plan, Aggregate)[0]
    spec = agg.aggs[0]
    assert spec.func == "llm"
    assert spec.model == "judge"
    assert spec.input_names == ("plot",)
    assert agg.schema[1].origin == "predicted"


def test_order_by_and_limit_nodes(binder):
    plan = bind(binder, "SELECT name FROM Product ORDER BY price DESC LIMIT 3")
    assert nodes_of(plan, Limit)
    order = nodes_of(plan, Order)[0]
    assert order.keys[0][1] is False  # descending


def test_order_by_semantic_key(binder):
    plan = bind(binder, "SELECT title FROM Movie ORDER BY LLM judge (PROMPT 'rank {r INTEGER} for {{title}}')")
    assert nodes_of(plan, Predict)
    assert nodes_of(plan, Order)


def test_group_by_semantic_key(binder):
    plan = bind(binder, """
        SELECT count(*) FROM Movie
        GROUP BY LLM judge (PROMPT 'the {genre VARCHAR} of {{plot}}')
    """)
    assert nodes_of(plan, Predict)
    assert nodes_of(plan, Aggregate)


def test_tabular_scalar_explicit_features(binder):
    plan = bind(binder, "SELECT PREDICT churn(quantity, price) FROM Product")
    info = nodes_of(plan, Predict)[0].info
    assert info.model == "churn"
    assert info.mode == SCALAR
    assert [c.name for c in info.outputs] == ["will_sell"]


def test_tabular_table_argument_expands_features(binder):
    plan = bind(binder, "SELECT PREDICT churn(Product) FROM Product")
    info = nodes_of(plan, Predict)[0].info
    assert info.input_names == ("quantity", "price")


def test_tabular_from_form(binder):
    plan = bind(binder, "SELECT * FROM PREDICT churn(Product)")
    assert [c.name for c in plan.schema] == [
        "name", "category", "quantity", "price", "will_sell"]


def test_tabular_arity_checked(binder):
    with pytest.raises(BindError, match="expects 2 features, got 1"):
        bind(binder, "SELECT PREDICT churn(price) FROM Product")


def test_embed_model_rejected_in_query(binder):
    with pytest.raises(BindError, match="embedding model"):
        bind(binder, "SELECT LLM embedder (PROMPT 'the {x VARCHAR} of {{title}}') FROM Movie")


def test_unknown_model_raises(binder):
    with pytest.raises(Exception, match="model not found"):
        bind(binder, "SELECT LLM ghost (PROMPT 'the {x VARCHAR} of {{title}}') FROM Movie")


def test_prompt_input_must_resolve(binder):
    with pytest.raises(BindError, match="nonexistent"):
        bind(binder, "SELECT LLM judge (PROMPT 'find {x VARCHAR} in {{nonexistent}}') FROM Movie")


def test_qualified_prompt_inputs_resolve_through_alias(binder):
    plan = bind(binder, "SELECT LLM judge (PROMPT 'find {x VARCHAR} in {{m.plot}}') FROM Movie AS m")
    info = nodes_of(plan, Predict)[0].info
    assert info.input_names == ("plot",)


def test_select_without_from(binder):
    plan = bind(binder, "SELECT 1 + 1")
    assert plan.schema[0].type is I
