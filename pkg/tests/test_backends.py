"""Mock and tabular backends: rule matching, scripted failures, logging."""

import json

import pytest

from semaquery.backends import (
    MockBackend,
    MockFixture,
    MockRule,
    TabularStub,
    default_tabular_fn,
    text_tokens,
)
from semaquery.catalog import ModelEntry
from semaquery.errors import BackendError, IngestError
from semaquery.predict.render import RenderedPrompt
from semaquery.values import ValueType

from conftest import write_fixture

PROMPT = RenderedPrompt("sys", "classify the rows")


def backend_for(default, rules=(), **kwargs):
    return MockBackend(MockFixture(default, list(rules), **kwargs))


# ---------------------------------------------------------------- tokens


def test_text_tokens_rounds_up():
    assert text_tokens("") == 0
    assert text_tokens("abcd") == 1
    assert text_tokens("abcde") == 2
    assert text_tokens("x" * 400) == 100


# ---------------------------------------------------------------- rules


def test_rule_when_is_subset_match():
    rule = MockRule(output={"t": "pos"}, when={"name": "CPU"})
    assert rule.matches({"name": "CPU", "price": 5}, "")
    assert not rule.matches({"name": "GPU"}, "")
    assert not rule.matches({}, "")


def test_rule_when_prompt_is_substring_match():
    rule = MockRule(output={}, when_prompt="positive")
    assert rule.matches({}, "is this positive?")
    assert not rule.matches({}, "is this negative?")


def test_rule_predicate():
    rule = MockRule(output={}, predicate=lambda row: row["n"] > 3)
    assert rule.matches({"n": 4}, "")
    assert not rule.matches({"n": 1}, "")


def test_rule_callable_output_sees_the_row():
    rule = MockRule(output=lambda row: {"echo": row["name"]})
    assert rule.render_output({"name": "x"}) == {"echo": "x"}


def test_fixture_first_matching_rule_wins():
    fixture = MockFixture(
        {"t": "default"},
        [MockRule(output={"t": "first"}, when={"k": 1}),
         MockRule(output={"t": "second"}, when={"k": 1})],
    )
    assert fixture.match({"k": 1}, "").render_output({}) == {"t": "first"}
    assert fixture.match({"k": 2}, "").render_output({}) == {"t": "default"}


def test_fixture_requires_default():
    with pytest.raises(ValueError, match="needs a default"):
        MockFixture(None)


# ---------------------------------------------------------------- fixture files


def test_fixture_file_roundtrip(tmp_path):
    path = write_fixture(
        tmp_path / "f.jsonl",
        default={"t": "d"},
        rules=[{"when": {"name": "a"}, "output": {"t": "pos"}},
               {"when_prompt": "tone", "fail_times": 2}],
        generation=[{"state": "Alabama"}],
    )
    fixture = MockFixture.from_file(path)
    assert len(fixture.rules) == 2
    assert fixture.rules[0].when == {"name": "a"}
    assert fixture.rules[1].fail_times == 2
    assert fixture.default.render_output({}) == {"t": "d"}
    assert fixture.generation_rows == [{"state": "Alabama"}]


def test_fixture_file_invalid_json(tmp_path):
    path = tmp_path / "bad.jsonl"
    path.write_text('{"record": "header", "version": 1}\nnot json\n')
    with pytest.raises(IngestError, match="invalid JSON"):
        MockFixture.from_file(str(path))


def test_fixture_file_unknown_record(tmp_path):
    path = tmp_path / "bad.jsonl"
    path.write_text('{"record": "mystery"}\n')
    with pytest.raises(IngestError, match="unknown record kind"):
        MockFixture.from_file(str(path))


def test_fixture_file_missing_default(tmp_path):
    path = tmp_path / "bad.jsonl"
    path.write_text('{"record": "rule", "output": {}}\n')
    with pytest.raises(IngestError, match="no default rule"):
        MockFixture.from_file(str(path))


def test_fixture_file_unsupported_version(tmp_path):
    path = tmp_path / "bad.jsonl"
    path.write_text('{"record": "header", "version": 9}\n')
    with pytest.raises(IngestError, match="unsupported fixture version"):
        MockFixture.from_file(str(path))


def test_fixture_file_skips_blank_lines(tmp_path):
    path = tmp_path / "f.jsonl"
    path.write_text('\n{"record": "default", "output": {"t": "d"}}\n\n')
    fixture = MockFixture.from_file(str(path))
    assert fixture.default.render_output({}) == {"t": "d"}


# ---------------------------------------------------------------- predict calls


def test_predict_chunk_returns_keyed_json():
    backend = backend_for({"t": "d"}, [MockRule(output={"t": "pos"},
                                                when={"name": "a"})])
    response = backend.predict_chunk([{"name": "a"}, {"name": "b"}], PROMPT)
    assert json.loads(response.text) == [
        {"row_id": 0, "t": "pos"},
        {"row_id": 1, "t": "d"},
    ]
    assert response.input_tokens == text_tokens(PROMPT.text)
    assert response.output_tokens == text_tokens(response.text)


def test_predict_chunk_is_deterministic():
    rows = [{"name": "a"}, {"name": "b"}]
    first = backend_for({"t": "d"}).predict_chunk(rows, PROMPT)
    second = backend_for({"t": "d"}).predict_chunk(rows, PROMPT)
    assert first.text == second.text


def test_fail_times_decrements_then_succeeds():
    backend = backend_for({"t": "d"},
                          [MockRule(when={"name": "flaky"}, fail_times=2,
                                    output={"t": "ok"})])
    for _ in range(2):
        with pytest.raises(BackendError, match="scripted mock failure"):
            backend.predict_chunk([{"name": "flaky"}], PROMPT)
    response = backend.predict_chunk([{"name": "flaky"}], PROMPT)
    assert json.loads(response.text)[0]["t"] == "ok"


def test_fail_always_never_recovers():
    backend = backend_for({"t": "d"},
                          [MockRule(when={"name": "bad"}, fail_always=True)])
    for _ in range(4):
        with pytest.raises(BackendError):
            backend.predict_chunk([{"name": "bad"}], PROMPT)


def test_scripted_failures_are_retryable():
    backend = backend_for({"t": "d"}, [MockRule(when={}, fail_times=1)])
    with pytest.raises(BackendError) as exc:
        backend.predict_chunk([{"name": "x"}], PROMPT)
    assert exc.value.retryable


def test_one_poisoned_row_fails_the_whole_batch():
    backend = backend_for({"t": "d"},
                          [MockRule(when={"name": "bad"}, fail_always=True)])
    with pytest.raises(BackendError):
        backend.predict_chunk([{"name": "good"}, {"name": "bad"}], PROMPT)


def test_garbage_times_returns_prose_once():
    backend = backend_for({"t": "d"},
                          [MockRule(when={"name": "g"}, garbage_times=1,
                                    output={"t": "ok"})])
    first = backend.predict_chunk([{"name": "g"}], PROMPT)
    with pytest.raises(json.JSONDecodeError):
        json.loads(first.text)
    second = backend.predict_chunk([{"name": "g"}], PROMPT)
    assert json.loads(second.text)[0]["t"] == "ok"


def test_call_latency_reported_without_sleeping():
    fixture = MockFixture({"t": "d"}, call_latency=lambda n: 0.5 * n)
    backend = MockBackend(fixture, sleep_scale=0.0)
    response = backend.predict_chunk([{"a": 1}, {"a": 2}], PROMPT)
    assert response.latency_s == pytest.approx(1.0)


def test_rule_latency_ms_feeds_latency():
    backend = backend_for({"t": "d"},
                          [MockRule(when={}, output={"t": "d"},
                                    latency_ms=250.0)])
    response = backend.predict_chunk([{"a": 1}], PROMPT)
    assert response.latency_s == pytest.approx(0.25)


# ---------------------------------------------------------------- generation


def test_scan_chunk_returns_generation_rows():
    backend = MockBackend(MockFixture({"t": "d"},
                                      generation_rows=[{"state": "Alabama"},
                                                       {"state": "Alaska"}]))
    response = backend.scan_chunk(PROMPT)
    assert json.loads(response.text) == [{"state": "Alabama"},
                                         {"state": "Alaska"}]


def test_scan_chunk_without_rows_is_fatal():
    backend = backend_for({"t": "d"})
    with pytest.raises(BackendError) as exc:
        backend.scan_chunk(PROMPT)
    assert not exc.value.retryable


def test_scan_chunk_scripted_failure_and_garbage():
    fixture = MockFixture({"t": "d"}, generation_rows=[{"s": "x"}],
                          generation_fail_times=1, generation_garbage_times=1)
    backend = MockBackend(fixture)
    with pytest.raises(BackendError):
        backend.scan_chunk(PROMPT)
    garbage = backend.scan_chunk(PROMPT)
    with pytest.raises(json.JSONDecodeError):
        json.loads(garbage.text)
    clean = backend.scan_chunk(PROMPT)
    assert json.loads(clean.text) == [{"s": "x"}]


def test_generation_rows_may_be_callable():
    fixture = MockFixture({"t": "d"},
                          generation_rows=lambda p: [{"echo": p.user}])
    response = MockBackend(fixture).scan_chunk(PROMPT)
    assert json.loads(response.text) == [{"echo": PROMPT.user}]


# ---------------------------------------------------------------- call log


def test_log_records_every_attempt_including_failures():
    backend = backend_for({"t": "d"}, [MockRule(when={"k": 1}, fail_times=1,
                                                output={})])
    with pytest.raises(BackendError):
        backend.predict_chunk([{"k": 1}], PROMPT)
    backend.predict_chunk([{"k": 1}, {"k": 2}], PROMPT)
    backend.scan_chunk(PROMPT) if backend.fixture.generation_rows else None
    assert [e["n"] for e in backend.attempts("predict")] == [1, 2]
    assert backend.batch_attempts() == [backend.attempts("predict")[1]]
    assert backend.single_attempts() == [backend.attempts("predict")[0]]


def test_attempts_for_counts_batches_containing_the_row():
    backend = backend_for({"t": "d"})
    backend.predict_chunk([{"k": 1}, {"k": 2}], PROMPT)
    backend.predict_chunk([{"k": 1}], PROMPT)
    assert backend.attempts_for(k=1) == 2
    assert backend.attempts_for(k=2) == 1
    assert backend.attempts_for(k=9) == 0


def test_reset_log():
    backend = backend_for({"t": "d"})
    backend.predict_chunk([{"k": 1}], PROMPT)
    backend.reset_log()
    assert backend.attempts() == []


# ---------------------------------------------------------------- tabular stub


def tabular_entry():
    return ModelEntry(
        name="churn", kind="tabular", path="model.bin",
        table="Customer", features=("age", "income"),
        output_columns=(("will_buy", ValueType.INTEGER),
                        ("label", ValueType.VARCHAR)),
    )


def test_tabular_stub_applies_fixture_fn():
    stub = TabularStub(fn=lambda row: {"will_buy": row["age"] + 1, "label": "x"})
    stub.config(tabular_entry(), None, [])
    response = stub.predict_chunk([{"age": 30, "income": 10},
                                   {"age": 40, "income": 20}])
    assert response.records == [{"will_buy": 31, "label": "x"},
                                {"will_buy": 41, "label": "x"}]
    assert stub.log == [2]


def test_tabular_stub_default_fn_is_deterministic_and_typed():
    entry = tabular_entry()
    fn = default_tabular_fn(entry)
    row = {"age": 30, "income": 55000}
    first, second = fn(row), fn(row)
    assert first == second
    assert isinstance(first["will_buy"], int)
    assert 0 <= first["will_buy"] < 7
    assert isinstance(first["label"], str)


def test_tabular_stub_checks_feature_arity():
    stub = TabularStub()
    stub.config(tabular_entry(), None, [])
    with pytest.raises(BackendError, match="expected 2 features, got 1"):
        stub.predict_chunk([{"age": 30}])


def test_tabular_stub_cannot_generate():
    stub = TabularStub()
    stub.config(tabular_entry(), None, [])
    with pytest.raises(BackendError, match="cannot generate"):
        stub.scan_chunk(PROMPT)
