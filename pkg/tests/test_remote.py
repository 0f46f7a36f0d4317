"""Remote chat-completions client, replayed offline through cassettes."""

import json

import httpx
import pytest

from semaquery.backends import CassetteTransport, RemoteBackend, text_tokens
from semaquery.backends.cassette import CassetteExhausted
from semaquery.backends.remote import RemoteClientSettings
from semaquery.backends.schema_gen import build_json_schema
from semaquery.catalog import ModelEntry
from semaquery.errors import BackendError, CatalogError
from semaquery.predict.config import PredictConfig
from semaquery.predict.render import RenderedPrompt
from semaquery.values import ValueType

V = ValueType.VARCHAR

PROMPT = RenderedPrompt("be terse", "classify the rows")

OK_BODY = {
    "choices": [{"message": {"content": '[{"row_id":0,"tone":"pos"}]'}}],
    "usage": {"prompt_tokens": 100, "completion_tokens": 5},
}


def make_backend(exchanges, secret="sk-test-123",
                 api="https://api.openai.com/v1",
                 structured="json_schema_param", model_kwargs=None,
                 outputs=(("tone", V),), transport=None):
    transport = transport or CassetteTransport(exchanges)
    resolver = (lambda name: secret) if secret else None
    backend = RemoteBackend(secret_resolver=resolver, transport=transport)
    entry = ModelEntry(name="o4mini", kind="llm", path="o4-mini", api=api,
                       on_prompt=True,
                       secret="openai_key" if secret else None)
    config = PredictConfig(retry_backoff_ms=0.0,
                           structured_output=structured,
                           kwargs=dict(model_kwargs or {}))
    backend.config(entry, config, list(outputs))
    backend.load()
    return backend, transport


# ---------------------------------------------------------------- endpoints


@pytest.mark.parametrize("base,expected", [
    ("https://api.openai.com/v1/chat/completions",
     "https://api.openai.com/v1/chat/completions"),
    ("https://api.openai.com/v1",
     "https://api.openai.com/v1/chat/completions"),
    ("https://api.openai.com",
     "https://api.openai.com/v1/chat/completions"),
    ("http://localhost:8080/v1/",
     "http://localhost:8080/v1/chat/completions"),
])
def test_endpoint_normalization(base, expected):
    settings = RemoteClientSettings(base_url=base, model_path="m", secret=None,
                                    timeout=1.0, structured_output="json_schema_param")
    assert settings.endpoint == expected


# ---------------------------------------------------------------- request body


def test_golden_request_body():
    backend, transport = make_backend([{"json": OK_BODY}])
    backend.predict_chunk([{"name": "x"}], PROMPT)
    request = transport.requests[0]
    assert request["method"] == "POST"
    assert request["url"] == "https://api.openai.com/v1/chat/completions"
    assert request["body"] == {
        "model": "o4-mini",
        "messages": [
            {"role": "system", "content": "be terse"},
            {"role": "user", "content": "classify the rows"},
        ],
        "response_format": {
            "type": "json_schema",
            "json_schema": {
                "name": "predictions",
                "strict": True,
                "schema": build_json_schema([("tone", V)]),
            },
        },
    }


def test_model_kwargs_ride_along():
    backend, transport = make_backend([{"json": OK_BODY}],
                                      model_kwargs={"temperature": 0.5})
    backend.predict_chunk([], PROMPT)
    assert transport.requests[0]["body"]["temperature"] == 0.5


def test_instruction_only_mode_omits_response_format():
    backend, transport = make_backend([{"json": OK_BODY}],
                                      structured="instruction_only")
    backend.predict_chunk([], PROMPT)
    assert "response_format" not in transport.requests[0]["body"]


def test_generation_posts_to_same_endpoint():
    backend, transport = make_backend([{"json": OK_BODY}])
    backend.scan_chunk(PROMPT)
    assert transport.requests[0]["url"].endswith("/chat/completions")


# ---------------------------------------------------------------- auth


def test_bearer_token_from_secret_store():
    backend, transport = make_backend([{"json": OK_BODY}])
    backend.predict_chunk([], PROMPT)
    assert transport.requests[0]["headers"]["authorization"] == "Bearer sk-test-123"


def test_no_secret_no_auth_header():
    backend, transport = make_backend([{"json": OK_BODY}], secret=None)
    backend.predict_chunk([], PROMPT)
    assert "authorization" not in transport.requests[0]["headers"]


def test_secret_is_required_to_have_a_resolver():
    backend = RemoteBackend(secret_resolver=None)
    entry = ModelEntry(name="m", kind="llm", path="p", api="https://x",
                       secret="key")
    with pytest.raises(CatalogError, match="no secret store"):
        backend.config(entry, PredictConfig(), [])


def test_api_endpoint_is_required():
    backend = RemoteBackend()
    entry = ModelEntry(name="m", kind="llm", path="p")
    with pytest.raises(CatalogError, match="no API endpoint"):
        backend.config(entry, PredictConfig(), [])


# ---------------------------------------------------------------- responses


def test_parses_content_and_usage():
    backend, _ = make_backend([{"json": OK_BODY}])
    response = backend.predict_chunk([], PROMPT)
    assert response.text == '[{"row_id":0,"tone":"pos"}]'
    assert response.input_tokens == 100
    assert response.output_tokens == 5


def test_missing_usage_falls_back_to_char_estimate():
    body = {"choices": [{"message": {"content": "[]"}}]}
    backend, _ = make_backend([{"json": body}])
    response = backend.predict_chunk([], PROMPT)
    assert response.input_tokens == text_tokens(PROMPT.text)
    assert response.output_tokens == text_tokens("[]")


def test_malformed_response_is_retryable():
    backend, _ = make_backend([{"json": {"unexpected": True}}])
    with pytest.raises(BackendError, match="malformed chat-completions") as exc:
        backend.predict_chunk([], PROMPT)
    assert exc.value.retryable


# ---------------------------------------------------------------- status codes


def test_429_then_200_retries_via_retry_after():
    exchanges = [
        {"status": 429, "json": {}, "headers": {"Retry-After": "0"}},
        {"json": OK_BODY},
    ]
    backend, transport = make_backend(exchanges)
    response = backend.predict_chunk([], PROMPT)
    assert response.text == OK_BODY["choices"][0]["message"]["content"]
    assert len(transport.requests) == 2


def test_429_exhausting_retries_raises():
    exchanges = [{"status": 429, "json": {}, "headers": {"Retry-After": "0"}}] * 3
    backend, transport = make_backend(exchanges)
    with pytest.raises(BackendError, match="rate limited") as exc:
        backend.predict_chunk([], PROMPT)
    assert exc.value.retryable
    assert len(transport.requests) == 3  # first + max_retries


def test_server_errors_are_retryable():
    backend, _ = make_backend([{"status": 503, "json": {}}])
    with pytest.raises(BackendError, match=r"HTTP 503") as exc:
        backend.predict_chunk([], PROMPT)
    assert exc.value.retryable


def test_client_errors_are_fatal_with_body_excerpt():
    body = {"error": {"message": "model does not exist"}}
    backend, _ = make_backend([{"status": 404, "json": body}])
    with pytest.raises(BackendError, match="request rejected") as exc:
        backend.predict_chunk([], PROMPT)
    assert not exc.value.retryable
    assert "model does not exist" in str(exc.value)


def test_error_messages_never_leak_the_secret():
    cases = [
        [{"status": 429, "json": {}, "headers": {"Retry-After": "0"}}] * 3,
        [{"status": 500, "json": {}}],
        [{"status": 400, "json": {"error": "bad request"}}],
        [{"json": {"nope": 1}}],
    ]
    for exchanges in cases:
        backend, _ = make_backend(exchanges)
        with pytest.raises(BackendError) as exc:
            backend.predict_chunk([], PROMPT)
        assert "sk-test-123" not in str(exc.value)
        assert "sk-test-123" not in repr(exc.value)


# ---------------------------------------------------------------- transport faults


class _RaisingTransport(httpx.BaseTransport):
    def __init__(self, exc):
        self.exc = exc

    def handle_request(self, request):
        raise self.exc


def test_timeouts_are_retryable():
    backend, _ = make_backend([], transport=_RaisingTransport(
        httpx.ConnectTimeout("slow")))
    with pytest.raises(BackendError, match="timed out") as exc:
        backend.predict_chunk([], PROMPT)
    assert exc.value.retryable


def test_transport_failures_name_the_class_not_the_details():
    backend, _ = make_backend([], transport=_RaisingTransport(
        httpx.ConnectError("dns says sk-test-123")))
    with pytest.raises(BackendError, match="transport failure: ConnectError") as exc:
        backend.predict_chunk([], PROMPT)
    assert "sk-test-123" not in str(exc.value)


def test_unloaded_backend_refuses_calls():
    backend = RemoteBackend(transport=CassetteTransport([]))
    entry = ModelEntry(name="m", kind="llm", path="p", api="https://x")
    backend.config(entry, PredictConfig(), [])
    with pytest.raises(BackendError, match="not loaded"):
        backend.predict_chunk([], PROMPT)


def test_close_shuts_the_client():
    backend, _ = make_backend([{"json": OK_BODY}])
    backend.close()
    with pytest.raises(RuntimeError):
        backend.predict_chunk([], PROMPT)


# ---------------------------------------------------------------- cassette


def test_cassette_exhaustion_is_loud():
    backend, _ = make_backend([{"json": OK_BODY}])
    backend.predict_chunk([], PROMPT)
    with pytest.raises(CassetteExhausted, match="unexpected request #2"):
        backend.predict_chunk([], PROMPT)


def test_cassette_from_file(tmp_path):
    path = tmp_path / "cassette.json"
    path.write_text(json.dumps([{"status": 200, "json": OK_BODY}]))
    transport = CassetteTransport.from_file(str(path))
    backend, _ = make_backend([], transport=transport)
    response = backend.predict_chunk([], PROMPT)
    assert response.text == OK_BODY["choices"][0]["message"]["content"]
