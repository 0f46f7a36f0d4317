"""OpenAI-compatible remote backend over chat completions.

Requests carry the system and user messages plus passthrough model
kwargs; when the structured-output mode is json_schema_param the output
schema rides along as a response_format parameter. The secret is sent
as a bearer token and never logged or echoed in errors.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import httpx

from ..errors import BackendError, CatalogError
from ..predict.render import RenderedPrompt
from .base import BackendResponse, PredictorBackend, text_tokens
from .schema_gen import build_json_schema


@dataclass
class RemoteClientSettings:
    base_url: str
    model_path: str
    secret: str | None
    timeout: float
    structured_output: str  # json_schema_param | instruction_only

    @property
    def endpoint(self) -> str:
        base = self.base_url.rstrip("/")
        if base.endswith("/chat/completions"):
            return base
        if base.endswith("/v1"):
            return base + "/chat/completions"
        return base + "/v1/chat/completions"


class RemoteBackend(PredictorBackend):
    def __init__(self, secret_resolver=None, transport=None):
        self._resolver = secret_resolver
        self._transport = transport
        self.settings: RemoteClientSettings | None = None
        self.kwargs: dict[str, object] = {}
        self.outputs: list[tuple] = []
        self.max_retries = 2
        self.retry_backoff_ms = 250.0
        self._client: httpx.Client | None = None

    def config(self, entry, config, outputs) -> None:
        if not entry.api:
            raise CatalogError(f"model {entry.name} has no API endpoint")
        secret = None
        if entry.secret is not None:
            if self._resolver is None:
                raise CatalogError(f"no secret store configured for "
                                   f"{entry.secret}")
            secret = self._resolver(entry.secret)
        self.settings = RemoteClientSettings(
            base_url=entry.api,
            model_path=entry.path,
            secret=secret,
            timeout=config.timeout,
            structured_output=config.structured_output,
        )
        self.kwargs = dict(config.kwargs)
        self.outputs = list(outputs)
        self.max_retries = config.max_retries
        self.retry_backoff_ms = config.retry_backoff_ms

    def load(self) -> None:
        if self.settings is None:
            raise BackendError("remote backend is not configured",
                               retryable=False)
        self._client = httpx.Client(timeout=self.settings.timeout,
                                    transport=self._transport)

    def build_request_body(self, prompt: RenderedPrompt) -> dict:
        body: dict[str, object] = {
            "model": self.settings.model_path,
            "messages": [
                {"role": "system", "content": prompt.system},
                {"role": "user", "content": prompt.user},
            ],
        }
        body.update(self.kwargs)
        if self.settings.structured_output == "json_schema_param" and self.outputs:
            body["response_format"] = {
                "type": "json_schema",
                "json_schema": {
                    "name": "predictions",
                    "strict": True,
                    "schema": build_json_schema(self.outputs),
                },
            }
        return body

    def _post(self, prompt: RenderedPrompt) -> BackendResponse:
        if self._client is None:
            raise BackendError("remote backend is not loaded", retryable=False)
        body = self.build_request_body(prompt)
        headers = {}
        if self.settings.secret:
            headers["Authorization"] = f"Bearer {self.settings.secret}"
        attempt = 0
        while True:
            started = time.monotonic()
            try:
                response = self._client.post(self.settings.endpoint,
                                             json=body, headers=headers)
            except httpx.TimeoutException:
                raise BackendError("request timed out", retryable=True)
            except httpx.HTTPError as exc:
                raise BackendError(f"transport failure: {type(exc).__name__}",
                                   retryable=True)
            latency = time.monotonic() - started
            if response.status_code == 429:
                if attempt >= self.max_retries:
                    raise BackendError("rate limited (HTTP 429)",
                                       retryable=True)
                attempt += 1
                time.sleep(self._retry_delay(response, attempt))
                continue
            if response.status_code >= 500:
                raise BackendError(f"server error (HTTP {response.status_code})",
                                   retryable=True)
            if response.status_code >= 400:
                raise BackendError(
                    f"request rejected (HTTP {response.status_code}): "
                    f"{response.text[:200]}", retryable=False)
            return self._parse_response(response, prompt, latency)

    def _retry_delay(self, response: httpx.Response, attempt: int) -> float:
        retry_after = response.headers.get("Retry-After")
        if retry_after:
            try:
                return max(0.0, float(retry_after))
            except ValueError:
                pass
        return self.retry_backoff_ms * (2 ** (attempt - 1)) / 1000.0

    def _parse_response(self, response: httpx.Response,
                        prompt: RenderedPrompt, latency: float) -> BackendResponse:
        try:
            data = response.json()
            content = data["choices"][0]["message"]["content"]
        except (ValueError, KeyError, IndexError, TypeError):
            raise BackendError("malformed chat-completions response",
                               retryable=True)
        usage = data.get("usage") or {}
        input_tokens = usage.get("prompt_tokens", text_tokens(prompt.text))
        output_tokens = usage.get("completion_tokens", text_tokens(content))
        return BackendResponse(text=content, input_tokens=input_tokens,
                               output_tokens=output_tokens, latency_s=latency)

    def predict_chunk(self, rows, prompt: RenderedPrompt) -> BackendResponse:
        return self._post(prompt)

    def scan_chunk(self, prompt: RenderedPrompt) -> BackendResponse:
        return self._post(prompt)

    def close(self) -> None:
        if self._client is not None:
            self._client.close()
