"""Deterministic rule-driven mock backend.

The mock is the verification oracle: given the same fixture and inputs
it always produces the same outputs, so call counts, token counts, and
result sets are exactly reproducible. Rules map input rows to output
records and can script failures, garbage replies, and injected latency.

Fixture file format (line-delimited JSON, versioned):

    {"record": "header", "version": 1}
    {"record": "rule", "when": {"title": "Titanic"}, "output": {"language": "English"}}
    {"record": "rule", "when": {"name": "bad"}, "fail_always": true}
    {"record": "rule", "garbage_times": 1, "output": {...}}
    {"record": "default", "output": {"language": "Unknown"}}
    {"record": "generation", "rows": [{"name": "Alabama"}, ...]}

`when` is an exact-value subset match over the row; `when_prompt` is a
substring match over the rendered prompt text. The first matching rule
wins; the default rule is required and matches everything.
"""

from __future__ import annotations

import json
import threading
import time

from ..errors import BackendError, IngestError
from ..predict.render import RenderedPrompt
from .base import BackendResponse, PredictorBackend, text_tokens


class MockRule:
    def __init__(self, output=None, when: dict | None = None,
                 when_prompt: str | None = None, predicate=None,
                 fail_times: int = 0, garbage_times: int = 0,
                 fail_always: bool = False, latency_ms: float = 0.0):
        self.output = output
        self.when = when
        self.when_prompt = when_prompt
        self.predicate = predicate
        self.fail_times = fail_times
        self.garbage_times = garbage_times
        self.fail_always = fail_always
        self.latency_ms = latency_ms

    def matches(self, row: dict, prompt_text: str) -> bool:
        if self.when_prompt is not None and self.when_prompt not in prompt_text:
            return False
        if self.when is not None:
            if not all(row.get(k) == v for k, v in self.when.items()):
                return False
        if self.predicate is not None and not self.predicate(row):
            return False
        return True

    def render_output(self, row: dict) -> dict:
        if callable(self.output):
            return dict(self.output(row))
        return dict(self.output or {})


class MockFixture:
    """Rule list plus a required default; evaluation is pure."""

    def __init__(self, default, rules: list[MockRule] | None = None,
                 generation_rows=None, call_latency=None,
                 generation_fail_times: int = 0,
                 generation_garbage_times: int = 0):
        if default is None:
            raise ValueError("a mock fixture needs a default rule")
        self.rules = list(rules or [])
        self.default = MockRule(output=default)
        self.generation_rows = generation_rows
        # batch-size -> simulated seconds; used by the cost-model harness
        self.call_latency = call_latency
        self.generation_fail_times = generation_fail_times
        self.generation_garbage_times = generation_garbage_times

    def match(self, row: dict, prompt_text: str) -> MockRule:
        for rule in self.rules:
            if rule.matches(row, prompt_text):
                return rule
        return self.default

    @classmethod
    def from_file(cls, path: str) -> "MockFixture":
        rules: list[MockRule] = []
        default = None
        generation_rows = None
        gen_fail = 0
        gen_garbage = 0
        with open(path, encoding="utf-8") as handle:
            for lineno, line in enumerate(handle, start=1):
                line = line.strip()
                if not line:
                    continue
                try:
                    record = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise IngestError(f"{path}:{lineno}: invalid JSON ({exc.msg})")
                kind = record.get("record")
                if kind == "header":
                    if record.get("version") != 1:
                        raise IngestError(f"{path}:{lineno}: unsupported fixture "
                                          f"version {record.get('version')!r}")
                elif kind == "rule":
                    rules.append(MockRule(
                        output=record.get("output"),
                        when=record.get("when"),
                        when_prompt=record.get("when_prompt"),
                        fail_times=record.get("fail_times", 0),
                        garbage_times=record.get("garbage_times", 0),
                        fail_always=record.get("fail_always", False),
                        latency_ms=record.get("latency_ms", 0.0)))
                elif kind == "default":
                    default = record.get("output")
                elif kind == "generation":
                    generation_rows = record.get("rows", [])
                    gen_fail = record.get("fail_times", 0)
                    gen_garbage = record.get("garbage_times", 0)
                else:
                    raise IngestError(f"{path}:{lineno}: unknown record kind "
                                      f"{kind!r}")
        if default is None:
            raise IngestError(f"{path}: fixture has no default rule")
        return cls(default, rules, generation_rows,
                   generation_fail_times=gen_fail,
                   generation_garbage_times=gen_garbage)


_GARBAGE = "Sure! Here you go: the answer depends on many factors."


class MockBackend(PredictorBackend):
    """LLM-shaped backend producing JSON from fixture rules.

    Every invocation, including scripted failures, is appended to
    self.log so tests can assert exact call patterns.
    """

    def __init__(self, fixture: MockFixture, sleep_scale: float = 0.0):
        self.fixture = fixture
        self.sleep_scale = sleep_scale
        self.log: list[dict] = []
        self._lock = threading.Lock()
        self.loaded = False

    def config(self, entry, config, outputs) -> None:
        pass

    def load(self) -> None:
        self.loaded = True

    # --- logging helpers used by tests ---

    def attempts(self, kind: str | None = None) -> list[dict]:
        with self._lock:
            entries = list(self.log)
        if kind is None:
            return entries
        return [e for e in entries if e["kind"] == kind]

    def batch_attempts(self) -> list[dict]:
        return [e for e in self.attempts("predict") if e["n"] > 1]

    def single_attempts(self) -> list[dict]:
        return [e for e in self.attempts("predict") if e["n"] == 1]

    def attempts_for(self, **match) -> int:
        count = 0
        for entry in self.attempts("predict"):
            for row in entry["rows"]:
                if all(row.get(k) == v for k, v in match.items()):
                    count += 1
                    break
        return count

    def reset_log(self) -> None:
        with self._lock:
            self.log.clear()

    # --- backend contract ---

    def _simulate(self, batch_size: int, extra_ms: float) -> float:
        latency = extra_ms / 1000.0
        if self.fixture.call_latency is not None:
            latency += self.fixture.call_latency(batch_size)
        if latency > 0 and self.sleep_scale > 0:
            time.sleep(latency * self.sleep_scale)
        return latency

    def predict_chunk(self, rows: list[dict],
                      prompt: RenderedPrompt) -> BackendResponse:
        with self._lock:
            self.log.append({"kind": "predict", "n": len(rows),
                             "rows": [dict(r) for r in rows]})
            matched = [self.fixture.match(row, prompt.text) for row in rows]
            fail = False
            garbage = False
            extra_ms = 0.0
            for rule in matched:
                extra_ms = max(extra_ms, rule.latency_ms)
                if rule.fail_always:
                    fail = True
                elif rule.fail_times > 0:
                    rule.fail_times -= 1
                    fail = True
                elif rule.garbage_times > 0:
                    rule.garbage_times -= 1
                    garbage = True
        latency = self._simulate(len(rows), extra_ms)
        input_tokens = text_tokens(prompt.text)
        if fail:
            raise BackendError("scripted mock failure", retryable=True)
        if garbage:
            return BackendResponse(text=_GARBAGE, input_tokens=input_tokens,
                                   output_tokens=text_tokens(_GARBAGE),
                                   latency_s=latency)
        objects = []
        for i, (row, rule) in enumerate(zip(rows, matched)):
            record = {"row_id": i}
            record.update(rule.render_output(row))
            objects.append(record)
        text = json.dumps(objects, separators=(",", ":"), ensure_ascii=False)
        return BackendResponse(text=text, input_tokens=input_tokens,
                               output_tokens=text_tokens(text),
                               latency_s=latency)

    def scan_chunk(self, prompt: RenderedPrompt) -> BackendResponse:
        with self._lock:
            self.log.append({"kind": "scan", "n": 0, "rows": []})
            if self.fixture.generation_fail_times > 0:
                self.fixture.generation_fail_times -= 1
                raise BackendError("scripted mock failure", retryable=True)
            garbage = False
            if self.fixture.generation_garbage_times > 0:
                self.fixture.generation_garbage_times -= 1
                garbage = True
        latency = self._simulate(1, 0.0)
        input_tokens = text_tokens(prompt.text)
        if garbage:
            return BackendResponse(text=_GARBAGE, input_tokens=input_tokens,
                                   output_tokens=text_tokens(_GARBAGE),
                                   latency_s=latency)
        rows = self.fixture.generation_rows
        if callable(rows):
            rows = rows(prompt)
        if rows is None:
            raise BackendError("mock fixture has no generation rows",
                               retryable=False)
        text = json.dumps(list(rows), separators=(",", ":"), ensure_ascii=False)
        return BackendResponse(text=text, input_tokens=input_tokens,
                               output_tokens=text_tokens(text),
                               latency_s=latency)
