"""The physical predict operator.

Per input chunk: rows split into cache hits and misses, misses group
into batches of at most batch_size, batches dispatch onto a worker
pool, and outputs merge back in input order. A failed batch falls back
to parallel single-row calls; a malformed reply earns one stricter
re-prompt before the fallback. Failing rows yield NULLs (error_policy
'null') or abort the query (error_policy 'fail').
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor

import time

from ..chunk import DEFAULT_CHUNK_CAPACITY, DataChunk
from ..errors import (
    BackendError,
    ExecutionError,
    MalformedOutput,
    RowCountMismatch,
)
from ..plan.logical import PredictInfo
from .cache import DedupCache, make_key, template_hash
from .config import PredictConfig
from .extract import coerce_value, parse_structured_output
from .ratelimit import RateLimiter
from .render import RenderedPrompt, render_aggregate, render_generation, render_prompt
from .stats import CallStats

_FAILED = object()


class PredictOperator:
    def __init__(self, info: PredictInfo, config: PredictConfig, backend,
                 stats: CallStats | None = None):
        self.info = info
        self.config = config
        self.backend = backend
        self.stats = stats or CallStats()
        self.cache = DedupCache() if config.use_dedup else None
        self.limiter = (RateLimiter(config.rate_limit_rpm)
                        if config.rate_limit_rpm else None)
        self.warnings: list[str] = []
        self.outputs = [(c.name, c.type) for c in info.outputs]
        self.input_names = info.input_names
        if info.template is not None:
            self.instruction = info.template.instruction
            self.tmpl_hash = template_hash(info.template.raw)
        else:
            self.instruction = None
            self.tmpl_hash = template_hash("tabular:" + ",".join(info.input_names))

    # --- chunk-level entry points ---

    def run(self, chunks) -> "list[DataChunk]":
        for chunk in chunks:
            yield self.process_chunk(chunk)

    def process_chunk(self, chunk: DataChunk) -> DataChunk:
        rows = [tuple(chunk.columns[idx][i] for idx in self.info.input_indexes)
                for i in range(chunk.row_count)]
        records = self.predict_rows(rows)
        extra = [[record[name] for record in records]
                 for name, _ in self.outputs]
        return chunk.with_columns(list(self.info.outputs), extra)

    # --- row-level core ---

    def predict_rows(self, rows: list[tuple]) -> list[dict]:
        n = len(rows)
        records: list[dict | None] = [None] * n
        pending: dict[tuple, list[int]] = {}
        units: list[tuple[tuple, tuple]] = []  # (key, row), first seen order
        hits = 0
        misses = 0
        for i, row in enumerate(rows):
            if self.info.input_indexes and all(v is None for v in row):
                # a fully NULL input row is never sent to the model
                records[i] = {name: None for name, _ in self.outputs}
                continue
            if self.cache is not None:
                key = make_key(self.info.model, self.tmpl_hash, row)
                cached = self.cache.lookup(key)
                if cached is not None:
                    records[i] = dict(cached)
                    hits += 1
                    continue
                misses += 1
                if key in pending:
                    pending[key].append(i)
                    continue
            else:
                misses += 1
                key = ("#row", i)
            pending.setdefault(key, []).append(i)
            units.append((key, row))
        self.stats.record_cache(hits, misses)

        results, flags = self.dispatch_with_fallback(units)

        failed_positions: list[int] = []
        for key, positions in pending.items():
            record = results.get(key, _FAILED)
            if record is _FAILED:
                failed_positions.extend(positions)
                for pos in positions:
                    records[pos] = {name: None for name, _ in self.outputs}
                continue
            if self.cache is not None:
                self.cache.store(key, record)
            for pos in positions:
                records[pos] = dict(record)
            if flags.get(key):
                for pos in positions:
                    self.warnings.append(
                        f"row {pos}: model output was missing or untyped "
                        "fields; affected values are NULL")

        if failed_positions:
            failed_positions.sort()
            if self.config.error_policy == "fail":
                raise ExecutionError(
                    f"prediction failed for row {failed_positions[0]} "
                    f"(model {self.info.model})")
            for pos in failed_positions:
                self.warnings.append(
                    f"row {pos}: prediction failed after retries; predicted "
                    "columns are NULL")
        return records

    # --- dispatch ---

    def dispatch_with_fallback(self, units: list[tuple[tuple, tuple]]):
        """Run miss units on the pool; failed batches retry row-by-row."""
        results: dict[tuple, dict] = {}
        flags: dict[tuple, bool] = {}
        if not units:
            return results, flags

        batches: list[list[tuple[tuple, tuple]]] = []
        singles: list[tuple[tuple, tuple]] = []
        if self.config.use_batching:
            size = self.config.batch_size
            for start in range(0, len(units), size):
                group = units[start:start + size]
                for piece in self._split_oversized(group):
                    if len(piece) == 1:
                        singles.append(piece[0])
                    else:
                        batches.append(piece)
        else:
            singles = list(units)

        workers = max(1, min(self.config.n_threads, len(units)))
        fallback: list[tuple[tuple, tuple]] = []
        with ThreadPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(self._run_batch, batch) for batch in batches]
            for future in futures:
                outcome, payload = future.result()
                if outcome == "fallback":
                    fallback.extend(payload)
                else:
                    for key, record, flagged in payload:
                        results[key] = record
                        if flagged:
                            flags[key] = True
            all_singles = singles + fallback
            single_futures = [pool.submit(self._run_single, key, row)
                              for key, row in all_singles]
            for future in single_futures:
                key, record, flagged = future.result()
                if record is not _FAILED:
                    results[key] = record
                    if flagged:
                        flags[key] = True
        return results, flags

    def _split_oversized(self, unit: list[tuple[tuple, tuple]]):
        limit = self.config.max_prompt_chars
        if limit is None or len(unit) == 1:
            return [unit]
        prompt = self._render([row for _, row in unit])
        if prompt is None or len(prompt) <= limit:
            return [unit]
        mid = len(unit) // 2
        return (self._split_oversized(unit[:mid])
                + self._split_oversized(unit[mid:]))

    def _run_batch(self, unit: list[tuple[tuple, tuple]]):
        keys = [key for key, _ in unit]
        rows = [row for _, row in unit]
        prompt = self._render(rows)
        try:
            response = self._invoke(prompt, rows)
        except BackendError:
            self.stats.record_fallback()
            return "fallback", unit
        try:
            parsed, flagged = self._parse(response, len(rows))
        except (MalformedOutput, RowCountMismatch):
            try:
                parsed, flagged = self.reprompt_on_malformed(rows)
            except (BackendError, MalformedOutput, RowCountMismatch):
                self.stats.record_fallback()
                return "fallback", unit
        flag_set = set(flagged)
        return "ok", [(key, record, i in flag_set)
                      for i, (key, record) in enumerate(zip(keys, parsed))]

    def _run_single(self, key: tuple, row: tuple):
        rows = [row]
        prompt = self._render(rows)
        strict_used = False
        attempt = 0
        while True:
            try:
                response = self._invoke(prompt, rows, retry=attempt > 0)
            except BackendError as err:
                if not err.retryable or attempt >= self.config.max_retries:
                    return key, _FAILED, False
                attempt += 1
                self._backoff(attempt)
                continue
            try:
                parsed, flagged = self._parse(response, 1)
            except (MalformedOutput, RowCountMismatch):
                if strict_used:
                    return key, _FAILED, False
                strict_used = True
                attempt = 0  # a stricter prompt is a fresh dispatch unit
                prompt = self._render(rows, strict=True)
                continue
            return key, parsed[0], bool(flagged)

    def reprompt_on_malformed(self, rows: list[tuple]):
        """One stricter re-prompt for a batch whose reply was unparsable."""
        prompt = self._render(rows, strict=True)
        response = self._invoke(prompt, rows)
        return self._parse(response, len(rows))

    # --- table generation ---

    def run_generation(self) -> list[DataChunk]:
        prompt = render_generation(self.instruction, self.outputs,
                                   self.config.max_generated_rows)
        strict_used = False
        attempt = 0
        while True:
            try:
                response = self._invoke(prompt, [], scan=True,
                                        retry=attempt > 0)
            except BackendError as err:
                if not err.retryable or attempt >= self.config.max_retries:
                    raise ExecutionError(
                        f"table generation failed (model {self.info.model})")
                attempt += 1
                self._backoff(attempt)
                continue
            try:
                parsed, _flagged = self._parse(response, None)
                break
            except (MalformedOutput, RowCountMismatch):
                if strict_used:
                    raise ExecutionError(
                        f"table generation returned unparsable output "
                        f"(model {self.info.model})")
                strict_used = True
                attempt = 0
                prompt = render_generation(self.instruction, self.outputs,
                                           self.config.max_generated_rows,
                                           strict=True)

        cap = self.config.max_generated_rows
        if len(parsed) > cap:
            self.warnings.append(
                f"generated {len(parsed)} rows; truncated to {cap}")
            parsed = parsed[:cap]
        schema = list(self.info.outputs)
        chunks = []
        for start in range(0, len(parsed), DEFAULT_CHUNK_CAPACITY):
            batch = parsed[start:start + DEFAULT_CHUNK_CAPACITY]
            columns = [[record[name] for record in batch]
                       for name, _ in self.outputs]
            chunks.append(DataChunk(schema, columns))
        if not chunks:
            chunks.append(DataChunk.empty(schema))
        return chunks

    # --- semantic aggregation ---

    def aggregate_groups(self, groups: list[list[tuple]]) -> list:
        """One call per group; returns the single Out value per group."""
        if not groups:
            return []
        name = self.outputs[0][0]
        workers = max(1, min(self.config.n_threads, len(groups)))
        with ThreadPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(self._run_group, members)
                       for members in groups]
            values = []
            for i, future in enumerate(futures):
                record = future.result()
                if record is _FAILED:
                    if self.config.error_policy == "fail":
                        raise ExecutionError(
                            f"aggregate prediction failed for group {i} "
                            f"(model {self.info.model})")
                    self.warnings.append(
                        f"group {i}: aggregate prediction failed; value is NULL")
                    values.append(None)
                else:
                    values.append(record[name])
        return values

    def _run_group(self, members: list[tuple]):
        prompt = render_aggregate(self.instruction, self.input_names,
                                  members, self.outputs)
        # one backend row per group: each input holds the member values,
        # so the one-record-per-row contract yields the single Out value
        group_row = tuple([m[i] for m in members]
                          for i in range(len(self.input_names)))
        strict_used = False
        attempt = 0
        while True:
            try:
                response = self._invoke(prompt, [group_row], retry=attempt > 0)
            except BackendError as err:
                if not err.retryable or attempt >= self.config.max_retries:
                    return _FAILED
                attempt += 1
                self._backoff(attempt)
                continue
            try:
                parsed, _flagged = self._parse(response, 1)
                return parsed[0]
            except (MalformedOutput, RowCountMismatch):
                if strict_used:
                    return _FAILED
                strict_used = True
                attempt = 0
                prompt = render_aggregate(self.instruction, self.input_names,
                                          members, self.outputs, strict=True)

    # --- plumbing ---

    def _render(self, rows: list[tuple], strict: bool = False):
        if self.instruction is None:
            return RenderedPrompt("", "")
        return render_prompt(self.instruction, self.input_names, rows,
                             self.outputs, strict)

    def _invoke(self, prompt: RenderedPrompt, rows: list[tuple],
                retry: bool = False, scan: bool = False):
        if self.limiter is not None:
            self.limiter.acquire()
        try:
            if scan:
                response = self.backend.scan_chunk(prompt)
            else:
                row_dicts = [dict(zip(self.input_names, row)) for row in rows]
                response = self.backend.predict_chunk(row_dicts, prompt)
        except BackendError:
            # the attempt still happened; its token usage is unknown
            self.stats.record_call(0, 0, 0.0, retry=retry)
            raise
        self.stats.record_call(response.input_tokens, response.output_tokens,
                               response.latency_s, retry=retry)
        return response

    def _parse(self, response, expected: int | None):
        if response.records is not None:
            records = response.records
            if expected is not None and len(records) != expected:
                raise RowCountMismatch(expected, len(records))
            out = []
            flagged = []
            for i, record in enumerate(records):
                typed = {}
                bad = False
                for name, vtype in self.outputs:
                    ok, value = coerce_value(record.get(name), vtype)
                    typed[name] = value
                    bad = bad or not ok or name not in record
                out.append(typed)
                if bad:
                    flagged.append(i)
            return out, flagged
        return parse_structured_output(response.text, self.outputs, expected)

    def _backoff(self, attempt: int) -> None:
        delay = self.config.retry_backoff_ms * (2 ** (attempt - 1)) / 1000.0
        if delay > 0:
            time.sleep(delay)


# Spec-level convenience wrappers -------------------------------------------

def execute_predict(chunks, info: PredictInfo, config: PredictConfig,
                    backend, stats: CallStats | None = None):
    op = PredictOperator(info, config, backend, stats)
    yield from op.run(chunks)


def execute_generation(info: PredictInfo, config: PredictConfig, backend,
                       stats: CallStats | None = None) -> list[DataChunk]:
    return PredictOperator(info, config, backend, stats).run_generation()


def execute_semantic_aggregate(groups, info: PredictInfo,
                               config: PredictConfig, backend,
                               stats: CallStats | None = None) -> list:
    return PredictOperator(info, config, backend, stats).aggregate_groups(groups)
