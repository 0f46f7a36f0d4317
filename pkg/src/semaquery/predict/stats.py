"""Per-operator call statistics, safe for concurrent workers."""

from __future__ import annotations

import threading


class CallStats:
    """Monotone counters for one predict operator.

    counters() excludes wall-clock time so two runs of the same query
    can be compared for determinism.
    """

    _FIELDS = ("calls", "input_tokens", "output_tokens", "retries",
               "fallback_batches", "cache_hits", "cache_misses")

    def __init__(self):
        self._lock = threading.Lock()
        self.calls = 0
        self.input_tokens = 0
        self.output_tokens = 0
        self.retries = 0
        self.fallback_batches = 0
        self.cache_hits = 0
        self.cache_misses = 0
        self.wall_time_s = 0.0
        self.call_times: list[float] = []

    def record_call(self, input_tokens: int, output_tokens: int,
                    latency_s: float, retry: bool = False) -> None:
        with self._lock:
            if retry:
                self.retries += 1
            else:
                self.calls += 1
            self.input_tokens += input_tokens
            self.output_tokens += output_tokens
            self.wall_time_s += latency_s
            self.call_times.append(latency_s)

    def record_fallback(self) -> None:
        with self._lock:
            self.fallback_batches += 1

    def record_cache(self, hits: int, misses: int) -> None:
        with self._lock:
            self.cache_hits += hits
            self.cache_misses += misses

    def merge(self, other: "CallStats") -> None:
        with self._lock:
            for name in self._FIELDS:
                setattr(self, name, getattr(self, name) + getattr(other, name))
            self.wall_time_s += other.wall_time_s
            self.call_times.extend(other.call_times)

    def counters(self) -> dict[str, int]:
        with self._lock:
            return {name: getattr(self, name) for name in self._FIELDS}

    def snapshot(self) -> dict[str, object]:
        out: dict[str, object] = self.counters()
        out["wall_time_s"] = round(self.wall_time_s, 6)
        return out

    def __repr__(self) -> str:
        parts = ", ".join(f"{k}={v}" for k, v in self.counters().items())
        return f"CallStats({parts})"
