"""Cost-model analysis and microbenchmarks for the predict operator.

Two independent estimates of batch-inference latency are compared: a
closed-form bound (predict_total_latency) and a discrete-event
simulation of the worker pool plus rate limiter (simulate_total_latency).
The closed form takes the max of the serial bound and the rate bound,
so it underestimates near their crossover by up to one batch's service
time; the sweep reports both so the gap is visible.

measure_predict_latency cross-validates against a real PredictOperator
run over the mock backend with injected latencies, with sleeps scaled
down so the measurement finishes quickly.
"""

from __future__ import annotations

import csv
import heapq
import io
import math
import time
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping

from .backends.mock import MockBackend, MockFixture
from .chunk import ColumnSchema, DataChunk
from .plan.logical import SCALAR, PredictInfo
from .plan.optimizer import RULE_ORDER
from .predict.config import PredictConfig
from .predict.operator import PredictOperator
from .values import ValueType

BASE_LATENCY_S = 0.8
PER_ROW_LATENCY_S = 0.15


def synthetic_latency(batch_size: int) -> float:
    """Synthetic per-call latency: 0.8 s base plus 0.15 s per row."""
    return BASE_LATENCY_S + PER_ROW_LATENCY_S * batch_size


class LatencyModel:
    """Analytic model of one predict operator's call costs.

    table maps batch size to mean seconds per call and must be
    nondecreasing in batch size; missing sizes are linearly
    interpolated, sizes beyond the table clamp to the nearest entry.
    """

    def __init__(self, table: Mapping[int, float] | Iterable[tuple[int, float]],
                 rpm: float | None = None, workers: int = 1,
                 tuples: int = 1):
        pairs = table.items() if isinstance(table, Mapping) else table
        self.table = sorted((int(b), float(s)) for b, s in pairs)
        if not self.table:
            raise ValueError("latency table is empty")
        last = 0.0
        for batch, seconds in self.table:
            if batch < 1:
                raise ValueError(f"batch size {batch} must be at least 1")
            if seconds < last:
                raise ValueError(
                    "latency table must be nondecreasing in batch size")
            last = seconds
        if rpm is not None and rpm <= 0:
            raise ValueError("rpm must be positive")
        if workers < 1:
            raise ValueError("workers must be at least 1")
        if tuples < 0:
            raise ValueError("tuples must be nonnegative")
        self.rpm = rpm
        self.workers = workers
        self.tuples = tuples

    def latency(self, batch_size: int) -> float:
        if batch_size < 1:
            raise ValueError("batch_size must be at least 1")
        lo = self.table[0]
        if batch_size <= lo[0]:
            return lo[1]
        for hi in self.table[1:]:
            if batch_size == hi[0]:
                return hi[1]
            if batch_size < hi[0]:
                span = hi[0] - lo[0]
                frac = (batch_size - lo[0]) / span
                return lo[1] + frac * (hi[1] - lo[1])
            lo = hi
        return self.table[-1][1]

    def calls(self, batch_size: int) -> int:
        return math.ceil(self.tuples / batch_size)

    def replace(self, **fields) -> "LatencyModel":
        base = {"table": self.table, "rpm": self.rpm,
                "workers": self.workers, "tuples": self.tuples}
        base.update(fields)
        return LatencyModel(**base)


def synthetic_model(rpm: float | None = 500.0, workers: int = 16,
                    tuples: int = 10_000,
                    batch_sizes: Iterable[int] = (1, 2, 4, 8, 16, 32, 64),
                    ) -> LatencyModel:
    table = {b: synthetic_latency(b) for b in batch_sizes}
    return LatencyModel(table, rpm=rpm, workers=workers, tuples=tuples)


def predict_total_latency(model: LatencyModel, batch_size: int) -> float:
    """Closed-form total seconds: max of the serial and rate bounds."""
    if batch_size < 1:
        raise ValueError("batch_size must be at least 1")
    calls = model.calls(batch_size)
    if calls == 0:
        return 0.0
    serial = math.ceil(calls / model.workers) * model.latency(batch_size)
    rate = calls / (model.rpm / 60.0) if model.rpm else 0.0
    return max(serial, rate)


def simulate_total_latency(model: LatencyModel, batch_size: int) -> float:
    """Discrete-event makespan of the same workload on a virtual clock.

    Calls are admitted through a capacity-one token bucket spaced at
    60/rpm seconds and each occupies one worker for the per-call
    latency, mirroring the executor's thread pool and limiter.
    """
    calls = model.calls(batch_size)
    if calls == 0:
        return 0.0
    service = model.latency(batch_size)
    interval = 60.0 / model.rpm if model.rpm else 0.0
    free = [0.0] * min(model.workers, calls)
    heapq.heapify(free)
    next_admit = 0.0
    makespan = 0.0
    for _ in range(calls):
        start = max(heapq.heappop(free), next_admit)
        next_admit = start + interval
        finish = start + service
        heapq.heappush(free, finish)
        makespan = max(makespan, finish)
    return makespan


@dataclass(frozen=True)
class SweepPoint:
    batch_size: int
    workers: int
    calls: int
    predicted_s: float
    simulated_s: float

    @property
    def relative_error(self) -> float:
        if self.predicted_s == 0.0:
            return 0.0
        return abs(self.simulated_s - self.predicted_s) / self.predicted_s


def sweep(model: LatencyModel,
          batch_sizes: Iterable[int] = (1, 2, 4, 8, 16, 32, 64),
          worker_counts: Iterable[int] = (1, 2, 4, 8, 16, 32, 64),
          ) -> list[SweepPoint]:
    """Predicted and simulated latency over a batch/worker grid."""
    points = []
    for batch in batch_sizes:
        for workers in worker_counts:
            scenario = model.replace(workers=workers)
            points.append(SweepPoint(
                batch_size=batch, workers=workers,
                calls=scenario.calls(batch),
                predicted_s=predict_total_latency(scenario, batch),
                simulated_s=simulate_total_latency(scenario, batch)))
    return points


def sweep_csv(points: Iterable[SweepPoint]) -> str:
    """Plot-ready CSV: one row per (batch, workers) scenario."""
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["batch_size", "workers", "calls",
                     "predicted_s", "simulated_s"])
    for p in points:
        writer.writerow([p.batch_size, p.workers, p.calls,
                         f"{p.predicted_s:.3f}", f"{p.simulated_s:.3f}"])
    return out.getvalue()


# --- measured cross-validation ----------------------------------------------

def measure_predict_latency(model: LatencyModel, batch_size: int,
                            sleep_scale: float = 0.001,
                            latency_fn: Callable[[int], float] | None = None,
                            ) -> float:
    """Run a real PredictOperator over the mock backend and return the
    wall-clock makespan rescaled to model seconds.

    Injected call latencies sleep for latency * sleep_scale and the
    rate limit is sped up by the same factor, so the measurement takes
    a fraction of the modeled time.
    """
    fn = latency_fn or model.latency
    fixture = MockFixture(default={"answer": "ok"}, call_latency=fn)
    backend = MockBackend(fixture, sleep_scale=sleep_scale)
    backend.load()
    config = PredictConfig(batch_size=batch_size, n_threads=model.workers,
                           use_batching=batch_size > 1, use_dedup=False)
    if model.rpm:
        config.rate_limit_rpm = model.rpm / sleep_scale
    info = PredictInfo(
        mode=SCALAR, model="bench", template=None,
        input_indexes=(0,), input_names=("item",),
        outputs=(ColumnSchema("answer", ValueType.VARCHAR, "predicted"),))
    operator = PredictOperator(info, config, backend)
    schema = (ColumnSchema("item", ValueType.VARCHAR),)
    rows = [(f"item-{i}",) for i in range(model.tuples)]
    chunk = DataChunk.from_rows(schema, rows)
    started = time.monotonic()
    operator.process_chunk(chunk)
    return (time.monotonic() - started) / sleep_scale


# --- intra-operator optimization ablation ------------------------------------

TOGGLES = ("dedup", "marshaling", "parallelism", "pull_up")

_TOGGLE_OFF: dict[str, dict[str, object]] = {
    "dedup": {"use_dedup": False},
    "marshaling": {"use_batching": False},
    "parallelism": {"n_threads": 1},
    "pull_up": {"optimizer_rules": ",".join(
        r for r in RULE_ORDER if r != "pull_up_predict")},
}


@dataclass(frozen=True)
class AblationRow:
    query: str
    toggle: str  # "baseline" or the optimization that was turned off
    calls: int
    retries: int
    input_tokens: int
    output_tokens: int
    latency_s: float  # summed injected call latency, deterministic
    row_count: int


def _ablation_run(engine_factory, query: str, toggle: str,
                  settings: Mapping[str, object]) -> tuple[AblationRow, list]:
    engine = engine_factory()
    for key, value in settings.items():
        engine.session[key] = value
    result = engine.execute(query)
    counters = result.stats.counters()
    row = AblationRow(
        query=query, toggle=toggle,
        calls=counters["calls"], retries=counters["retries"],
        input_tokens=counters["input_tokens"],
        output_tokens=counters["output_tokens"],
        latency_s=result.stats.wall_time_s,
        row_count=result.row_count)
    return row, sorted(repr(r) for r in result.rows)


def run_opt_ablation(engine_factory, queries: Iterable[str],
                     toggles: Iterable[str] = TOGGLES) -> list[AblationRow]:
    """Rerun each query with one optimization disabled at a time.

    engine_factory must build a fresh engine with the fixture data and
    models loaded. The report asserts that every toggle leaves the
    query result unchanged; optimizations may only change cost.
    """
    report: list[AblationRow] = []
    for query in queries:
        baseline, expected = _ablation_run(engine_factory, query,
                                           "baseline", {})
        report.append(baseline)
        for toggle in toggles:
            try:
                settings = _TOGGLE_OFF[toggle]
            except KeyError:
                raise ValueError(f"unknown ablation toggle {toggle!r}")
            row, rows = _ablation_run(engine_factory, query, toggle, settings)
            if rows != expected:
                raise AssertionError(
                    f"disabling {toggle} changed the result of {query!r}")
            report.append(row)
    return report


def ablation_csv(report: Iterable[AblationRow]) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["query", "toggle", "calls", "retries", "input_tokens",
                     "output_tokens", "latency_s", "rows"])
    for r in report:
        writer.writerow([r.query, r.toggle, r.calls, r.retries,
                         r.input_tokens, r.output_tokens,
                         f"{r.latency_s:.3f}", r.row_count])
    return out.getvalue()
