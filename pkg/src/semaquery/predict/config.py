"""Predict-operator configuration.

Settings merge with a fixed precedence: model OPTIONS beat session SET
values, which beat the defaults.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from ..catalog import ModelEntry
from ..errors import ExecutionError

_INT_FIELDS = {"batch_size", "n_threads", "max_retries", "max_generated_rows",
               "max_prompt_chars"}
_FLOAT_FIELDS = {"retry_backoff_ms", "rate_limit_rpm", "timeout"}
_BOOL_FIELDS = {"use_batching", "use_dedup"}
_STR_FIELDS = {"error_policy", "structured_output"}

# read by the planner or engine, never forwarded to a model API
_HINT_KEYS = {"selectivity", "quality", "optimizer_rules",
              "merge_selectivity_threshold"}


@dataclass
class PredictConfig:
    batch_size: int = 16
    n_threads: int = 16
    use_batching: bool = True
    use_dedup: bool = True
    max_retries: int = 2
    retry_backoff_ms: float = 250.0
    rate_limit_rpm: float | None = None
    error_policy: str = "null"  # null | fail
    max_prompt_chars: int | None = None
    max_generated_rows: int = 1024
    timeout: float = 30.0
    structured_output: str = "json_schema_param"  # or instruction_only
    kwargs: dict[str, object] = field(default_factory=dict)

    def validate(self) -> None:
        if self.batch_size < 1:
            raise ExecutionError("batch_size must be at least 1")
        if self.n_threads < 1:
            raise ExecutionError("n_threads must be at least 1")
        if self.error_policy not in ("null", "fail"):
            raise ExecutionError(f"unknown error_policy {self.error_policy!r}")
        if self.structured_output not in ("json_schema_param", "instruction_only"):
            raise ExecutionError(
                f"unknown structured_output mode {self.structured_output!r}")


def _as_int(key: str, value: object) -> int:
    if isinstance(value, bool) or not isinstance(value, (int, float, str)):
        raise ExecutionError(f"option {key} needs a number, got {value!r}")
    try:
        out = int(value)
    except ValueError:
        raise ExecutionError(f"option {key} needs a number, got {value!r}")
    return out


def _as_float(key: str, value: object) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float, str)):
        raise ExecutionError(f"option {key} needs a number, got {value!r}")
    try:
        return float(value)
    except ValueError:
        raise ExecutionError(f"option {key} needs a number, got {value!r}")


def _as_bool(key: str, value: object) -> bool:
    if isinstance(value, bool):
        return value
    if isinstance(value, int):
        return bool(value)
    if isinstance(value, str) and value.lower() in ("true", "false", "on", "off"):
        return value.lower() in ("true", "on")
    raise ExecutionError(f"option {key} needs a boolean, got {value!r}")


def _apply(config: PredictConfig, key: str, value: object) -> None:
    if key in _INT_FIELDS:
        setattr(config, key, _as_int(key, value))
    elif key in _FLOAT_FIELDS:
        setattr(config, key, _as_float(key, value))
    elif key in _BOOL_FIELDS:
        setattr(config, key, _as_bool(key, value))
    elif key in _STR_FIELDS:
        setattr(config, key, str(value))
    elif key in _HINT_KEYS:
        pass
    else:
        config.kwargs[key] = value


def configure(entry: ModelEntry | None, session: dict[str, object] | None) -> PredictConfig:
    """Merge defaults, session settings, and model options, in that order."""
    config = PredictConfig()
    for key, value in (session or {}).items():
        _apply(config, key, value)
    if entry is not None:
        for key, value in entry.options.items():
            _apply(config, key, value)
    config.validate()
    return config
