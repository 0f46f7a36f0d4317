from .cache import DedupCache, make_key, template_hash
from .config import PredictConfig, configure
from .extract import coerce_value, parse_structured_output
from .operator import (
    PredictOperator,
    execute_generation,
    execute_predict,
    execute_semantic_aggregate,
)
from .ratelimit import RateLimiter
from .render import (
    RenderedPrompt,
    render_aggregate,
    render_generation,
    render_prompt,
)
from .stats import CallStats

__all__ = [
    "CallStats",
    "DedupCache",
    "PredictConfig",
    "PredictOperator",
    "RateLimiter",
    "RenderedPrompt",
    "coerce_value",
    "configure",
    "execute_generation",
    "execute_predict",
    "execute_semantic_aggregate",
    "make_key",
    "parse_structured_output",
    "render_aggregate",
    "render_generation",
    "render_prompt",
    "template_hash",
]
