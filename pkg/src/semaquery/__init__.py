"""semaquery: a semantic SQL engine with first-class model inference.

Queries mix ordinary relational operators with LLM and tabular-model
calls expressed directly in SQL. The planner treats model inference as
a relational operator, so classical optimizations (predicate pushdown,
operator reordering, deduplication) apply to prompts as well as rows.
"""

from .engine import Engine, Result
from .errors import (
    BackendError,
    BindError,
    CatalogError,
    ExecutionError,
    IngestError,
    LexError,
    MalformedOutput,
    ParseError,
    SemaQueryError,
)

__version__ = "0.1.0"

__all__ = [
    "BackendError",
    "BindError",
    "CatalogError",
    "Engine",
    "ExecutionError",
    "IngestError",
    "LexError",
    "MalformedOutput",
    "ParseError",
    "Result",
    "SemaQueryError",
    "__version__",
]
