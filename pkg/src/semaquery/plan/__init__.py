from .binder import BindContext, Binder, ScopeColumn
from .logical import (
    AGGREGATE,
    AggSpec,
    Aggregate,
    Filter,
    Get,
    Join,
    Limit,
    Order,
    PlanNode,
    Predict,
    PredictInfo,
    Project,
    SCALAR,
    TABLE_GENERATION,
    TABLE_INFERENCE,
    explain_text,
    walk,
)
from .optimizer import (
    CostAnnotation,
    Optimizer,
    RULE_ORDER,
    RewriteTrace,
    TraceEntry,
    annotate_costs,
)

__all__ = [
    "AGGREGATE",
    "AggSpec",
    "Aggregate",
    "BindContext",
    "Binder",
    "CostAnnotation",
    "Filter",
    "Get",
    "Join",
    "Limit",
    "Optimizer",
    "Order",
    "PlanNode",
    "Predict",
    "PredictInfo",
    "Project",
    "RULE_ORDER",
    "RewriteTrace",
    "SCALAR",
    "ScopeColumn",
    "TABLE_GENERATION",
    "TABLE_INFERENCE",
    "TraceEntry",
    "annotate_costs",
    "explain_text",
    "walk",
]
