"""Query and write compilation against a mapping."""

from .crud import ACTIONS, WriteAction, WritePlan, compile_crud, purge_compile
from .plan import PhysicalPlan, PlanMetrics, explain, output_columns, plan_metrics
from .query import compile_query

__all__ = [
    "ACTIONS",
    "PhysicalPlan",
    "PlanMetrics",
    "WriteAction",
    "WritePlan",
    "compile_crud",
    "compile_query",
    "explain",
    "output_columns",
    "plan_metrics",
    "purge_compile",
]
