"""Synthetic benchmark: schema, reference mappings, data generator, and workload runner."""

from .synthetic import (
    MAPPING_NAMES,
    SYNTHETIC_DDL,
    SyntheticSpec,
    allocation,
    build_mappings,
    build_synthetic_schema,
    generate_dataset,
)
from .workload import (
    REPORT_COLUMNS,
    SYNTHETIC_WORKLOAD,
    UNIVERSITY_WORKLOAD,
    EquivalenceError,
    WorkloadEntry,
    WorkloadReport,
    directional_timings,
    run_workload,
    structural_checks,
)

__all__ = [
    "MAPPING_NAMES",
    "REPORT_COLUMNS",
    "SYNTHETIC_DDL",
    "SYNTHETIC_WORKLOAD",
    "UNIVERSITY_WORKLOAD",
    "EquivalenceError",
    "SyntheticSpec",
    "WorkloadEntry",
    "WorkloadReport",
    "allocation",
    "build_mappings",
    "build_synthetic_schema",
    "directional_timings",
    "generate_dataset",
    "run_workload",
    "structural_checks",
]
