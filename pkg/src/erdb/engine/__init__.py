"""In-memory execution engine over mapped containers, plus SQL text emission and dataset I/O."""

from .execute import execute
from .io import dump_dataset, format_dataset, load_dataset, parse_dataset
from .reconstruct import materialize, reconstruct_entities
from .sqlemit import PROFILES, emit_ddl, emit_select, emit_sql
from .store import Store, Table, apply_writes, create_store

__all__ = [
    "PROFILES",
    "Store",
    "Table",
    "apply_writes",
    "create_store",
    "dump_dataset",
    "emit_ddl",
    "emit_select",
    "emit_sql",
    "execute",
    "format_dataset",
    "load_dataset",
    "materialize",
    "parse_dataset",
    "reconstruct_entities",
]
