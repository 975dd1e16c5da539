"""Single-step schema changes, shared by the parser (alter statements) and evolution."""

from __future__ import annotations

from dataclasses import dataclass

from .model import AttributeDef

HIERARCHY_STRATEGIES = ("single_table", "disjoint", "class_per_subclass")


@dataclass(frozen=True)
class MakeMultivalued:
    entity: str
    attribute: str


@dataclass(frozen=True)
class ChangeCardinality:
    relationship: str
    role: str
    cardinality: str  # one | many


@dataclass(frozen=True)
class SetHierarchyStrategy:
    root: str
    strategy: str


@dataclass(frozen=True)
class AddAttribute:
    entity: str
    attribute: AttributeDef


@dataclass(frozen=True)
class DropAttribute:
    entity: str
    attribute: str


SchemaChange = MakeMultivalued | ChangeCardinality | SetHierarchyStrategy | AddAttribute | DropAttribute
