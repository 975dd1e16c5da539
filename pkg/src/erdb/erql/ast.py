"""Syntax trees for the DDL, query, and DML grammars (unbound)."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Union

from ..changes import SchemaChange
from ..model import EntitySetDef, RelationshipDef

# ---- DDL -------------------------------------------------------------------------


@dataclass(frozen=True)
class CreateEntity:
    entity: EntitySetDef


@dataclass(frozen=True)
class CreateRelationship:
    relationship: RelationshipDef


@dataclass(frozen=True)
class AlterStatement:
    change: SchemaChange


DdlStatement = Union[CreateEntity, CreateRelationship, AlterStatement]

# ---- queries -----------------------------------------------------------------------


@dataclass(frozen=True)
class Path:
    binder: str
    names: tuple[str, ...]

    def text(self) -> str:
        return ".".join((self.binder,) + self.names)


@dataclass(frozen=True)
class Literal:
    value: Any  # int | float | str | bool


@dataclass(frozen=True)
class ListLiteral:
    items: tuple[Literal, ...]


@dataclass(frozen=True)
class Agg:
    fn: str  # count | sum | avg | min | max
    arg: Path


@dataclass(frozen=True)
class Unnest:
    arg: Path


Expr = Union[Path, Agg, Unnest]
Operand = Union[Path, Literal, ListLiteral]


@dataclass(frozen=True)
class ExprItem:
    expr: Expr
    alias: str | None = None


@dataclass(frozen=True)
class NestedItem:
    name: str
    items: tuple["SelectItem", ...]


SelectItem = Union[ExprItem, NestedItem]


@dataclass(frozen=True)
class Compare:
    op: str  # = != < <= > >=
    left: Operand
    right: Operand


@dataclass(frozen=True)
class Member:
    """``left in right`` where right is a multi-valued path or a list literal."""

    left: Operand
    right: Operand


@dataclass(frozen=True)
class BoolOp:
    op: str  # and | or
    left: "Predicate"
    right: "Predicate"


@dataclass(frozen=True)
class Not:
    operand: "Predicate"


Predicate = Union[Compare, Member, BoolOp, Not]


@dataclass(frozen=True)
class EntityRef:
    entity: str
    binder: str


@dataclass(frozen=True)
class Join:
    target: EntityRef
    relationship: str | None = None
    predicate: Predicate | None = None


@dataclass(frozen=True)
class Query:
    items: tuple[SelectItem, ...]
    source: EntityRef
    joins: tuple[Join, ...] = ()
    where: Predicate | None = None


# ---- DML ---------------------------------------------------------------------------


@dataclass(frozen=True)
class InsertEntity:
    entity: str
    doc: dict


@dataclass(frozen=True)
class InsertRelationship:
    relationship: str
    roles: tuple[tuple[str, Any], ...]
    attrs: dict | None = None


@dataclass(frozen=True)
class SetClause:
    path: tuple[str, ...]
    op: str  # = | += | -=
    value: Any


@dataclass(frozen=True)
class UpdateEntity:
    entity: str
    sets: tuple[SetClause, ...]
    where: tuple[tuple[str, Any], ...]


@dataclass(frozen=True)
class DeleteEntity:
    entity: str
    where: tuple[tuple[str, Any], ...]


@dataclass(frozen=True)
class PurgeEntity:
    entity: str
    where: tuple[tuple[str, Any], ...]


@dataclass(frozen=True)
class DeleteRelationship:
    relationship: str
    roles: tuple[tuple[str, Any], ...]


CrudStatement = Union[InsertEntity, InsertRelationship, UpdateEntity, DeleteEntity, PurgeEntity, DeleteRelationship]
