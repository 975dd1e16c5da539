"""Parser, printer, and binder for the DDL, query, and DML grammars."""

from .ast import (
    CreateEntity,
    CreateRelationship,
    AlterStatement,
    Path,
    Literal,
    ListLiteral,
    Agg,
    Unnest,
    ExprItem,
    NestedItem,
    Compare,
    Member,
    BoolOp,
    Not,
    EntityRef,
    Join,
    Query,
    InsertEntity,
    InsertRelationship,
    SetClause,
    UpdateEntity,
    DeleteEntity,
    PurgeEntity,
    DeleteRelationship,
    DdlStatement,
    Expr,
    Operand,
    SelectItem,
    Predicate,
    CrudStatement,
)
from .binder import BoundQuery, bind, infer_groupby
from .lexer import RESERVED, is_identifier, tokenize
from .parser import parse_ddl, parse_dml, parse_query, parse_statement
from .printer import print_ddl, print_query, print_schema, print_statement


def schema_from_ddl(text: str):
    """Build and validate a schema from a DDL script of create statements."""
    from ..errors import SchemaError
    from ..model import ErSchema, require_valid

    ents, rels = [], []
    for s in parse_ddl(text):
        if isinstance(s, CreateEntity):
            ents.append(s.entity)
        elif isinstance(s, CreateRelationship):
            rels.append(s.relationship)
        else:
            raise SchemaError("alter statements are not allowed in a schema definition")
    return require_valid(ErSchema.build(ents, rels))


__all__ = [
    "Agg",
    "AlterStatement",
    "BoolOp",
    "BoundQuery",
    "Compare",
    "CreateEntity",
    "CreateRelationship",
    "CrudStatement",
    "DdlStatement",
    "DeleteEntity",
    "DeleteRelationship",
    "EntityRef",
    "Expr",
    "ExprItem",
    "InsertEntity",
    "InsertRelationship",
    "Join",
    "ListLiteral",
    "Literal",
    "Member",
    "NestedItem",
    "Not",
    "Operand",
    "Path",
    "Predicate",
    "PurgeEntity",
    "Query",
    "RESERVED",
    "SelectItem",
    "SetClause",
    "Unnest",
    "UpdateEntity",
    "bind",
    "infer_groupby",
    "is_identifier",
    "parse_ddl",
    "parse_dml",
    "parse_query",
    "parse_statement",
    "print_ddl",
    "print_query",
    "print_schema",
    "print_statement",
    "schema_from_ddl",
    "tokenize",
]
