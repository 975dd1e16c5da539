"""Seeded random syntax trees for the DDL, query, and DML grammars, plus a mutation fuzzer."""

from __future__ import annotations

import random
import string

from erdb.changes import (
    HIERARCHY_STRATEGIES,
    AddAttribute,
    ChangeCardinality,
    DropAttribute,
    MakeMultivalued,
    SetHierarchyStrategy,
)
from erdb.erql import ast as A
from erdb.erql.lexer import RESERVED
from erdb.model import SCALAR_TYPES, AttributeDef, EntitySetDef, Participant, RelationshipDef

NAMES = ("Person", "Student", "R", "S1", "x", "y", "id", "name", "city", "ph", "one", "many", "total", "int")
AGGS = ("count", "sum", "avg", "min", "max")
OPS = ("=", "!=", "<", "<=", ">", ">=")


def ident(rng: random.Random) -> str:
    if rng.random() < 0.6:
        return rng.choice(NAMES)
    first = rng.choice(string.ascii_letters + "_")
    rest = "".join(rng.choice(string.ascii_letters + string.digits + "_") for _ in range(rng.randint(0, 6)))
    s = first + rest
    return s if s.lower() not in RESERVED else s + "_"


def distinct(rng: random.Random, n: int) -> list[str]:
    out: list[str] = []
    while len(out) < n:
        s = ident(rng)
        if s not in out:
            out.append(s)
    return out


def text(rng: random.Random) -> str:
    pool = string.printable + "éß漢 \x00\x7f\"\\"
    return "".join(rng.choice(pool) for _ in range(rng.randint(0, 8)))


def scalar_value(rng: random.Random):
    k = rng.randrange(5)
    if k == 0:
        return rng.randint(-10**12, 10**12)
    if k == 1:
        return rng.choice((0.5, -2.25, 1e-7, 3.0e20, rng.uniform(-1e6, 1e6)))
    if k == 2:
        return text(rng)
    if k == 3:
        return rng.random() < 0.5
    return rng.randint(0, 9)


def value(rng: random.Random, depth: int = 0):
    k = rng.randrange(6 if depth < 3 else 4)
    if k == 4:
        return [value(rng, depth + 1) for _ in range(rng.randint(0, 3))]
    if k == 5:
        return document(rng, depth + 1)
    return scalar_value(rng)


def document(rng: random.Random, depth: int = 0) -> dict:
    return {n: value(rng, depth) for n in distinct(rng, rng.randint(0, 3))}


# ---- DDL ---------------------------------------------------------------------------------


def attribute(rng: random.Random, name: str, depth: int = 0) -> AttributeDef:
    k = rng.randrange(3 if depth < 2 else 1)
    if k == 1:
        kids = tuple(attribute(rng, n, depth + 1) for n in distinct(rng, rng.randint(1, 3)))
        a = AttributeDef(name, "composite", children=kids)
    else:
        a = AttributeDef(name, "scalar", type=rng.choice(SCALAR_TYPES))
    if k == 2 or (depth < 2 and rng.random() < 0.2):
        a = AttributeDef(name, "multi_valued", element=a)
    if rng.random() < 0.25:
        a = AttributeDef(a.name, a.kind, a.type, a.children, a.element, True)
    return a


def attributes(rng: random.Random, lo: int = 1) -> tuple[AttributeDef, ...]:
    return tuple(attribute(rng, n) for n in distinct(rng, rng.randint(lo, 4)))


def entity_def(rng: random.Random) -> EntitySetDef:
    sup = ident(rng) if rng.random() < 0.4 else None
    weak = rng.random() < 0.3
    return EntitySetDef(
        ident(rng),
        attributes(rng),
        sup,
        sup is not None and rng.random() < 0.5,
        sup is not None and rng.random() < 0.5,
        ident(rng) if weak else None,
        ident(rng) if weak else None,
        text(rng) if rng.random() < 0.2 else None,
    )


def relationship_def(rng: random.Random) -> RelationshipDef:
    parts = []
    for role in distinct(rng, rng.randint(1, 3)):
        ent = role if rng.random() < 0.5 else ident(rng)
        parts.append(Participant(ent, role, rng.choice(("one", "many")), rng.choice(("total", "partial"))))
    attrs = attributes(rng) if rng.random() < 0.4 else ()
    return RelationshipDef(ident(rng), tuple(parts), attrs, text(rng) if rng.random() < 0.2 else None)


def change(rng: random.Random):
    k = rng.randrange(5)
    if k == 0:
        return MakeMultivalued(ident(rng), ident(rng))
    if k == 1:
        return AddAttribute(ident(rng), attribute(rng, ident(rng)))
    if k == 2:
        return DropAttribute(ident(rng), ident(rng))
    if k == 3:
        return ChangeCardinality(ident(rng), ident(rng), rng.choice(("one", "many")))
    return SetHierarchyStrategy(ident(rng), rng.choice(HIERARCHY_STRATEGIES))


def ddl_statement(rng: random.Random):
    k = rng.randrange(3)
    if k == 0:
        return A.CreateEntity(entity_def(rng))
    if k == 1:
        return A.CreateRelationship(relationship_def(rng))
    return A.AlterStatement(change(rng))


# ---- queries ------------------------------------------------------------------------------


def path(rng: random.Random) -> A.Path:
    return A.Path(ident(rng), tuple(ident(rng) for _ in range(rng.randint(1, 3))))


def operand(rng: random.Random):
    k = rng.randrange(3)
    if k == 0:
        return path(rng)
    if k == 1:
        return A.Literal(scalar_value(rng))
    return A.ListLiteral(tuple(A.Literal(scalar_value(rng)) for _ in range(rng.randint(0, 3))))


def predicate(rng: random.Random, depth: int = 0):
    k = rng.randrange(4 if depth < 3 else 2)
    if k == 0:
        return A.Compare(rng.choice(OPS), operand(rng), operand(rng))
    if k == 1:
        return A.Member(operand(rng), operand(rng))
    if k == 2:
        return A.Not(predicate(rng, depth + 1))
    return A.BoolOp(rng.choice(("and", "or")), predicate(rng, depth + 1), predicate(rng, depth + 1))


def select_item(rng: random.Random, depth: int = 0):
    if depth < 2 and rng.random() < 0.2:
        return A.NestedItem(ident(rng), tuple(select_item(rng, depth + 1) for _ in range(rng.randint(1, 3))))
    k = rng.randrange(3)
    e = path(rng) if k == 0 else A.Agg(rng.choice(AGGS), path(rng)) if k == 1 else A.Unnest(path(rng))
    return A.ExprItem(e, ident(rng) if rng.random() < 0.2 else None)


def query(rng: random.Random) -> A.Query:
    joins = []
    for _ in range(rng.randint(0, 3)):
        target = A.EntityRef(ident(rng), ident(rng))
        if rng.random() < 0.6:
            joins.append(A.Join(target, relationship=ident(rng)))
        else:
            joins.append(A.Join(target, predicate=predicate(rng)))
    return A.Query(
        tuple(select_item(rng) for _ in range(rng.randint(1, 4))),
        A.EntityRef(ident(rng), ident(rng)),
        tuple(joins),
        predicate(rng) if rng.random() < 0.5 else None,
    )


# ---- DML ----------------------------------------------------------------------------------


def key_where(rng: random.Random) -> tuple:
    return tuple((n, scalar_value(rng)) for n in distinct(rng, rng.randint(1, 3)))


def roles(rng: random.Random) -> tuple:
    return tuple((n, value(rng, 2)) for n in distinct(rng, rng.randint(1, 3)))


def dml_statement(rng: random.Random):
    k = rng.randrange(6)
    if k == 0:
        return A.InsertEntity(ident(rng), document(rng))
    if k == 1:
        return A.InsertRelationship(ident(rng), roles(rng), document(rng) if rng.random() < 0.5 else None)
    if k == 2:
        sets = tuple(
            A.SetClause(tuple(ident(rng) for _ in range(rng.randint(1, 2))), rng.choice(("=", "+=", "-=")), value(rng))
            for _ in range(rng.randint(1, 3))
        )
        return A.UpdateEntity(ident(rng), sets, key_where(rng))
    if k == 3:
        return A.DeleteEntity(ident(rng), key_where(rng))
    if k == 4:
        return A.PurgeEntity(ident(rng), key_where(rng))
    return A.DeleteRelationship(ident(rng), roles(rng))


def statement(rng: random.Random):
    k = rng.randrange(3)
    return ddl_statement(rng) if k == 0 else query(rng) if k == 1 else dml_statement(rng)


# ---- fuzzing ------------------------------------------------------------------------------

FRAGMENTS = (
    "select", "from", "join", "on", "where", "create", "entity", "relationship", "between", "insert",
    "update", "delete", "purge", "alter", "set", "(", ")", "[", "]", "{", "}", ",", ".", ":", ";",
    "=", "!=", "<=", "+=", '"', "\\", "-", "1e", "--", "unnest(", "count(", "key", "weak of", "not",
    "\n", "\x00", "é", "[]", "9" * 30,
)


def mutate(rng: random.Random, src: str) -> str:
    """Apply 1-4 random edits (delete, insert, duplicate, swap) to ``src``."""
    s = src
    for _ in range(rng.randint(1, 4)):
        op = rng.randrange(5)
        i = rng.randint(0, len(s))
        if op == 0 and s:
            j = min(len(s), i + rng.randint(1, 8))
            s = s[:i] + s[j:]
        elif op == 1:
            s = s[:i] + rng.choice(FRAGMENTS) + s[i:]
        elif op == 2:
            s = s[:i] + chr(rng.randint(0, 0x2FF)) + s[i:]
        elif op == 3 and s:
            j = min(len(s), i + rng.randint(1, 12))
            s = s[:i] + s[i:j] * 2 + s[j:]
        else:
            s = s[i:] + " " + s[:i]
    return s


def token_soup(rng: random.Random) -> str:
    return " ".join(rng.choice(FRAGMENTS + NAMES) for _ in range(rng.randint(0, 20)))
