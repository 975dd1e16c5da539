"""Canonical text rendering of syntax trees; parse(print(t)) == t."""

from __future__ import annotations

from typing import Any

from ..changes import AddAttribute, ChangeCardinality, DropAttribute, MakeMultivalued, SetHierarchyStrategy
from ..model import AttributeDef, EntitySetDef, ErSchema, RelationshipDef
from . import ast as A
from .lexer import quote_string


def print_literal(v: Any) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, str):
        return quote_string(v)
    raise ValueError(f"cannot print literal {v!r}")


def print_value(v: Any) -> str:
    if isinstance(v, dict):
        return "{" + ", ".join(f"{k}: {print_value(x)}" for k, x in v.items()) + "}"
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(print_value(x) for x in v) + "]"
    return print_literal(v)


def print_type(a: AttributeDef) -> str:
    if a.is_scalar:
        return a.type or "?"
    if a.is_composite:
        return "{" + ", ".join(print_attr(c) for c in a.children) + "}"
    assert a.element is not None
    return print_type(a.element) + "[]"


def print_attr(a: AttributeDef) -> str:
    return f"{a.name} {print_type(a)}" + (" key" if a.is_key else "")


def _comment(desc: str | None) -> str:
    return f" comment {quote_string(desc)}" if desc is not None else ""


def print_entity(e: EntitySetDef) -> str:
    s = f"create entity {e.name}"
    if e.superclass is not None:
        s += f" extends {e.superclass}"
        if e.disjoint:
            s += " disjoint"
        if e.total:
            s += " total"
    s += " (" + ", ".join(print_attr(a) for a in e.attributes) + ")"
    if e.weak_owner is not None:
        s += f" weak of {e.weak_owner} via {e.identifying}"
    return s + _comment(e.description)


def print_relationship(r: RelationshipDef) -> str:
    parts = []
    for p in r.participants:
        t = p.entity
        if p.role != p.entity:
            t += f" as {p.role}"
        t += f" {p.cardinality}"
        if p.participation == "total":
            t += " total"
        parts.append(t)
    s = f"create relationship {r.name} between " + ", ".join(parts)
    if r.attributes:
        s += " (" + ", ".join(print_attr(a) for a in r.attributes) + ")"
    return s + _comment(r.description)


def print_change(c) -> str:
    if isinstance(c, MakeMultivalued):
        return f"alter entity {c.entity} make multivalued {c.attribute}"
    if isinstance(c, AddAttribute):
        return f"alter entity {c.entity} add {print_attr(c.attribute)}"
    if isinstance(c, DropAttribute):
        return f"alter entity {c.entity} drop {c.attribute}"
    if isinstance(c, ChangeCardinality):
        return f"alter relationship {c.relationship} set {c.role} {c.cardinality}"
    if isinstance(c, SetHierarchyStrategy):
        return f"alter hierarchy {c.root} strategy {c.strategy}"
    raise ValueError(f"unknown change {c!r}")


def print_operand(o) -> str:
    if isinstance(o, A.Path):
        return o.text()
    if isinstance(o, A.Literal):
        return print_literal(o.value)
    if isinstance(o, A.ListLiteral):
        return "[" + ", ".join(print_literal(i.value) for i in o.items) + "]"
    raise ValueError(f"bad operand {o!r}")


def print_predicate(p) -> str:
    if isinstance(p, A.Compare):
        return f"{print_operand(p.left)} {p.op} {print_operand(p.right)}"
    if isinstance(p, A.Member):
        return f"{print_operand(p.left)} in {print_operand(p.right)}"
    if isinstance(p, A.Not):
        inner = print_predicate(p.operand)
        return f"not ({inner})" if isinstance(p.operand, A.BoolOp) else f"not {inner}"
    if isinstance(p, A.BoolOp):
        sides = []
        for side in (p.left, p.right):
            t = print_predicate(side)
            sides.append(f"({t})" if isinstance(side, A.BoolOp) else t)
        return f"{sides[0]} {p.op} {sides[1]}"
    raise ValueError(f"bad predicate {p!r}")


def print_expr(e) -> str:
    if isinstance(e, A.Path):
        return e.text()
    if isinstance(e, A.Agg):
        return f"{e.fn}({e.arg.text()})"
    if isinstance(e, A.Unnest):
        return f"unnest({e.arg.text()})"
    raise ValueError(f"bad expression {e!r}")


def print_item(i) -> str:
    if isinstance(i, A.NestedItem):
        return f"{i.name}: [" + ", ".join(print_item(x) for x in i.items) + "]"
    s = print_expr(i.expr)
    return s + (f" as {i.alias}" if i.alias else "")


def print_query(q: A.Query) -> str:
    s = "select " + ", ".join(print_item(i) for i in q.items)
    s += f" from {q.source.entity} {q.source.binder}"
    for j in q.joins:
        s += f" join {j.target.entity} {j.target.binder} on "
        s += j.relationship if j.relationship is not None else print_predicate(j.predicate)
    if q.where is not None:
        s += " where " + print_predicate(q.where)
    return s


def _where(conds) -> str:
    return " where " + " and ".join(f"{k} = {print_literal(v)}" for k, v in conds)


def _roles(roles) -> str:
    return "(" + ", ".join(f"{r}: {print_value(v)}" for r, v in roles) + ")"


def print_dml(s) -> str:
    if isinstance(s, A.InsertEntity):
        return f"insert entity {s.entity} {print_value(s.doc)}"
    if isinstance(s, A.InsertRelationship):
        t = f"insert relationship {s.relationship} {_roles(s.roles)}"
        return t + (f" {print_value(s.attrs)}" if s.attrs is not None else "")
    if isinstance(s, A.UpdateEntity):
        sets = ", ".join(f"{'.'.join(c.path)} {c.op} {print_value(c.value)}" for c in s.sets)
        return f"update entity {s.entity} set {sets}" + _where(s.where)
    if isinstance(s, A.DeleteEntity):
        return f"delete entity {s.entity}" + _where(s.where)
    if isinstance(s, A.PurgeEntity):
        return f"purge entity {s.entity}" + _where(s.where)
    if isinstance(s, A.DeleteRelationship):
        return f"delete relationship {s.relationship} {_roles(s.roles)}"
    raise ValueError(f"bad statement {s!r}")


def print_statement(s) -> str:
    if isinstance(s, A.CreateEntity):
        return print_entity(s.entity)
    if isinstance(s, A.CreateRelationship):
        return print_relationship(s.relationship)
    if isinstance(s, A.AlterStatement):
        return print_change(s.change)
    if isinstance(s, A.Query):
        return print_query(s)
    return print_dml(s)


def print_ddl(stmts) -> str:
    return "".join(print_statement(s) + ";\n" for s in stmts)


def print_schema(schema: ErSchema) -> str:
    """DDL script reproducing ``schema``; implicit identifying relationships are omitted."""
    lines = [print_entity(e) + ";" for e in schema.entities]
    for r in schema.relationships:
        w = schema.identified_entity(r.name)
        if w is not None:
            e = schema.entity(w)
            default = (
                len(r.participants) == 2
                and r.participants[0].entity == e.weak_owner
                and r.participants[0].role == e.weak_owner
                and r.participants[0].cardinality == "one"
                and r.participants[0].participation == "partial"
                and r.participants[1].entity == w
                and r.participants[1].role == w
                and r.participants[1].cardinality == "many"
                and r.participants[1].participation == "total"
                and not r.attributes
                and r.description is None
            )
            if default:
                continue
        lines.append(print_relationship(r) + ";")
    return "\n".join(lines) + ("\n" if lines else "")
