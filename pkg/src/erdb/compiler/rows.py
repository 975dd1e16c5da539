"""Conversion between logical instances and container rows (shared by writes and bulk loads)."""

from __future__ import annotations

from typing import Any

from ..mapping.design import Container, Design, role_key_columns
from ..model import ErSchema


def get_path(doc: Any, names: tuple[str, ...]) -> Any:
    v = doc
    for n in names:
        if v is None:
            return None
        v = v.get(n) if isinstance(v, dict) else None
    return v


def applies(schema: ErSchema, unit: tuple, cls: str) -> bool:
    """Whether an entity attribute unit exists on instances of ``cls``."""
    return unit[0] in ("attr", "mv") and unit[1] in schema.ancestors(cls)


def entity_row(design: Design, c: Container, cls: str, doc: dict) -> dict:
    """Row of an entity container (or element of an embedded one) for one instance.

    Folded relationship columns start absent, embedded arrays start empty."""
    s = design.schema
    if c.parent is None:
        keys = [a for _, a in s.key_closure(c.entity)]
    else:
        keys = [a.name for o, a in s.key_attributes(c.entity) if o == c.entity]
    row: dict = {col: doc[a] for col, a in zip(c.key_columns, keys)}
    if c.type_column:
        row["type"] = cls
    for u, cols in c.units.items():
        if u[0] in ("attr", "mv"):
            v = get_path(doc, u[2]) if applies(s, u, cls) else None
            if u[0] == "mv" and v is not None:
                v = list(v)
            row[cols[0]] = v
        else:
            for col in cols:
                row[col] = None
    for e in c.embedded:
        row[e.array_column] = []
    return row


def element_row(c: Container, value: Any) -> dict:
    """Element columns of an exploded multi-valued container."""
    out = {}
    for col, sub, _ in c.element_columns:
        out[col] = get_path(value, sub) if sub else value
    return out


def element_value(c: Container, row: dict) -> Any:
    """Inverse of ``element_row``: rebuild the logical element."""
    if len(c.element_columns) == 1 and not c.element_columns[0][1]:
        return row[c.element_columns[0][0]]
    out: dict = {}
    for col, sub, _ in c.element_columns:
        cur = out
        for n in sub[:-1]:
            cur = cur.setdefault(n, {})
        cur[sub[-1]] = row[col]
    return out


def mv_rows(c: Container, owner_key: tuple, values: list) -> list[dict]:
    n = len(owner_key)
    base = dict(zip(c.key_columns[:n], owner_key))
    return [{**base, **element_row(c, v)} for v in values or []]


def rel_row(design: Design, c: Container, keys: tuple[tuple, ...], attrs: dict) -> dict:
    s = design.schema
    r = s.relationship(c.relationship)
    row: dict = {}
    for p, k in zip(r.participants, keys):
        row.update(zip(role_key_columns(s, p.role, p.entity), k))
    for u, cols in c.units.items():
        if u[0] == "rattr" and u[1] == r.name:
            row[cols[0]] = get_path(attrs, u[2])
    return row


def fk_values(design: Design, c: Container, rel: str, one_key: tuple | None, attrs: dict | None) -> dict:
    """Folded relationship columns of host ``c``: the one-side key plus descriptive values."""
    out: dict = dict(zip(c.units[("fk", rel)], one_key if one_key is not None else [None] * len(c.units[("fk", rel)])))
    for u, cols in c.units.items():
        if u[0] == "rattr" and u[1] == rel:
            out[cols[0]] = None if attrs is None else get_path(attrs, u[2])
    return out


def fold_roles(design: Design, rel: str) -> tuple[int, int]:
    """(many index, one index) of a folded relationship's participants."""
    r = design.schema.relationship(rel)
    fs = r.fold_side()
    assert fs is not None
    return r.participants.index(fs[0]), r.participants.index(fs[1])
