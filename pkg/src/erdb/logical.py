"""Reference semantics evaluated directly on logical datasets.

These functions never look at a mapping. They serve as the oracle the compiled plans and
write sets are checked against.
"""

from __future__ import annotations

import math
from typing import Any

from .errors import DataError
from .erql import ast as A
from .erql.binder import (
    BoundDelete,
    BoundDeleteRelationship,
    BoundExpr,
    BoundInsertEntity,
    BoundInsertRelationship,
    BoundNested,
    BoundPath,
    BoundPurge,
    BoundQuery,
    BoundUpdate,
)
from .model import ErSchema
from .result import ResultTable
from .values import Dataset, InstanceIndex, RelInstance, check_cardinality, key_of, sort_key

# ---- instances ------------------------------------------------------------------------


def instances(schema: ErSchema, ds: Dataset, entity: str) -> list[tuple[str, dict]]:
    out = []
    for cls in schema.descendants(entity):
        for d in ds.entities.get(cls, []):
            out.append((cls, d))
    return out


def rel_instances(schema: ErSchema, ds: Dataset, rel: str) -> list[RelInstance]:
    """Stored instances, or the implied ones for an identifying relationship."""
    w = schema.identified_entity(rel)
    if w is None:
        return list(ds.relationships.get(rel, []))
    owner = schema.entity(w).weak_owner
    assert owner is not None
    n = len(schema.key_closure(owner))
    return [RelInstance((key_of(schema, w, d)[:n], key_of(schema, w, d))) for d in ds.entities.get(w, [])]


# ---- query evaluation ---------------------------------------------------------------


def _get(doc: Any, names: tuple[str, ...]) -> Any:
    v = doc
    for n in names:
        if v is None:
            return None
        v = v[n]
    return v


def path_value(row: dict, p: BoundPath) -> Any:
    if p.scope == "relationship":
        attrs = row.get(("rel", p.binder))
        return None if attrs is None else _get(attrs, p.names)
    hit = row.get(p.binder)
    if hit is None:
        return None
    return _get(hit[1], p.names)


def _operand(row: dict, o) -> Any:
    if isinstance(o, BoundPath):
        return path_value(row, o)
    if isinstance(o, A.Literal):
        return o.value
    if isinstance(o, A.ListLiteral):
        return [i.value for i in o.items]
    raise TypeError(o)


def compare(op: str, a: Any, b: Any) -> bool:
    """Two-valued comparison: anything involving an absent value is false."""
    if a is None or b is None:
        return False
    if op == "=":
        return a == b
    if op == "!=":
        return a != b
    if op == "<":
        return a < b
    if op == "<=":
        return a <= b
    if op == ">":
        return a > b
    if op == ">=":
        return a >= b
    raise ValueError(op)


def eval_pred(row: dict, p) -> bool:
    if p is None:
        return True
    if isinstance(p, A.Compare):
        return compare(p.op, _operand(row, p.left), _operand(row, p.right))
    if isinstance(p, A.Member):
        x, coll = _operand(row, p.left), _operand(row, p.right)
        if x is None or coll is None:
            return False
        return any(compare("=", x, c) for c in coll)
    if isinstance(p, A.Not):
        return not eval_pred(row, p.operand)
    if isinstance(p, A.BoolOp):
        if p.op == "and":
            return eval_pred(row, p.left) and eval_pred(row, p.right)
        return eval_pred(row, p.left) or eval_pred(row, p.right)
    raise TypeError(p)


def _join_rows(schema: ErSchema, ds: Dataset, rows: list[dict], j, index: InstanceIndex) -> list[dict]:
    out = []
    if j.relationship is None:
        cands = instances(schema, ds, j.entity)
        for row in rows:
            hit = False
            for inst in cands:
                r2 = dict(row)
                r2[j.binder] = inst
                if eval_pred(r2, j.predicate):
                    out.append(r2)
                    hit = True
            if not hit and j.outer:
                r2 = dict(row)
                r2[j.binder] = None
                out.append(r2)
        return out
    insts = rel_instances(schema, ds, j.relationship)
    by_prev: dict[tuple, list[RelInstance]] = {}
    for inst in insts:
        by_prev.setdefault(inst.keys[j.prev_role], []).append(inst)
    prev_entity = None
    for row in rows:
        hit = False
        prev = row.get(j.prev)
        if prev is not None:
            prev_entity = prev[0]
            pkey = key_of(schema, prev_entity, prev[1])
            for inst in by_prev.get(pkey, []):
                found = index.lookup(j.entity, inst.keys[j.role])
                if found is None:
                    continue
                r2 = dict(row)
                r2[j.binder] = found
                r2[("rel", j.binder)] = inst.attrs
                out.append(r2)
                hit = True
        if not hit and j.outer:
            r2 = dict(row)
            r2[j.binder] = None
            r2[("rel", j.binder)] = None
            out.append(r2)
    return out


def _agg(fn: str, vals: list) -> Any:
    vals = [v for v in vals if v is not None]
    if fn == "count":
        return len(vals)
    if not vals:
        return None
    if fn == "min":
        return min(vals, key=sort_key)
    if fn == "max":
        return max(vals, key=sort_key)
    if all(isinstance(v, int) for v in vals):
        total: Any = sum(vals)
    else:
        total = math.fsum(vals)
    if fn == "sum":
        return total
    return math.fsum(vals) / len(vals)


def _present(row: dict, binders: set[str]) -> bool:
    return all(row.get(b) is not None for b in binders)


def _plain_binders(items) -> set[str]:
    out: set[str] = set()
    for i in items:
        if isinstance(i, BoundExpr):
            out.add(i.path.binder)
    return out


def _nest(rows: list[dict], n: BoundNested) -> list:
    plain = [i for i in n.items if isinstance(i, BoundExpr)]
    subs = [i for i in n.items if isinstance(i, BoundNested)]
    binders = _plain_binders(n.items)
    rows = [r for r in rows if _present(r, binders)]
    if not subs:
        if n.scalar_elements:
            return [path_value(r, plain[0].path) for r in rows]
        return [{i.label: path_value(r, i.path) for i in n.items} for r in rows]
    groups: dict[str, tuple[list, list[dict]]] = {}
    for r in rows:
        vals = [path_value(r, i.path) for i in plain]
        k = repr(sort_key(vals))
        groups.setdefault(k, (vals, []))[1].append(r)
    out = []
    for vals, members in groups.values():
        el = {}
        it = iter(vals)
        for i in n.items:
            el[i.label] = next(it) if isinstance(i, BoundExpr) else _nest(members, i)
        out.append(el)
    return out


def evaluate(schema: ErSchema, ds: Dataset, q: BoundQuery) -> ResultTable:
    index = InstanceIndex(schema, ds)
    rows: list[dict] = [{q.base: inst} for inst in instances(schema, ds, q.entity_of(q.base))]
    for j in q.joins:
        rows = _join_rows(schema, ds, rows, j, index)
    rows = [r for r in rows if eval_pred(r, q.where)]
    # expand unnest items (one row per element, cross product across items)
    for idx, it in enumerate(q.items):
        if isinstance(it, BoundExpr) and it.kind == "unnest":
            expanded = []
            for r in rows:
                for el in path_value(r, it.path) or []:
                    r2 = dict(r)
                    r2[("unnest", idx)] = el
                    expanded.append(r2)
            rows = expanded

    def plain_value(r: dict, idx: int, it: BoundExpr) -> Any:
        if it.kind == "unnest":
            return r[("unnest", idx)]
        return path_value(r, it.path)

    out_rows: list[tuple] = []
    if not q.grouped:
        for r in rows:
            out_rows.append(tuple(plain_value(r, i, it) for i, it in enumerate(q.items)))
    else:
        keyed = [(i, it) for i, it in enumerate(q.items) if isinstance(it, BoundExpr) and it.kind != "agg"]
        groups: dict[str, tuple[list, list[dict]]] = {}
        for r in rows:
            vals = [plain_value(r, i, it) for i, it in keyed]
            groups.setdefault(repr(sort_key(vals)), (vals, []))[1].append(r)
        if not keyed and not groups:
            groups[""] = ([], [])
        for vals, members in groups.values():
            kv = dict(zip([i for i, _ in keyed], vals))
            row = []
            for i, it in enumerate(q.items):
                if isinstance(it, BoundNested):
                    row.append(_nest(members, it))
                elif it.kind == "agg":
                    row.append(_agg(it.fn or "", [path_value(m, it.path) for m in members]))
                else:
                    row.append(kv[i])
            out_rows.append(tuple(row))
    return ResultTable([(it.label, it.shape) for it in q.items], out_rows)


# ---- logical CRUD -----------------------------------------------------------------------


def _find(schema: ErSchema, ds: Dataset, entity: str, key: tuple) -> tuple[str, int] | None:
    for cls in schema.family(entity):
        for i, d in enumerate(ds.entities.get(cls, [])):
            if key_of(schema, cls, d) == key:
                return cls, i
    return None


def _set_path(doc: dict, names: tuple[str, ...], value: Any) -> None:
    cur = doc
    for n in names[:-1]:
        cur = cur[n]
    cur[names[-1]] = value


def _remove_instance(schema: ErSchema, ds: Dataset, cls: str, key: tuple) -> None:
    """Remove an instance, its relationship instances, and its weak dependents."""
    fam = set(schema.family(cls))
    for name, insts in list(ds.relationships.items()):
        r = schema.relationship(name)
        keep = []
        for inst in insts:
            hit = any(p.entity in fam and inst.keys[i] == key for i, p in enumerate(r.participants))
            if not hit:
                keep.append(inst)
        ds.relationships[name] = keep
    for w in schema.entities:
        if w.weak_owner is None or w.weak_owner not in fam:
            continue
        n = len(key)
        for d in list(ds.entities.get(w.name, [])):
            wk = key_of(schema, w.name, d)
            if wk[:n] == key:
                _remove_instance(schema, ds, w.name, wk)
    docs = ds.entities.get(cls, [])
    ds.entities[cls] = [d for d in docs if key_of(schema, cls, d) != key]


def apply_logical(schema: ErSchema, ds: Dataset, stmt) -> Dataset:
    """Apply one bound DML statement; returns a new dataset or raises DataError."""
    out = ds.copy()
    if isinstance(stmt, BoundInsertEntity):
        if _find(schema, out, stmt.entity, stmt.key) is not None:
            raise DataError(f"{stmt.entity}: duplicate key {list(stmt.key)}")
        e = schema.entity(stmt.entity)
        if e.weak_owner is not None:
            n = len(schema.key_closure(e.weak_owner))
            hit = _find(schema, out, e.weak_owner, stmt.key[:n])
            if hit is None or hit[0] not in schema.descendants(e.weak_owner):
                raise DataError(f"{stmt.entity}: owner {e.weak_owner} {list(stmt.key[:n])} does not exist")
        out.entities.setdefault(stmt.entity, []).append(dict(stmt.doc))
        return out
    if isinstance(stmt, BoundInsertRelationship):
        r = schema.relationship(stmt.relationship)
        for p, k in zip(r.participants, stmt.keys):
            hit = _find(schema, out, p.entity, k)
            if hit is None or hit[0] not in schema.descendants(p.entity):
                raise DataError(f"{r.name}: {p.role} {list(k)} does not exist")
        insts = out.relationships.setdefault(r.name, [])
        if any(i.keys == stmt.keys for i in insts):
            raise DataError(f"{r.name}: duplicate instance {[list(k) for k in stmt.keys]}")
        seen: list[dict] = [dict() for _ in r.participants]
        for i in insts:
            check_cardinality(r, i.keys, seen)
        check_cardinality(r, stmt.keys, seen)
        insts.append(RelInstance(stmt.keys, dict(stmt.attrs)))
        return out
    if isinstance(stmt, BoundDeleteRelationship):
        insts = out.relationships.get(stmt.relationship, [])
        keep = [i for i in insts if i.keys != stmt.keys]
        if len(keep) == len(insts):
            raise DataError(f"{stmt.relationship}: instance {[list(k) for k in stmt.keys]} does not exist")
        out.relationships[stmt.relationship] = keep
        return out
    hit = _find(schema, out, stmt.entity, stmt.key)
    if hit is not None and hit[0] not in schema.descendants(stmt.entity):
        hit = None
    if isinstance(stmt, BoundPurge):
        if hit is not None:
            _remove_instance(schema, out, hit[0], stmt.key)
        return out
    if hit is None:
        raise DataError(f"{stmt.entity}: no instance with key {list(stmt.key)}")
    cls, i = hit
    if isinstance(stmt, BoundDelete):
        _remove_instance(schema, out, cls, stmt.key)
        return out
    assert isinstance(stmt, BoundUpdate)
    doc = out.entities[cls][i]
    for s in stmt.sets:
        if s.op == "=":
            _set_path(doc, s.names, s.value)
            continue
        cur = list(_get(doc, s.names))
        present = any(sort_key(x) == sort_key(s.value) for x in cur)
        if s.op == "+=":
            if present:
                raise DataError(f"{'.'.join(s.names)} already contains {s.value!r}")
            cur.append(s.value)
        else:
            if not present:
                raise DataError(f"{'.'.join(s.names)} does not contain {s.value!r}")
            cur = [x for x in cur if sort_key(x) != sort_key(s.value)]
        cur.sort(key=sort_key)
        _set_path(doc, s.names, cur)
    return out
