"""Evaluation of physical plans over a store."""

from __future__ import annotations

import math
from typing import Any, Iterator

from ..compiler.plan import (
    Coalesce,
    Col,
    Compose,
    Const,
    FactorizedScan,
    Filter,
    GroupNest,
    Join,
    NestSpec,
    Op,
    PBool,
    PCmp,
    PhysicalPlan,
    PIn,
    PNot,
    Project,
    PTypeIn,
    Scan,
    UnionAll,
    Unnest,
    output_columns,
)
from ..errors import ExecutionError
from ..mapping.design import role_key_columns
from ..result import ResultTable
from ..values import sort_key
from .store import Store, freeze


def eval_expr(e, row: dict) -> Any:
    if isinstance(e, Col):
        return row[e.name]
    if isinstance(e, Const):
        return e.value
    if isinstance(e, Coalesce):
        v = eval_expr(e.expr, row)
        return list(e.default) if v is None and isinstance(e.default, list) else (e.default if v is None else v)
    if isinstance(e, Compose):
        return {k: eval_expr(x, row) for k, x in e.fields}
    raise ExecutionError(f"bad expression {e!r}")


def _cmp(op: str, a: Any, b: Any) -> bool:
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
    raise ExecutionError(f"bad comparison {op}")


def eval_pred(p, row: dict) -> bool:
    if isinstance(p, PCmp):
        return _cmp(p.op, eval_expr(p.left, row), eval_expr(p.right, row))
    if isinstance(p, PIn):
        x, coll = eval_expr(p.left, row), eval_expr(p.right, row)
        if x is None or coll is None:
            return False
        return any(c is not None and x == c for c in coll)
    if isinstance(p, PBool):
        if p.op == "and":
            return eval_pred(p.left, row) and eval_pred(p.right, row)
        return eval_pred(p.left, row) or eval_pred(p.right, row)
    if isinstance(p, PNot):
        return not eval_pred(p.operand, row)
    if isinstance(p, PTypeIn):
        return row.get(p.column) in p.classes
    raise ExecutionError(f"bad predicate {p!r}")


def aggregate(fn: str, vals: list) -> Any:
    vals = [v for v in vals if v is not None]
    if fn == "count":
        return len(vals)
    if not vals:
        return None
    if fn == "min":
        return min(vals, key=sort_key)
    if fn == "max":
        return max(vals, key=sort_key)
    if fn == "sum":
        return sum(vals) if all(isinstance(v, int) for v in vals) else math.fsum(vals)
    if fn == "avg":
        return math.fsum(vals) / len(vals)
    raise ExecutionError(f"unknown aggregate {fn}")


def _group_key(vals: list) -> tuple:
    return tuple(sort_key(v) for v in vals)


def _nest(spec: NestSpec, rows: list[dict]) -> list:
    rows = [r for r in rows if all(r.get(c) is not None for c in spec.presence)]
    if spec.element is not None:
        return [eval_expr(spec.element, r) for r in rows]
    plain = [(k, v) for k, v in spec.fields if not isinstance(v, NestSpec)]
    subs = [(k, v) for k, v in spec.fields if isinstance(v, NestSpec)]
    if not subs:
        return [{k: eval_expr(v, r) for k, v in spec.fields} for r in rows]
    groups: dict[tuple, tuple[list, list]] = {}
    for r in rows:
        vals = [eval_expr(v, r) for _, v in plain]
        groups.setdefault(_group_key(vals), (vals, []))[1].append(r)
    out = []
    for vals, members in groups.values():
        pv = dict(zip([k for k, _ in plain], vals))
        out.append({k: (_nest(v, members) if isinstance(v, NestSpec) else pv[k]) for k, v in spec.fields})
    return out


class Executor:
    def __init__(self, store: Store):
        self.store = store

    def run(self, op: Op) -> Iterator[dict]:
        m = getattr(self, "_" + type(op).__name__)
        return m(op)

    def _Scan(self, op: Scan) -> Iterator[dict]:
        t = self.store.table(op.container)
        names = [(f"{op.alias}.{c}", c) for c in op.columns]
        rows = (t.rows[pk] for pk in t.lookup(op.eq)) if op.eq else t.scan()
        for row in rows:
            yield {n: row.get(c) for n, c in names}

    def _FactorizedScan(self, op: FactorizedScan) -> Iterator[dict]:
        s = self.store.schema
        d = self.store.design
        lt, rt, et = self.store.table(op.left), self.store.table(op.right), self.store.table(op.edges)
        lc, rc, ec = d.container(op.left), d.container(op.right), d.container(op.edges)
        r = s.relationship(ec.relationship)
        lp = next(p for p in r.participants if p.entity == lc.entity)
        rp = next(p for p in r.participants if p.entity == rc.entity and p is not lp)
        lcols = tuple(role_key_columns(s, lp.role, lp.entity))
        rcols = role_key_columns(s, rp.role, rp.entity)
        adj = et.indexes[lcols]
        ln = [(f"{op.left_alias}.{c}", c) for c in op.left_columns]
        rn = [(f"{op.right_alias}.{c}", c) for c in op.right_columns]
        en = [(f"{op.edge_alias}.{c}", c) for c in op.edge_columns]
        rows = (lt.rows[pk] for pk in lt.lookup(op.eq)) if op.eq else lt.scan()
        for lrow in rows:
            lk = tuple(freeze(lrow[k]) for k in lc.key_columns)
            epks = adj.get(lk)
            if not epks:
                continue
            base = {n: lrow.get(c) for n, c in ln}
            for epk in epks:
                erow = et.rows[epk]
                rrow = rt.get(tuple(erow[c] for c in rcols))
                if rrow is None:
                    continue
                out = dict(base)
                out.update((n, erow.get(c)) for n, c in en)
                out.update((n, rrow.get(c)) for n, c in rn)
                yield out

    def _Filter(self, op: Filter) -> Iterator[dict]:
        for row in self.run(op.child):
            if eval_pred(op.pred, row):
                yield row

    def _Join(self, op: Join) -> Iterator[dict]:
        right = list(self.run(op.right))
        pad = dict.fromkeys(output_columns(op.right)) if op.kind == "left" else None
        lk = [a for a, _ in op.keys]
        rk = [b for _, b in op.keys]
        index: dict[tuple, list[dict]] = {}
        if op.keys:
            for r in right:
                k = tuple(r[c] for c in rk)
                if any(v is None for v in k):
                    continue
                index.setdefault(k, []).append(r)
        for left in self.run(op.left):
            if op.keys:
                k = tuple(left[c] for c in lk)
                cands = [] if any(v is None for v in k) else index.get(k, [])
            else:
                cands = right
            hit = False
            for r in cands:
                if op.residual is not None:
                    merged = {**left, **r}
                    if not eval_pred(op.residual, merged):
                        continue
                else:
                    merged = None
                hit = True
                if op.kind == "semi":
                    break
                yield merged if merged is not None else {**left, **r}
            if op.kind == "semi" and hit:
                yield left
            elif op.kind == "left" and not hit:
                yield {**left, **pad}

    def _UnionAll(self, op: UnionAll) -> Iterator[dict]:
        for c in op.children:
            yield from self.run(c)

    def _Unnest(self, op: Unnest) -> Iterator[dict]:
        for row in self.run(op.child):
            arr = eval_expr(op.column, row) or []
            if not arr:
                if op.outer:
                    out = dict(row)
                    if op.fields is None:
                        out[op.out] = None
                    else:
                        out.update((f"{op.out}.{f}", None) for f in op.fields)
                    yield out
                continue
            for el in arr:
                out = dict(row)
                if op.fields is None:
                    out[op.out] = el
                else:
                    out.update((f"{op.out}.{f}", el.get(f)) for f in op.fields)
                yield out

    def _Project(self, op: Project) -> Iterator[dict]:
        for row in self.run(op.child):
            yield {n: eval_expr(e, row) for n, e in op.exprs}

    def _GroupNest(self, op: GroupNest) -> Iterator[dict]:
        groups: dict[tuple, tuple[list, list]] = {}
        for row in self.run(op.child):
            vals = [eval_expr(e, row) for _, e in op.keys]
            groups.setdefault(_group_key(vals), (vals, []))[1].append(row)
        if not op.keys and not groups:
            groups[()] = ([], [])
        for vals, members in groups.values():
            out = dict(zip([n for n, _ in op.keys], vals))
            for n, fn, e in op.aggs:
                out[n] = aggregate(fn, [eval_expr(e, r) for r in members])
            for n, spec in op.nests:
                out[n] = _nest(spec, members)
            yield out


def execute(store: Store, plan: PhysicalPlan) -> ResultTable:
    """Run a compiled query plan; rows come back in plan order (use ``normalized`` to compare)."""
    rows = [tuple(r[n] for n in plan.outputs) for r in Executor(store).run(plan.root)]
    return ResultTable([tuple(c) for c in plan.columns], rows)
