"""SQL text emission: DDL for a mapping and a single SELECT statement for a physical plan.

Three dialect profiles are supported. Emission is text only; no database is contacted."""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Any

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
    walk,
)
from ..errors import EmitError
from ..mapping.design import Container, Design, design_of
from ..mapping.model import Mapping
from ..model import ErSchema

RESERVED = frozenset(
    """all and any array as asc by case cast check column constraint create default desc distinct else end
    except false fetch for foreign from full grant group having in inner intersect into is join lateral left
    limit natural not null offset on or order outer primary references right row select some table then to
    true union unique user using when where window with""".split()
)

_IDENT = re.compile(r"^[a-z_][a-z0-9_]*$")


@dataclass(frozen=True)
class Profile:
    name: str
    types: dict
    array_type: str  # format for an array of the given element type
    struct_type: str | None  # format for an inline composite type; None means CREATE TYPE
    array_agg: str
    empty_array: str
    array_literal: str

    def scalar(self, t: str) -> str:
        try:
            return self.types[t]
        except KeyError:
            raise EmitError(f"type {t} has no {self.name} spelling") from None


PROFILES = {
    "standard": Profile(
        "standard",
        {"int": "INTEGER", "bigint": "BIGINT", "text": "VARCHAR", "float": "DOUBLE PRECISION", "bool": "BOOLEAN", "date": "DATE"},
        "{} ARRAY",
        "ROW({})",
        "ARRAY_AGG",
        "ARRAY[]",
        "ARRAY[{}]",
    ),
    "postgres": Profile(
        "postgres",
        {"int": "integer", "bigint": "bigint", "text": "text", "float": "double precision", "bool": "boolean", "date": "date"},
        "{}[]",
        None,
        "array_agg",
        "'{{}}'",
        "ARRAY[{}]",
    ),
    "duckdb": Profile(
        "duckdb",
        {"int": "INTEGER", "bigint": "BIGINT", "text": "VARCHAR", "float": "DOUBLE", "bool": "BOOLEAN", "date": "DATE"},
        "{}[]",
        "STRUCT({})",
        "list",
        "[]",
        "[{}]",
    ),
}


def profile(name: str) -> Profile:
    try:
        return PROFILES[name]
    except KeyError:
        raise EmitError(f"unknown dialect profile {name!r}; choose one of {', '.join(PROFILES)}") from None


# ---- naming and types ----------------------------------------------------------------------


def ident(name: str) -> str:
    return name if _IDENT.match(name) and name not in RESERVED else '"' + name.replace('"', '""') + '"'


def sanitize(text: str) -> str:
    out = re.sub(r"[^a-z0-9]+", "_", text.lower()).strip("_")
    return out if out and not out[0].isdigit() else "t_" + out


def table_name(c: Container) -> str:
    return sanitize(c.id)


def column_names(c: Container) -> dict[str, str]:
    """SQL names of a container's columns: lower case, the container's own entity (or
    relationship) prefix dropped unless that makes two names collide."""
    own = c.relationship if c.kind == "relationship" else (c.mv[0] if c.kind == "multivalued" else c.entity)
    prefix = f"{own}_" if own else None
    short = {}
    for n, _ in c.columns:
        s = n[len(prefix):] if prefix and n.startswith(prefix) and len(n) > len(prefix) else n
        short[n] = s.lower()
    counts: dict[str, int] = {}
    for s in short.values():
        counts[s] = counts.get(s, 0) + 1
    return {n: (s if counts[s] == 1 else n.lower()) for n, s in short.items()}


def parse_shape(shape: str) -> Any:
    """'int' -> 'int'; 'T[]' -> ('array', T); '{a:T,...}' -> ('struct', [(a, T), ...])."""
    pos = 0

    def one() -> Any:
        nonlocal pos
        if shape.startswith("{", pos):
            pos += 1
            fields = []
            while not shape.startswith("}", pos):
                colon = shape.index(":", pos)
                name = shape[pos:colon]
                pos = colon + 1
                fields.append((name, one()))
                if shape.startswith(",", pos):
                    pos += 1
            pos += 1
            t: Any = ("struct", fields)
        else:
            m = re.compile(r"[a-z]+").match(shape, pos)
            if m is None:
                raise EmitError(f"bad column shape {shape!r}")
            pos = m.end()
            t = m.group(0)
        while shape.startswith("[]", pos):
            pos += 2
            t = ("array", t)
        return t

    out = one()
    if pos != len(shape):
        raise EmitError(f"bad column shape {shape!r}")
    return out


class _Types:
    """Renders shapes as column types; the postgres profile collects CREATE TYPE statements."""

    def __init__(self, prof: Profile):
        self.prof = prof
        self.created: list[str] = []
        self.names: dict[str, str] = {}

    def render(self, t: Any, hint: str, fieldnames: dict[str, str] | None = None) -> str:
        p = self.prof
        if isinstance(t, str):
            return p.scalar(t)
        if t[0] == "array":
            return p.array_type.format(self.render(t[1], hint, fieldnames))
        fields = [(ident((fieldnames or {}).get(n, n.lower())), self.render(ft, f"{hint}_{sanitize(n)}")) for n, ft in t[1]]
        body = ", ".join(f"{n} {ft}" for n, ft in fields)
        if p.struct_type is not None:
            return p.struct_type.format(body)
        if body not in self.names:
            name = hint
            while name in self.names.values():
                name += "_t"
            self.names[body] = name
            self.created.append(f"CREATE TYPE {name} AS ({body});")
        return self.names[body]


def _check_emittable(d: Design) -> None:
    for c in d.containers:
        if c.group is not None:
            raise EmitError(f"factorized not emittable: fragment {c.fragment} has no standard SQL encoding")


def emit_ddl(schema: ErSchema, mapping: Mapping, profile_name: str = "standard") -> str:
    """One CREATE TABLE per top-level container; nested containers become array columns."""
    prof = profile(profile_name)
    d = design_of(schema, mapping)
    _check_emittable(d)
    types = _Types(prof)
    tables = []
    for c in d.containers:
        names = column_names(c)
        emb = {e.array_column: e for e in c.embedded}
        lines = []
        for n, shape in c.columns:
            e = emb.get(n)
            t = types.render(parse_shape(shape), f"{table_name(c)}_{names[n]}", column_names(e) if e else None)
            null = " NOT NULL" if n in c.key_columns else ""
            lines.append(f"  {ident(names[n])} {t}{null}")
        lines.append(f"  PRIMARY KEY ({', '.join(ident(names[k]) for k in c.key_columns)})")
        tables.append(f"CREATE TABLE {ident(table_name(c))} (\n" + ",\n".join(lines) + "\n);")
    return "\n\n".join(types.created + tables) + "\n"


# ---- SELECT emission -------------------------------------------------------------------------


@dataclass
class _Rel:
    from_: str
    where: list[str]
    cols: dict[str, str]  # plan column name -> SQL expression
    compound: bool = False  # from_ holds a join chain


class _SelectEmitter:
    def __init__(self, schema: ErSchema, design: Design, prof: Profile):
        self.s = schema
        self.d = design
        self.p = prof
        self.aliases: dict[str, str] = {}
        self.alias_containers: dict[str, Container] = {}
        self.derived = 0

    # -- helpers

    def alias(self, plan_alias: str) -> str:
        if plan_alias in self.aliases:
            return self.aliases[plan_alias]
        base = sanitize(plan_alias.replace("?", "_s").replace("^", "_o"))
        name, n = base, 1
        taken = set(self.aliases.values())
        while name in taken or name in RESERVED:
            n += 1
            name = f"{base}{n}"
        self.aliases[plan_alias] = name
        return name

    def fresh(self, stem: str) -> str:
        self.derived += 1
        return f"{stem}{self.derived}"

    def lit(self, v: Any) -> str:
        if v is None:
            return "NULL"
        if isinstance(v, bool):
            return "TRUE" if v else "FALSE"
        if isinstance(v, (int, float)):
            return repr(v)
        if isinstance(v, str):
            return "'" + v.replace("'", "''") + "'"
        if isinstance(v, list):
            if not v:
                return self.p.empty_array.format()
            return self.p.array_literal.format(", ".join(self.lit(x) for x in v))
        if isinstance(v, dict):
            return self.row([(k, self.lit(x)) for k, x in v.items()])
        raise EmitError(f"value {v!r} has no SQL literal")

    def row(self, fields: list[tuple[str, str]]) -> str:
        if self.p.name == "duckdb":
            return "struct_pack(" + ", ".join(f"{ident(k.lower())} := {x}" for k, x in fields) + ")"
        return "ROW(" + ", ".join(x for _, x in fields) + ")"

    def expr(self, e: Any, cols: dict[str, str]) -> str:
        if isinstance(e, Col):
            try:
                return cols[e.name]
            except KeyError:
                raise EmitError(f"column {e.name} is not in scope") from None
        if isinstance(e, Const):
            return self.lit(e.value)
        if isinstance(e, Coalesce):
            return f"COALESCE({self.expr(e.expr, cols)}, {self.lit(e.default)})"
        if isinstance(e, Compose):
            return self.row([(k, self.expr(x, cols)) for k, x in e.fields])
        raise EmitError(f"expression {e!r} has no SQL spelling")

    def pred(self, p: Any, cols: dict[str, str]) -> str:
        if isinstance(p, PCmp):
            op = "<>" if p.op == "!=" else p.op
            return f"{self.expr(p.left, cols)} {op} {self.expr(p.right, cols)}"
        if isinstance(p, PIn):
            x = self.expr(p.left, cols)
            if isinstance(p.right, Const) and isinstance(p.right.value, list):
                return f"{x} IN ({', '.join(self.lit(v) for v in p.right.value)})"
            arr = self.expr(p.right, cols)
            if self.p.name == "postgres":
                return f"{x} = ANY({arr})"
            if self.p.name == "duckdb":
                return f"list_contains({arr}, {x})"
            return f"{x} IN (SELECT m.v FROM UNNEST({arr}) AS m(v))"
        if isinstance(p, PBool):
            return f"({self.pred(p.left, cols)} {p.op.upper()} {self.pred(p.right, cols)})"
        if isinstance(p, PNot):
            # absent values make comparisons false rather than unknown
            return f"NOT COALESCE({self.pred(p.operand, cols)}, FALSE)"
        if isinstance(p, PTypeIn):
            return f"{self.expr(Col(p.column), cols)} IN ({', '.join(self.lit(c) for c in p.classes)})"
        raise EmitError(f"predicate {p!r} has no SQL spelling")

    def conj(self, parts: list[str]) -> str:
        return " AND ".join(parts) if parts else "TRUE"

    # -- relations

    def rel(self, op: Op) -> _Rel:
        if isinstance(op, Scan):
            c = self.d.container(op.container)
            if c.parent is not None:
                raise EmitError(f"nested container {c.id} cannot be scanned directly")
            a = self.alias(op.alias)
            self.alias_containers[op.alias] = c
            names = column_names(c)
            t = ident(table_name(c))
            cols = {f"{op.alias}.{col}": f"{a}.{ident(names[col])}" for col in op.columns}
            where = [f"{a}.{ident(names[col])} = {self.lit(v)}" for col, v in op.eq]
            return _Rel(t if a == table_name(c) else f"{t} AS {a}", where, cols)
        if isinstance(op, FactorizedScan):
            raise EmitError(f"factorized not emittable: fragment {op.fragment}")
        if isinstance(op, Filter):
            r = self.rel(op.child)
            r.where.append(self.pred(op.pred, r.cols))
            return r
        if isinstance(op, Join):
            return self.join(op)
        if isinstance(op, Unnest):
            return self.unnest(op)
        return self.derived_rel(op)

    def join(self, op: Join) -> _Rel:
        left = self.rel(op.left)
        right = self.rel(op.right)
        scope = {**left.cols, **right.cols}
        on = [f"{left.cols[a]} = {right.cols[b]}" for a, b in op.keys] + right.where
        if op.residual is not None:
            on.append(self.pred(op.residual, scope))
        if op.kind == "semi":
            left.where.append(f"EXISTS (SELECT 1 FROM {right.from_} WHERE {self.conj(on)})")
            return left
        item = f"({right.from_})" if right.compound else right.from_
        kw = "LEFT JOIN" if op.kind == "left" else "JOIN"
        return _Rel(f"{left.from_}\n  {kw} {item} ON {self.conj(on)}", left.where, scope, True)

    def unnest(self, op: Unnest) -> _Rel:
        r = self.rel(op.child)
        arr = self.expr(op.column, r.cols)
        u = self.alias(op.out)
        cols = dict(r.cols)
        if op.fields is None:
            names = ["v"]
            cols[op.out] = f"{u}.v"
        else:
            fmap = self.field_names(op.column)
            names = [ident(fmap.get(f, f.lower())) for f in op.fields]
            for f, n in zip(op.fields, names):
                cols[f"{op.out}.{f}"] = f"{u}.v.{n}" if self.p.name == "duckdb" else f"{u}.{n}"
        if self.p.name == "duckdb":
            src = f"LATERAL (SELECT UNNEST({arr}) AS v) AS {u}"
        elif self.p.name == "postgres":
            src = f"LATERAL unnest({arr}) AS {u}({', '.join(names)})"
        else:
            src = f"UNNEST({arr}) AS {u}({', '.join(names)})"
        if op.outer:
            text = f"{r.from_}\n  LEFT JOIN {src} ON TRUE"
        else:
            text = f"{r.from_}\n  CROSS JOIN {src}"
        return _Rel(text, r.where, cols, True)

    def field_names(self, column: Any) -> dict[str, str]:
        """SQL field names of the composite elements stored in an array column."""
        if isinstance(column, Col) and "." in column.name:
            a, col = column.name.rsplit(".", 1)
            c = self.alias_containers.get(a)
            if c is not None:
                for e in c.embedded:
                    if e.array_column == col:
                        return column_names(e)
        return {}

    def derived_rel(self, op: Op) -> _Rel:
        outs = output_columns(op)
        prefixes = {n.split(".", 1)[0] for n in outs if "." in n}
        if len(prefixes) == 1 and all("." in n for n in outs):
            a = self.alias(next(iter(prefixes)))
        else:
            a = self.fresh("d")
        body, names = self.select(op)
        cols = {n: f"{a}.{ident(names[n])}" for n in outs}
        return _Rel(f"(\n{_indent(body, 4)}\n  ) AS {a}", [], cols)

    # -- statements

    def select(self, op: Op) -> tuple[str, dict[str, str]]:
        """SELECT text producing ``op``'s output columns; returns it with the chosen column names."""
        if isinstance(op, UnionAll):
            parts = []
            names: dict[str, str] = {}
            for i, child in enumerate(op.children):
                text, n = self.select(child)
                if i == 0:
                    names = n
                parts.append(text)
            return "\nUNION ALL\n".join(parts), names
        if isinstance(op, GroupNest):
            return self.group(op)
        if isinstance(op, Project):
            r = self.rel(op.child)
            items = [(n, self.expr(e, r.cols)) for n, e in op.exprs]
        else:
            r = self.rel(op)
            items = [(n, r.cols[n]) for n in output_columns(op)]
        names = _derived_names(items)
        return _select_text(_items(items, names), r), names

    def group(self, op: GroupNest, labels: dict[str, str] | None = None) -> tuple[str, dict[str, str]]:
        """Grouped SELECT; output columns are named by ``labels`` when given."""
        r = self.rel(op.child)
        if any(isinstance(v, NestSpec) for _, spec in op.nests for _, v in spec.fields):
            return self.group_staged(op, r, labels)
        keys = [(n, self.expr(e, r.cols)) for n, e in op.keys]
        items = list(keys)
        for n, fn, e in op.aggs:
            items.append((n, f"{fn.upper()}({self.expr(e, r.cols)})"))
        for n, spec in op.nests:
            items.append((n, self.nest_agg(spec, r.cols)))
        order = {n: i for i, n in enumerate(op.order)}
        items.sort(key=lambda it: order.get(it[0], len(order)))
        names = labels or _derived_names(items)
        text = _select_text(_items(items, names, labels is None), r)
        if keys:
            text += "\nGROUP BY " + ", ".join(x for _, x in keys)
        return text, names

    def nest_agg(self, spec: NestSpec, cols: dict[str, str]) -> str:
        if spec.element is not None:
            el = self.expr(spec.element, cols)
        else:
            el = self.row([(k, self.expr(v, cols)) for k, v in spec.fields])
        agg = f"{self.p.array_agg}({el})"
        if spec.presence:
            agg += " FILTER (WHERE " + " AND ".join(f"{cols[c]} IS NOT NULL" for c in spec.presence) + ")"
        return f"COALESCE({agg}, {self.p.empty_array.format()})"

    def group_staged(self, op: GroupNest, r: _Rel, labels: dict[str, str] | None) -> tuple[str, dict[str, str]]:
        """Grouping with multi-level nests: the joined rows go into a common table, each
        multi-level nest is aggregated level by level and joined back on the group keys."""
        used = _group_columns(op)
        stream_items = [(n, r.cols[n]) for n in r.cols if n in used]
        snames = _derived_names(stream_items)
        sel = [f"{x} AS {ident(snames[n])}" for n, x in stream_items]
        cte = _select_text(sel, r)
        scols = {n: f"s.{ident(snames[n])}" for n, _ in stream_items}
        keys = [(n, self.expr(e, scols)) for n, e in op.keys]
        gk = [f"k{i}" for i in range(len(keys))]
        inner = [f"{x} AS {g}" for (_, x), g in zip(keys, gk)]
        for n, fn, e in op.aggs:
            inner.append(f"{fn.upper()}({self.expr(e, scols)}) AS {ident(sanitize(n))}")
        staged = []
        for i, (n, spec) in enumerate(op.nests):
            if any(isinstance(v, NestSpec) for _, v in spec.fields):
                staged.append((n, spec, f"n{i}"))
            else:
                inner.append(f"{self.nest_agg(spec, scols)} AS {ident(sanitize(n))}")
        text = f"WITH s AS (\n{_indent(cte)}\n)\nSELECT "
        outer: list[tuple[str, str]] = []
        for (n, _), g in zip(keys, gk):
            outer.append((n, f"g.{g}"))
        for n, _, _ in op.aggs:
            outer.append((n, f"g.{ident(sanitize(n))}"))
        for n, spec in op.nests:
            hit = next((a for m, _, a in staged if m == n), None)
            if hit is None:
                outer.append((n, f"g.{ident(sanitize(n))}"))
            else:
                outer.append((n, f"COALESCE({hit}.arr, {self.p.empty_array.format()})"))
        order = {n: i for i, n in enumerate(op.order)}
        outer.sort(key=lambda it: order.get(it[0], len(order)))
        names = labels or _derived_names(outer)
        text += ", ".join(_items(outer, names, labels is None))
        gsel = "SELECT " + (", ".join(inner) if inner else "1 AS one") + "\nFROM s"
        if keys:
            gsel += "\nGROUP BY " + ", ".join(x for _, x in keys)
        text += f"\nFROM (\n{_indent(gsel)}\n) AS g"
        for n, spec, a in staged:
            sub = self.nest_level(spec, [x for _, x in keys], scols, "s")
            on = " AND ".join(f"g.k{i} IS NOT DISTINCT FROM {a}.g{i}" for i in range(len(keys))) or "TRUE"
            text += f"\n  LEFT JOIN (\n{_indent(sub, 4)}\n  ) AS {a} ON {on}"
        return text, names

    def nest_level(self, spec: NestSpec, group: list[str], cols: dict[str, str], src: str) -> str:
        """Subquery with columns g0..gk (the group values) and arr (the nested array)."""
        cond = [f"{cols[c]} IS NOT NULL" for c in spec.presence]
        gsel = [f"{x} AS g{i}" for i, x in enumerate(group)]
        gby = "\nGROUP BY " + ", ".join(group) if group else ""
        subs = [(k, v) for k, v in spec.fields if isinstance(v, NestSpec)]
        if not subs:
            inner = NestSpec((), spec.element, spec.fields)
            agg = self.nest_agg(inner, cols)
            where = f"\nWHERE {self.conj(cond)}" if cond else ""
            return f"SELECT {', '.join(gsel + [agg + ' AS arr'])}\nFROM {src}{where}{gby}"
        plain = [(k, self.expr(v, cols)) for k, v in spec.fields if not isinstance(v, NestSpec)]
        lv_group = group + [x for _, x in plain]
        lv = self.fresh("lv")
        where = f"\nWHERE {self.conj(cond)}" if cond else ""
        level = f"SELECT DISTINCT {', '.join(f'{x} AS g{i}' for i, x in enumerate(lv_group)) or '1 AS one'}\nFROM {src}{where}"
        text_from = f"(\n{_indent(level)}\n) AS {lv}"
        fields: list[tuple[str, str]] = []
        pi = len(group)
        joins = []
        for k, v in spec.fields:
            if not isinstance(v, NestSpec):
                fields.append((k, f"{lv}.g{pi}"))
                pi += 1
                continue
            sa = self.fresh("sub")
            filtered = f"(SELECT * FROM {src} WHERE {self.conj(cond)}) AS {src}" if cond else src
            sub = self.nest_level(v, lv_group, cols, filtered)
            on = " AND ".join(f"{lv}.g{i} IS NOT DISTINCT FROM {sa}.g{i}" for i in range(len(lv_group))) or "TRUE"
            joins.append(f"\n  LEFT JOIN (\n{_indent(sub, 4)}\n  ) AS {sa} ON {on}")
            fields.append((k, f"COALESCE({sa}.arr, {self.p.empty_array.format()})"))
        outer_g = [f"{lv}.g{i} AS g{i}" for i in range(len(group))]
        agg = f"{self.p.array_agg}({self.row(fields)}) AS arr"
        text = f"SELECT {', '.join(outer_g + [agg])}\nFROM {text_from}" + "".join(joins)
        if group:
            text += "\nGROUP BY " + ", ".join(f"{lv}.g{i}" for i in range(len(group)))
        return text


def _expr_columns(e: Any) -> set[str]:
    if isinstance(e, Col):
        return {e.name}
    if isinstance(e, Coalesce):
        return _expr_columns(e.expr)
    if isinstance(e, Compose):
        return set().union(*(_expr_columns(x) for _, x in e.fields))
    return set()


def _nest_columns(spec: NestSpec) -> set[str]:
    out = set(spec.presence)
    if spec.element is not None:
        out |= _expr_columns(spec.element)
    for _, v in spec.fields:
        out |= _nest_columns(v) if isinstance(v, NestSpec) else _expr_columns(v)
    return out


def _group_columns(op: GroupNest) -> set[str]:
    out: set[str] = set()
    for _, e in op.keys:
        out |= _expr_columns(e)
    for _, _, e in op.aggs:
        out |= _expr_columns(e)
    for _, spec in op.nests:
        out |= _nest_columns(spec)
    return out


def _indent(text: str, n: int = 2) -> str:
    return "\n".join(" " * n + line for line in text.split("\n"))


def _select_text(items: list[str], r: _Rel) -> str:
    text = f"SELECT {', '.join(items)}\nFROM {r.from_}"
    if r.where:
        text += "\nWHERE " + " AND ".join(r.where)
    return text


def _items(items: list[tuple[str, str]], names: dict[str, str], derived: bool = True) -> list[str]:
    """Select-list entries; the alias is left out when the expression already carries the name."""
    out = []
    for n, x in items:
        name = names[n]
        if x == name or (derived and x.endswith("." + ident(name))):
            out.append(x)
        else:
            out.append(f"{x} AS {ident(name)}")
    return out


def _derived_names(items: list[tuple[str, str]]) -> dict[str, str]:
    """Column names for a derived table: the trailing identifier of a plain column reference,
    otherwise a sanitized form of the plan name; made unique."""
    out: dict[str, str] = {}
    taken: set[str] = set()
    for n, x in items:
        m = re.match(r'^[a-z_][a-z0-9_]*\.("?)([^".]+)\1$', x)
        base = m.group(2) if m else sanitize(n.split(".", 1)[-1] if "." in n else "c" + n.lstrip("#"))
        name, k = base, 1
        while name in taken:
            k += 1
            name = f"{base}_{k}"
        taken.add(name)
        out[n] = name
    return out


def emit_select(schema: ErSchema, mapping: Mapping, plan: PhysicalPlan, profile_name: str = "standard") -> str:
    """A single SELECT statement computing ``plan`` against the tables of ``emit_ddl``."""
    prof = profile(profile_name)
    d = design_of(schema, mapping)
    for op in walk(plan.root):
        if isinstance(op, FactorizedScan):
            raise EmitError(f"factorized not emittable: fragment {op.fragment}")
    em = _SelectEmitter(schema, d, prof)
    root = plan.root
    labels = dict(zip(plan.outputs, (lab for lab, _ in plan.columns)))
    if isinstance(root, GroupNest):
        return em.group(root, labels)[0] + "\n"
    if isinstance(root, Project):
        r = em.rel(root.child)
        exprs = dict(root.exprs)
        items = [(n, em.expr(exprs[n], r.cols)) for n in plan.outputs]
    else:
        r = em.rel(root)
        items = [(n, r.cols[n]) for n in plan.outputs]
    return _select_text(_items(items, labels, False), r) + "\n"


def emit_sql(schema: ErSchema, mapping: Mapping, plan: PhysicalPlan | None = None, profile: str = "standard") -> str:
    """DDL for ``mapping`` when no plan is given, otherwise the SELECT for ``plan``."""
    if plan is None:
        return emit_ddl(schema, mapping, profile)
    return emit_select(schema, mapping, plan, profile)
