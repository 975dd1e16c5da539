"""Compilation of bound DML statements into container write actions.

A write plan is a list of actions applied in order by the engine, all or nothing. Checks
(``assert_exists`` / ``assert_absent``) run against the store state at their position in the
list, so constraint violations surface before any row changes.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

from ..errors import CompileError, MappingError
from ..erql.binder import (
    BoundDelete,
    BoundDeleteRelationship,
    BoundInsertEntity,
    BoundInsertRelationship,
    BoundPurge,
    BoundQuery,
    BoundSet,
    BoundUpdate,
)
from ..mapping.design import Container, Design, design_of, role_key_columns
from ..mapping.model import Mapping
from ..model import ErSchema, leaf_units
from .rows import applies, element_row, entity_row, fk_values, fold_roles, get_path, mv_rows, rel_row

ACTIONS = (
    "insert",
    "update",
    "delete",
    "array_append",
    "array_remove",
    "nested_insert",
    "nested_delete",
    "assert_exists",
    "assert_absent",
)


@dataclass
class WriteAction:
    action: str
    container: str = ""
    key: tuple | None = None  # primary key of the target row (parent row for nested targets)
    element: tuple | None = None  # (array column, local key) selecting a nested element
    where: tuple = ()  # ((column, value), ...) selecting any number of rows
    row: dict | None = None
    set: tuple = ()
    expect: tuple = ()
    column: str | None = None
    value: Any = None
    targets: tuple = ()  # ((container id, classes or None), ...) for assertions
    match: tuple = ()
    optional: bool = False
    guard: bool = False  # a failed assert_exists skips the rest of the plan instead of raising
    message: str = ""

    def render(self) -> str:
        parts = [self.action]
        if self.targets:
            parts.append(",".join(t if c is None else f"{t}[{'|'.join(c)}]" for t, c in self.targets))
        elif self.container:
            parts.append(self.container)
        if self.key is not None:
            parts.append(f"key={list(self.key)}")
        if self.element is not None:
            parts.append(f"{self.element[0]}[{list(self.element[1])}]")
        for label, pairs in (("where", self.where), ("set", self.set), ("expect", self.expect), ("match", self.match)):
            if pairs:
                parts.append(label + " " + ", ".join(f"{c}={v!r}" for c, v in pairs))
        if self.row is not None:
            parts.append("row " + ", ".join(f"{c}={v!r}" for c, v in self.row.items()))
        if self.column is not None and self.action.startswith("array"):
            parts.append(f"{self.column} {self.value!r}")
        if self.optional:
            parts.append("(optional)")
        if self.guard:
            parts.append("(guard)")
        return " ".join(parts)


@dataclass
class WritePlan:
    actions: list[WriteAction] = field(default_factory=list)
    mapping: str = ""

    def count(self, action: str, container: str | None = None) -> int:
        return sum(1 for a in self.actions if a.action == action and (container is None or a.container == container))

    def containers(self, action: str | None = None) -> list[str]:
        out: list[str] = []
        for a in self.actions:
            if (action is None or a.action == action) and a.container and a.container not in out:
                out.append(a.container)
        return out

    def render(self) -> str:
        return "".join(a.render() + "\n" for a in self.actions)


class _CrudCompiler:
    def __init__(self, schema: ErSchema, design: Design):
        self.s = schema
        self.d = design
        self.out: list[WriteAction] = []

    def emit(self, action: str, **kw) -> None:
        self.out.append(WriteAction(action, **kw))

    # ---- helpers -----------------------------------------------------------------------

    def instance_targets(self, entity: str, typed: bool = True) -> tuple:
        return tuple((c.id, tuple(sorted(f)) if (f is not None and typed) else None) for c, f in self.d.sources(entity))

    def locate(self, h: Container, key: tuple) -> dict:
        """Target arguments addressing the row (or nested element) of instance ``key`` in ``h``."""
        if h.parent is None:
            return {"container": h.id, "key": key}
        n = len(h.parent.key_columns)
        return {"container": h.parent.id, "key": key[:n], "element": (h.array_column, key[n:])}

    def exploded(self, unit: tuple) -> list[Container]:
        return [h for h in self.d.unit_hosts(unit) if h.kind == "multivalued"]

    def array_hosts(self, unit: tuple) -> list[Container]:
        return [h for h in self.d.unit_hosts(unit) if h.kind == "entity"]

    # ---- inserts --------------------------------------------------------------------------

    def insert_entity(self, st: BoundInsertEntity) -> None:
        s, d = self.s, self.d
        cls, key, doc = st.entity, st.key, st.doc
        root = s.root(cls)
        self.emit("assert_absent", targets=self.instance_targets(root, typed=False), key=key, message=f"{cls}: duplicate key {list(key)}")
        owner = s.entity(cls).weak_owner
        if owner is not None:
            n = len(s.key_closure(owner))
            self.emit(
                "assert_exists",
                targets=self.instance_targets(owner),
                key=key[:n],
                message=f"{cls}: owner {owner} {list(key[:n])} does not exist",
            )
        for c in d.all_containers():
            if c.kind != "entity" or cls not in c.inst_classes:
                continue
            row = entity_row(d, c, cls, doc)
            if c.parent is None:
                self.emit("insert", container=c.id, row=row, message=f"{cls}: duplicate key {list(key)}")
            else:
                n = len(c.parent.key_columns)
                self.emit(
                    "nested_insert",
                    container=c.parent.id,
                    key=key[:n],
                    column=c.array_column,
                    row=row,
                    message=f"{cls}: duplicate key {list(key)}",
                )
        for c in d.containers:
            if c.kind == "multivalued" and applies(s, ("mv", c.mv[0]), cls):
                for r in mv_rows(c, key, get_path(doc, c.mv[1])):
                    self.emit("insert", container=c.id, row=r, message=f"{cls}: duplicate element in {'.'.join(c.mv[1])}")

    def insert_relationship(self, st: BoundInsertRelationship) -> None:
        s, d = self.s, self.d
        r = s.relationship(st.relationship)
        keys = st.keys
        for p, k in zip(r.participants, keys):
            self.emit("assert_exists", targets=self.instance_targets(p.entity), key=k, message=f"{r.name}: {p.role} {list(k)} does not exist")
        dup = f"{r.name}: duplicate instance {[list(k) for k in keys]}"
        for c, mode in d.rel_hosts.get(r.name, []):
            if mode == "fk":
                m, o = fold_roles(d, r.name)
                fkcols = c.units[("fk", r.name)]
                self.emit("assert_absent", targets=((c.id, None),), key=keys[m], match=tuple(zip(fkcols, keys[o])), message=dup)
        for c, mode in d.rel_hosts.get(r.name, []):
            if mode == "fk":
                m, o = fold_roles(d, r.name)
                fkcols = c.units[("fk", r.name)]
                violation = f"{r.name}: cardinality violation, {[list(keys[m])]} already linked"
                if r.kind == "one_to_one":
                    self.emit(
                        "assert_absent",
                        targets=((c.id, None),),
                        match=tuple(zip(fkcols, keys[o])),
                        message=f"{r.name}: cardinality violation, {[list(keys[o])]} already linked",
                    )
                vals = fk_values(d, c, r.name, keys[o], st.attrs)
                self.emit(
                    "update",
                    **self.locate(c, keys[m]),
                    set=tuple(vals.items()),
                    expect=tuple((col, None) for col in fkcols),
                    optional=True,
                    message=violation,
                )
            else:
                self.emit("assert_absent", targets=((c.id, None),), key=_flat(keys), message=dup)
                for i, p in enumerate(r.participants):
                    if p.cardinality != "one":
                        continue
                    for j, q in enumerate(r.participants):
                        if j == i:
                            continue
                        cols = role_key_columns(s, q.role, q.entity)
                        self.emit(
                            "assert_absent",
                            targets=((c.id, None),),
                            match=tuple(zip(cols, keys[j])),
                            message=f"{r.name}: cardinality violation, {[list(keys[j])]} already linked",
                        )
                self.emit("insert", container=c.id, row=rel_row(d, c, keys, st.attrs), message=dup)

    # ---- deletes ----------------------------------------------------------------------------

    def delete_relationship(self, st: BoundDeleteRelationship) -> None:
        d = self.d
        name, keys = st.relationship, st.keys
        missing = f"{name}: instance {[list(k) for k in keys]} does not exist"
        hosts = d.rel_hosts.get(name, [])
        fk = [c for c, m in hosts if m == "fk"]
        if fk:
            m, o = fold_roles(d, name)
            self.emit(
                "assert_exists",
                targets=tuple((c.id, None) for c in fk),
                key=keys[m],
                match=tuple(zip(fk[0].units[("fk", name)], keys[o])),
                message=missing,
            )
            for c in fk:
                vals = fk_values(d, c, name, None, None)
                self.emit(
                    "update",
                    **self.locate(c, keys[m]),
                    set=tuple(vals.items()),
                    expect=tuple(zip(c.units[("fk", name)], keys[o])),
                    optional=True,
                    message=missing,
                )
        for c, mode in hosts:
            if mode != "fk":
                self.emit("delete", container=c.id, key=_flat(keys), message=missing)

    def cascade(self, entity: str, key: tuple) -> None:
        """Remove instance ``key`` of ``entity``'s hierarchy with everything that depends on it."""
        s, d = self.s, self.d
        fam = set(s.family(entity))
        deps = s.weak_dependents(entity)
        related = fam | set(deps)
        n = len(key)
        for r in s.relationships:
            if s.is_identifying(r.name):
                continue
            for i, p in enumerate(r.participants):
                if p.entity not in related:
                    continue
                for c, mode in d.rel_hosts.get(r.name, []):
                    if mode == "fk":
                        m, o = fold_roles(d, r.name)
                        if i != o:
                            continue
                        cols = c.units[("fk", r.name)][:n]
                        vals = fk_values(d, c, r.name, None, None)
                        self.emit("update", container=c.id, where=tuple(zip(cols, key)), set=tuple(vals.items()), optional=True)
                    else:
                        cols = role_key_columns(s, p.role, p.entity)[:n]
                        self.emit("delete", container=c.id, where=tuple(zip(cols, key)), optional=True)
        for w in deps:
            for c in d.all_containers():
                if c.kind == "entity" and c.entity == w and c.parent is None:
                    self.emit("delete", container=c.id, where=tuple(zip(c.key_columns[:n], key)), optional=True)
        for c in d.containers:
            if c.kind == "multivalued" and c.mv[0] in related:
                self.emit("delete", container=c.id, where=tuple(zip(c.key_columns[:n], key)), optional=True)
        for c in d.all_containers():
            if c.kind != "entity" or not (c.classes & fam):
                continue
            if c.parent is not None:
                pn = len(c.parent.key_columns)
                self.emit("nested_delete", container=c.parent.id, key=key[:pn], element=(c.array_column, key[pn:]), optional=True)
            elif c.group in ("left", "right"):
                self.emit("nested_delete", container=c.id, key=key, optional=True)
            else:
                self.emit("delete", container=c.id, key=key, optional=True)

    def delete_entity(self, st, guard: bool) -> None:
        self.emit(
            "assert_exists",
            targets=self.instance_targets(st.entity),
            key=st.key,
            guard=guard,
            message=f"{st.entity}: no instance with key {list(st.key)}",
        )
        self.cascade(st.entity, st.key)

    # ---- updates ------------------------------------------------------------------------------

    def update(self, st: BoundUpdate) -> None:
        key = st.key
        self.emit("assert_exists", targets=self.instance_targets(st.entity), key=key, message=f"{st.entity}: no instance with key {list(key)}")
        for bs in st.sets:
            self.update_set(st.entity, key, bs)

    def update_set(self, entity: str, key: tuple, bs: BoundSet) -> None:
        d = self.d
        name = ".".join(bs.names)
        if not bs.attr.is_multi:
            if bs.attr.is_composite:
                pairs = [(("mv" if a.is_multi else "attr", bs.owner, bs.names + sub), get_path(bs.value, sub)) for sub, a in leaf_units(bs.attr.children)]
            else:
                pairs = [(("attr", bs.owner, bs.names), bs.value)]
            for u, v in pairs:
                if u[0] == "mv":
                    self.replace_array(u, key, v)
                    continue
                for h in d.unit_hosts(u):
                    self.emit("update", **self.locate(h, key), set=((h.units[u][0], v),), optional=True)
            return
        u = ("mv", bs.owner, bs.names)
        if bs.op == "=":
            self.replace_array(u, key, bs.value)
            return
        verb = "already contains" if bs.op == "+=" else "does not contain"
        message = f"{name} {verb} {bs.value!r}"
        for h in self.array_hosts(u):
            self.emit(
                "array_append" if bs.op == "+=" else "array_remove",
                **self.locate(h, key),
                column=h.units[u][0],
                value=bs.value,
                message=message,
            )
        for h in self.exploded(u):
            if bs.op == "+=":
                self.emit("insert", container=h.id, row=mv_rows(h, key, [bs.value])[0], message=message)
            else:
                n = len(key)
                where = tuple(zip(h.key_columns[:n], key)) + tuple(element_row(h, bs.value).items())
                self.emit("delete", container=h.id, where=where, message=message)

    def replace_array(self, u: tuple, key: tuple, value) -> None:
        for h in self.array_hosts(u):
            self.emit("update", **self.locate(h, key), set=((h.units[u][0], list(value or [])),), optional=True)
        for h in self.exploded(u):
            n = len(key)
            self.emit("delete", container=h.id, where=tuple(zip(h.key_columns[:n], key)), optional=True)
            for r in mv_rows(h, key, value or []):
                self.emit("insert", container=h.id, row=r, message=f"duplicate element in {'.'.join(u[2])}")


def _flat(keys: tuple[tuple, ...]) -> tuple:
    return tuple(v for k in keys for v in k)


def compile_crud(schema: ErSchema, mapping: Mapping, stmt) -> WritePlan:
    """Write plan for one DML statement (text, AST, or bound)."""
    from ..erql import bind, parse_statement as parse

    if isinstance(stmt, str):
        stmt = parse(stmt)
    st = bind(schema, stmt)
    if isinstance(st, BoundQuery):
        raise CompileError("queries do not write; use compile_query")
    design = design_of(schema, mapping)
    c = _CrudCompiler(schema, design)
    try:
        if isinstance(st, BoundInsertEntity):
            c.insert_entity(st)
        elif isinstance(st, BoundInsertRelationship):
            c.insert_relationship(st)
        elif isinstance(st, BoundDeleteRelationship):
            c.delete_relationship(st)
        elif isinstance(st, BoundUpdate):
            c.update(st)
        elif isinstance(st, BoundDelete):
            c.delete_entity(st, guard=False)
        elif isinstance(st, BoundPurge):
            c.delete_entity(st, guard=True)
        else:
            raise CompileError(f"cannot compile {type(st).__name__}")
    except MappingError as e:
        raise CompileError(str(e)) from None
    return WritePlan(c.out, mapping.name)


def purge_compile(schema: ErSchema, mapping: Mapping, entity: str, key) -> WritePlan:
    """Idempotent removal of an instance with all its copies, relationship instances, and
    weak dependents; a missing instance is a no-op."""
    from ..values import conform_key

    if not schema.has_entity(entity):
        raise CompileError(f"unknown entity {entity}")
    k = conform_key(schema, entity, key if isinstance(key, (list, tuple)) else (key,))
    return compile_crud(schema, mapping, BoundPurge(entity, k))
